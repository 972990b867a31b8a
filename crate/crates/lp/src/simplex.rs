//! Two-phase bounded-variable primal simplex on a dense tableau.
//!
//! Every kept variable is shifted so its working column lives in `[0, ub]`
//! with `ub` possibly infinite; upper bounds are handled by bound flips
//! rather than extra rows. Pricing is Dantzig's rule, switching to Bland's
//! smallest-index rule after a run of degenerate pivots. Ties are always
//! broken by index, so a given problem is solved identically every time.

use crate::dense::invert;
use crate::presolve::{presolve, Reduced, VarState};
use crate::problem::{LpProblem, Sense, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot budget ran out before optimality was proven.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Largest bound or row violation of `values` against the original problem.
    pub max_violation: f64,
}

impl LpSolution {
    pub fn value(&self, id: VarId) -> f64 {
        self.values[id.index()]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility tolerance on original rows and bounds.
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for an improving column.
    pub optimality_tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
    /// Pivots between fresh reinversions of the basis.
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 200_000,
            stall_threshold: 50,
            refactor_interval: 400,
        }
    }
}

pub fn solve(problem: &LpProblem) -> LpSolution {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &LpProblem, opts: &SolverOptions) -> LpSolution {
    let n = problem.num_variables();
    let Some(reduced) = presolve(problem, opts.feasibility_tol) else {
        return finish(problem, LpStatus::Infeasible, vec![0.0; n], 0);
    };
    let sf = StandardForm::build(&reduced);
    let mut tab = Tableau::new(&sf, opts);

    let mut status = LpStatus::Optimal;
    if sf.has_artificials {
        match tab.run() {
            Outcome::Optimal => {
                if tab.artificial_sum() > opts.feasibility_tol * 1e-2 {
                    status = LpStatus::Infeasible;
                }
            }
            Outcome::Unbounded => status = LpStatus::Infeasible,
            Outcome::IterationLimit => status = LpStatus::IterationLimit,
        }
    }
    if status == LpStatus::Optimal {
        tab.enter_phase_two();
        status = match tab.run() {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::IterationLimit => LpStatus::IterationLimit,
        };
    }
    let values = sf.recover(&reduced, &tab.column_values());
    finish(problem, status, values, tab.iterations)
}

fn finish(
    problem: &LpProblem,
    status: LpStatus,
    values: Vec<f64>,
    iterations: usize,
) -> LpSolution {
    let objective = match status {
        LpStatus::Optimal | LpStatus::IterationLimit => problem.objective_value(&values),
        LpStatus::Infeasible => f64::NAN,
        LpStatus::Unbounded => f64::NEG_INFINITY,
    };
    let max_violation = problem.max_violation(&values);
    LpSolution {
        status,
        objective,
        values,
        iterations,
        max_violation,
    }
}

#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = offset + y`
    Shift { col: usize, offset: f64 },
    /// `x = offset - y`
    Flip { col: usize, offset: f64 },
    /// `x = y_pos - y_neg`
    Split { pos: usize, neg: usize },
}

/// `A y = b`, `0 <= y <= ub`, one slack per inequality and one artificial per
/// row that cannot start with its slack basic.
struct StandardForm {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    is_artificial: Vec<bool>,
    initial_basis: Vec<usize>,
    col_map: Vec<ColMap>,
    has_artificials: bool,
}

impl StandardForm {
    fn build(r: &Reduced) -> Self {
        let mut sf = StandardForm {
            m: r.rows.len(),
            cols: Vec::new(),
            b: Vec::with_capacity(r.rows.len()),
            ub: Vec::new(),
            cost: Vec::new(),
            is_artificial: Vec::new(),
            initial_basis: Vec::with_capacity(r.rows.len()),
            col_map: Vec::with_capacity(r.num_kept()),
            has_artificials: false,
        };
        for k in 0..r.num_kept() {
            let (l, u, c) = (r.lower[k], r.upper[k], r.cost[k]);
            let map = if l.is_finite() {
                ColMap::Shift {
                    col: sf.push_col(u - l, c, false),
                    offset: l,
                }
            } else if u.is_finite() {
                ColMap::Flip {
                    col: sf.push_col(f64::INFINITY, -c, false),
                    offset: u,
                }
            } else {
                ColMap::Split {
                    pos: sf.push_col(f64::INFINITY, c, false),
                    neg: sf.push_col(f64::INFINITY, -c, false),
                }
            };
            sf.col_map.push(map);
        }

        for (i, row) in r.rows.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(row.terms.len() + 1);
            let mut rhs = row.rhs;
            for &(k, a) in &row.terms {
                match sf.col_map[k] {
                    ColMap::Shift { col, offset } => {
                        entries.push((col, a));
                        rhs -= a * offset;
                    }
                    ColMap::Flip { col, offset } => {
                        entries.push((col, -a));
                        rhs -= a * offset;
                    }
                    ColMap::Split { pos, neg } => {
                        entries.push((pos, a));
                        entries.push((neg, -a));
                    }
                }
            }
            let mut sense = row.sense;
            if sense == Sense::Ge {
                entries.iter_mut().for_each(|e| e.1 = -e.1);
                rhs = -rhs;
                sense = Sense::Le;
            }
            let scale = entries.iter().fold(0.0_f64, |s, e| s.max(e.1.abs()));
            if scale > 0.0 {
                entries.iter_mut().for_each(|e| e.1 /= scale);
                rhs /= scale;
            }
            let mut needs_artificial = sense == Sense::Eq;
            if sense == Sense::Le {
                let slack = sf.push_col(f64::INFINITY, 0.0, false);
                entries.push((slack, 1.0));
                if rhs >= 0.0 {
                    sf.initial_basis.push(slack);
                } else {
                    needs_artificial = true;
                }
            }
            if needs_artificial {
                if rhs < 0.0 {
                    entries.iter_mut().for_each(|e| e.1 = -e.1);
                    rhs = -rhs;
                }
                let art = sf.push_col(f64::INFINITY, 0.0, true);
                entries.push((art, 1.0));
                sf.initial_basis.push(art);
                sf.has_artificials = true;
            }
            for (col, a) in entries {
                sf.cols[col].push((i, a));
            }
            sf.b.push(rhs);
        }
        sf
    }

    fn push_col(&mut self, ub: f64, cost: f64, artificial: bool) -> usize {
        self.cols.push(Vec::new());
        self.ub.push(ub);
        self.cost.push(cost);
        self.is_artificial.push(artificial);
        self.cols.len() - 1
    }

    fn recover(&self, r: &Reduced, y: &[f64]) -> Vec<f64> {
        r.var_state
            .iter()
            .map(|s| match *s {
                VarState::Fixed(v) => v,
                VarState::Kept(k) => match self.col_map[k] {
                    ColMap::Shift { col, offset } => offset + y[col],
                    ColMap::Flip { col, offset } => offset - y[col],
                    ColMap::Split { pos, neg } => y[pos] - y[neg],
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    /// `B^-1 A`, row-major.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm, opts: &'a SolverOptions) -> Self {
        let (m, n) = (sf.m, sf.cols.len());
        let mut t = vec![0.0; m * n];
        for (j, col) in sf.cols.iter().enumerate() {
            for &(i, a) in col {
                t[i * n + j] = a;
            }
        }
        let mut state = vec![ColState::Lower; n];
        for &j in &sf.initial_basis {
            state[j] = ColState::Basic;
        }
        let cost: Vec<f64> = sf
            .is_artificial
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect();
        let mut tab = Tableau {
            sf,
            opts,
            m,
            n,
            t,
            beta: sf.b.clone(),
            basis: sf.initial_basis.clone(),
            state,
            ub: sf.ub.clone(),
            cost,
            d: vec![0.0; n],
            iterations: 0,
            since_refactor: 0,
        };
        tab.price_from_tableau();
        tab
    }

    fn price_from_tableau(&mut self) {
        let n = self.n;
        self.d.copy_from_slice(&self.cost);
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = self.cost[bj];
            if cb != 0.0 {
                let row = &self.t[i * n..(i + 1) * n];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for &bj in &self.basis {
            self.d[bj] = 0.0;
        }
    }

    fn enter_phase_two(&mut self) {
        for j in 0..self.n {
            if self.sf.is_artificial[j] {
                self.ub[j] = 0.0;
                if self.state[j] == ColState::Upper {
                    self.state[j] = ColState::Lower;
                }
            }
        }
        self.cost.copy_from_slice(&self.sf.cost);
        self.price_from_tableau();
    }

    fn artificial_sum(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.beta)
            .filter(|(&j, _)| self.sf.is_artificial[j])
            .map(|(_, &v)| v.max(0.0))
            .sum()
    }

    fn column_values(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for ((y, s), &u) in y.iter_mut().zip(&self.state).zip(&self.ub) {
            if *s == ColState::Upper {
                *y = u;
            }
        }
        for (i, &j) in self.basis.iter().enumerate() {
            y[j] = self.beta[i].clamp(0.0, self.ub[j]);
        }
        y
    }

    fn run(&mut self) -> Outcome {
        let mut bland = false;
        let mut stall = 0usize;
        let mut verifications = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Outcome::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_interval {
                self.refactor();
            }
            let Some((j, dir)) = self.select_entering(bland) else {
                // Confirm optimality on a freshly inverted basis.
                if self.since_refactor == 0 || verifications >= 3 {
                    return Outcome::Optimal;
                }
                verifications += 1;
                self.refactor();
                continue;
            };
            let Some((theta, leave)) = self.ratio_test(j, dir, bland) else {
                return Outcome::Unbounded;
            };
            let gain = theta * self.d[j].abs();
            self.step(j, dir, theta, leave);
            self.iterations += 1;
            self.since_refactor += 1;
            if gain <= 1e-12 {
                stall += 1;
                if stall >= self.opts.stall_threshold {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }
        }
    }

    fn select_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n {
            let (dir, score) = match self.state[j] {
                ColState::Basic => continue,
                ColState::Lower if self.ub[j] > 0.0 && self.d[j] < -tol => (1.0, -self.d[j]),
                ColState::Upper if self.d[j] > tol => (-1.0, self.d[j]),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Returns the step length and the leaving row, or `None` for a bound
    /// flip of the entering column. `None` overall means unbounded.
    fn ratio_test(&self, j: usize, dir: f64, bland: bool) -> Option<(f64, Option<usize>)> {
        let n = self.n;
        let piv_tol = self.opts.pivot_tol;
        let mut theta = self.ub[j];
        let mut leave: Option<usize> = None;
        let mut best_alpha = 0.0;
        for i in 0..self.m {
            let alpha = dir * self.t[i * n + j];
            let limit = if alpha > piv_tol {
                self.beta[i].max(0.0) / alpha
            } else if alpha < -piv_tol {
                let u = self.ub[self.basis[i]];
                if u.is_infinite() {
                    continue;
                }
                (u - self.beta[i]).max(0.0) / -alpha
            } else {
                continue;
            };
            let eps = 1e-12 * theta.max(1.0);
            let take = if theta.is_infinite() || limit < theta - eps {
                true
            } else if limit <= theta + eps {
                match leave {
                    Some(l) if bland => self.basis[i] < self.basis[l],
                    Some(_) => alpha.abs() > best_alpha,
                    // Prefer the cheaper bound flip on a tie.
                    None => false,
                }
            } else {
                false
            };
            if take {
                theta = theta.min(limit);
                leave = Some(i);
                best_alpha = alpha.abs();
            }
        }
        if theta.is_infinite() {
            None
        } else {
            Some((theta, leave))
        }
    }

    fn step(&mut self, j: usize, dir: f64, theta: f64, leave: Option<usize>) {
        let n = self.n;
        let delta = dir * theta;
        if delta != 0.0 {
            for i in 0..self.m {
                let tij = self.t[i * n + j];
                if tij != 0.0 {
                    self.beta[i] -= delta * tij;
                }
            }
        }
        match leave {
            None => {
                self.state[j] = if dir > 0.0 {
                    ColState::Upper
                } else {
                    ColState::Lower
                };
            }
            Some(r) => {
                let q = self.basis[r];
                let alpha = dir * self.t[r * n + j];
                let start = if self.state[j] == ColState::Upper {
                    self.ub[j]
                } else {
                    0.0
                };
                self.state[q] = if alpha > 0.0 {
                    ColState::Lower
                } else {
                    ColState::Upper
                };
                self.beta[r] = start + delta;
                self.basis[r] = j;
                self.state[j] = ColState::Basic;
                self.pivot(r, j);
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let piv = self.t[r * n + j];
        let mut pivot_row: Vec<(usize, f64)> = Vec::new();
        for k in 0..n {
            let v = self.t[r * n + k];
            if v != 0.0 {
                let scaled = v / piv;
                self.t[r * n + k] = scaled;
                pivot_row.push((k, scaled));
            }
        }
        self.t[r * n + j] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            for &(k, v) in &pivot_row {
                let updated = row[k] - f * v;
                row[k] = if updated.abs() < 1e-14 { 0.0 } else { updated };
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &(k, v) in &pivot_row {
                self.d[k] -= f * v;
            }
        }
        self.d[j] = 0.0;
    }

    /// Rebuilds the tableau, basic values and reduced costs from the
    /// original columns and a fresh inverse of the current basis.
    fn refactor(&mut self) {
        self.since_refactor = 0;
        let (m, n) = (self.m, self.n);
        if m == 0 {
            self.price_from_tableau();
            return;
        }
        let mut bmat = vec![0.0; m * m];
        for (i, &bj) in self.basis.iter().enumerate() {
            for &(r, a) in &self.sf.cols[bj] {
                bmat[r * m + i] = a;
            }
        }
        let Some(binv) = invert(&bmat, m) else {
            return;
        };
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for (j, col) in self.sf.cols.iter().enumerate() {
            for &(r, a) in col {
                for i in 0..m {
                    let w = binv[i * m + r];
                    if w != 0.0 {
                        self.t[i * n + j] += w * a;
                    }
                }
            }
        }
        for (i, &bj) in self.basis.iter().enumerate() {
            for k in 0..m {
                self.t[k * n + bj] = if k == i { 1.0 } else { 0.0 };
            }
        }
        let mut rhs = self.sf.b.clone();
        for j in 0..n {
            if self.state[j] == ColState::Upper {
                for &(r, a) in &self.sf.cols[j] {
                    rhs[r] -= a * self.ub[j];
                }
            }
        }
        for i in 0..m {
            self.beta[i] = (0..m).map(|k| binv[i * m + k] * rhs[k]).sum();
        }
        self.price_from_tableau();
    }
}
