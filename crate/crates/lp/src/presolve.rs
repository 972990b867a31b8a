//! Bound tightening from singleton rows and substitution of fixed variables.
//!
//! The aggregator models emit many single-variable rows (per-step power
//! limits, zero-flow rows for disconnected steps). Folding them into bounds
//! keeps the simplex tableau close to the size of the coupling rows only.

use crate::problem::{LpProblem, Sense};

const COEF_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum VarState {
    Fixed(f64),
    Kept(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct ReducedRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub var_state: Vec<VarState>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    pub rows: Vec<ReducedRow>,
}

impl Reduced {
    pub fn num_kept(&self) -> usize {
        self.lower.len()
    }
}

struct WorkRow {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

/// Returns `None` when presolve proves the problem infeasible.
pub(crate) fn presolve(p: &LpProblem, tol: f64) -> Option<Reduced> {
    let n = p.num_variables();
    let mut lo: Vec<f64> = p.variables().iter().map(|v| v.lower).collect();
    let mut hi: Vec<f64> = p.variables().iter().map(|v| v.upper).collect();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut rows: Vec<Option<WorkRow>> = p
        .constraints()
        .iter()
        .map(|c| {
            Some(WorkRow {
                terms: c.terms.iter().map(|&(v, a)| (v.index(), a)).collect(),
                sense: c.sense,
                rhs: c.rhs,
            })
        })
        .collect();

    for j in 0..n {
        if lo[j] == hi[j] {
            fixed[j] = Some(lo[j]);
        }
    }

    loop {
        let mut changed = false;
        for slot in rows.iter_mut() {
            let Some(row) = slot else { continue };
            let mut rhs = row.rhs;
            row.terms.retain(|&(j, a)| match fixed[j] {
                Some(v) => {
                    rhs -= a * v;
                    false
                }
                None => a.abs() > COEF_EPS,
            });
            row.rhs = rhs;
            match row.terms.len() {
                0 => {
                    let ok = match row.sense {
                        Sense::Le => rhs >= -tol,
                        Sense::Ge => rhs <= tol,
                        Sense::Eq => rhs.abs() <= tol,
                    };
                    if !ok {
                        return None;
                    }
                    *slot = None;
                    changed = true;
                }
                1 => {
                    let (j, a) = row.terms[0];
                    let bound = rhs / a;
                    let (tighten_upper, tighten_lower) = match (row.sense, a > 0.0) {
                        (Sense::Eq, _) => (true, true),
                        (Sense::Le, true) | (Sense::Ge, false) => (true, false),
                        (Sense::Le, false) | (Sense::Ge, true) => (false, true),
                    };
                    if tighten_upper && bound < hi[j] {
                        hi[j] = bound;
                    }
                    if tighten_lower && bound > lo[j] {
                        lo[j] = bound;
                    }
                    *slot = None;
                    changed = true;
                }
                _ => {}
            }
        }
        for j in 0..n {
            if fixed[j].is_some() {
                continue;
            }
            if lo[j] > hi[j] {
                if lo[j] - hi[j] > tol {
                    return None;
                }
                let mid = 0.5 * (lo[j] + hi[j]);
                lo[j] = mid;
                hi[j] = mid;
            }
            if lo[j].is_finite() && hi[j] - lo[j] <= COEF_EPS * lo[j].abs().max(1.0) {
                fixed[j] = Some(lo[j]);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut var_state = Vec::with_capacity(n);
    let (mut lower, mut upper, mut cost) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..n {
        match fixed[j] {
            Some(v) => var_state.push(VarState::Fixed(v)),
            None => {
                var_state.push(VarState::Kept(lower.len()));
                lower.push(lo[j]);
                upper.push(hi[j]);
                cost.push(p.variables()[j].cost);
            }
        }
    }
    let rows = rows
        .into_iter()
        .flatten()
        .map(|r| ReducedRow {
            terms: r
                .terms
                .into_iter()
                .map(|(j, a)| match var_state[j] {
                    VarState::Kept(k) => (k, a),
                    VarState::Fixed(_) => unreachable!("fixed variables are substituted"),
                })
                .collect(),
            sense: r.sense,
            rhs: r.rhs,
        })
        .collect();
    Some(Reduced {
        var_state,
        lower,
        upper,
        cost,
        rows,
    })
}
