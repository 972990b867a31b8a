//! Cross-checks the simplex against brute-force vertex enumeration on small
//! random LPs with boxed variables.

use evsched_lp::{solve, LpProblem, LpStatus, Sense};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense description of a random LP, kept separate from `LpProblem` so the
/// oracle never reads solver-side data structures.
#[derive(Debug, Clone)]
struct RandomLp {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

impl RandomLp {
    fn generate(seed: u64, guarantee_feasible: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for _ in 0..n {
            let l: f64 = rng.random_range(-3.0..2.0);
            let width = if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.5..5.0)
            };
            lower.push(l);
            upper.push(l + width);
        }
        let cost = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let point: Vec<f64> = (0..n)
            .map(|j| lower[j] + rng.random::<f64>() * (upper[j] - lower[j]))
            .collect();
        let rows = (0..m)
            .map(|_| {
                let coefs: Vec<f64> = (0..n)
                    .map(|_| {
                        if rng.random_bool(0.25) {
                            0.0
                        } else {
                            rng.random_range(-5.0..5.0)
                        }
                    })
                    .collect();
                let sense = match rng.random_range(0..5) {
                    0 => Sense::Eq,
                    1 | 2 => Sense::Le,
                    _ => Sense::Ge,
                };
                let at_point: f64 = coefs.iter().zip(&point).map(|(a, x)| a * x).sum();
                let rhs = if guarantee_feasible {
                    match sense {
                        Sense::Eq => at_point,
                        Sense::Le => at_point + rng.random_range(0.0..2.0),
                        Sense::Ge => at_point - rng.random_range(0.0..2.0),
                    }
                } else {
                    rng.random_range(-10.0..10.0)
                };
                (coefs, sense, rhs)
            })
            .collect();
        RandomLp {
            lower,
            upper,
            cost,
            rows,
        }
    }

    fn to_problem(&self) -> LpProblem {
        let mut p = LpProblem::new();
        let ids: Vec<_> = (0..self.lower.len())
            .map(|j| {
                p.add_variable(self.lower[j], self.upper[j], self.cost[j], format!("x{j}"))
                    .unwrap()
            })
            .collect();
        for (i, (coefs, sense, rhs)) in self.rows.iter().enumerate() {
            let terms = ids.iter().zip(coefs).map(|(&id, &a)| (id, a));
            p.add_constraint(terms, *sense, *rhs, format!("r{i}"))
                .unwrap();
        }
        p
    }

    fn feasible(&self, x: &[f64], tol: f64) -> bool {
        let bounds = x
            .iter()
            .enumerate()
            .all(|(j, &v)| v >= self.lower[j] - tol && v <= self.upper[j] + tol);
        bounds
            && self.rows.iter().all(|(a, sense, b)| {
                let lhs: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                match sense {
                    Sense::Le => lhs <= b + tol,
                    Sense::Ge => lhs >= b - tol,
                    Sense::Eq => (lhs - b).abs() <= tol,
                }
            })
    }

    /// Minimum over all basic feasible points: every choice of `n` tight
    /// hyperplanes from the rows and the variable bounds.
    fn vertex_optimum(&self) -> Option<f64> {
        let n = self.lower.len();
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for (a, _, b) in &self.rows {
            planes.push((a.clone(), *b));
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e.clone(), self.lower[j]));
            planes.push((e, self.upper[j]));
        }
        let mut best: Option<f64> = None;
        // Equalities are enforced by the feasibility filter.
        for subset in combinations(planes.len(), n) {
            let mat: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
            let rhs: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
            let Some(x) = gauss_solve(mat, rhs) else {
                continue;
            };
            if !self.feasible(&x, 1e-7) {
                continue;
            }
            let obj: f64 = self.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
        best
    }
}

fn combinations(total: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..total {
            cur.push(i);
            rec(i + 1, total, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, total, k, &mut Vec::new(), &mut out);
    out
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(p, col);
        b.swap(p, col);
        let pivot = a[col].clone();
        for r in col + 1..n {
            let f = a[r][col] / pivot[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[test]
fn matches_vertex_enumeration_on_feasible_boxes() {
    for seed in 0..200 {
        let lp = RandomLp::generate(seed, true);
        let expected = lp
            .vertex_optimum()
            .expect("generator guarantees feasibility");
        let sol = solve(&lp.to_problem());
        assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}: {lp:?}");
        assert!(
            (sol.objective - expected).abs() <= 1e-6,
            "seed {seed}: simplex {} vs oracle {expected}",
            sol.objective
        );
        assert!(sol.max_violation <= 1e-6, "seed {seed}");
    }
}

#[test]
fn status_agrees_with_oracle_on_unconstrained_rhs() {
    let mut infeasible = 0;
    for seed in 1000..1200 {
        let lp = RandomLp::generate(seed, false);
        let sol = solve(&lp.to_problem());
        match lp.vertex_optimum() {
            Some(expected) => {
                assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
                assert!((sol.objective - expected).abs() <= 1e-6, "seed {seed}");
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, LpStatus::Infeasible, "seed {seed}");
            }
        }
    }
    assert!(infeasible > 0, "sample should contain infeasible instances");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_solutions_are_certified_and_deterministic(seed in 0u64..1_000_000) {
        let p = RandomLp::generate(seed, true).to_problem();
        let a = solve(&p);
        let b = solve(&p);
        prop_assert_eq!(a.status, LpStatus::Optimal);
        let worst = p
            .constraints()
            .iter()
            .map(|c| c.violation(&a.values))
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-6);
        for (v, x) in p.variables().iter().zip(&a.values) {
            prop_assert!(*x >= v.lower - 1e-9 && *x <= v.upper + 1e-9);
        }
        prop_assert_eq!(a.values, b.values);
    }
}
