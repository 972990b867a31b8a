//! Independent feasibility check of a schedule against the full physical
//! constraint set, regardless of which limits the optimizer was given.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::degradation::plane_values;
use crate::domain::Scenario;
use crate::model::FleetSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConstraintKind {
    Nonnegativity,
    CpLimit,
    ObcLimit,
    CvTaper,
    FastLimit,
    Degradation,
    Balance,
    SoeBounds,
    TerminalSoe,
}

impl ConstraintKind {
    pub const ALL: [Self; 9] = [
        Self::Nonnegativity,
        Self::CpLimit,
        Self::ObcLimit,
        Self::CvTaper,
        Self::FastLimit,
        Self::Degradation,
        Self::Balance,
        Self::SoeBounds,
        Self::TerminalSoe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nonnegativity => "nonnegativity",
            Self::CpLimit => "CP limit",
            Self::ObcLimit => "OBC limit",
            Self::CvTaper => "CV taper",
            Self::FastLimit => "fast limit",
            Self::Degradation => "degradation",
            Self::Balance => "balance",
            Self::SoeBounds => "SOE bounds",
            Self::TerminalSoe => "terminal SOE",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub vehicle: String,
    pub step: usize,
    pub constraint: ConstraintKind,
    /// Amount by which the constraint is exceeded (kWh, or EUR for degradation).
    pub magnitude: f64,
}

/// Charging and discharging in the same step. Allowed by the LP, reported
/// separately because it usually signals a degenerate optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneousFlow {
    pub vehicle: String,
    pub step: usize,
    pub e_sch: f64,
    pub e_dch: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub simultaneous: Vec<SimultaneousFlow>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.violations
            .iter()
            .filter(|v| v.constraint == kind)
            .count()
    }

    pub fn kinds(&self) -> Vec<ConstraintKind> {
        let mut k: Vec<_> = self.violations.iter().map(|v| v.constraint).collect();
        k.sort();
        k.dedup();
        k
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("schedule has {found} vehicles, scenario has {expected}")]
    VehicleCount { expected: usize, found: usize },
    #[error("schedule for {vehicle} has {found} steps, horizon has {expected}")]
    StepCount {
        vehicle: String,
        expected: usize,
        found: usize,
    },
}

pub fn check_schedule(s: &Scenario, fs: &FleetSchedule) -> Result<ViolationReport, AuditError> {
    check_schedule_with_tol(s, fs, 1e-6)
}

pub fn check_schedule_with_tol(
    s: &Scenario,
    fs: &FleetSchedule,
    tol: f64,
) -> Result<ViolationReport, AuditError> {
    if fs.vehicles.len() != s.vehicles.len() {
        return Err(AuditError::VehicleCount {
            expected: s.vehicles.len(),
            found: fs.vehicles.len(),
        });
    }
    let n = s.step_count();
    let mut r = ViolationReport::default();
    for (vi, (v, vs)) in s.vehicles.iter().zip(&fs.vehicles).enumerate() {
        for len in [
            vs.e_sch.len(),
            vs.e_dch.len(),
            vs.e_fch.len(),
            vs.soe.len(),
            vs.c_deg.len(),
        ] {
            if len != n {
                return Err(AuditError::StepCount {
                    vehicle: v.id.clone(),
                    expected: n,
                    found: len,
                });
            }
        }
        let mut flag = |step: usize, constraint: ConstraintKind, excess: f64| {
            if excess > tol {
                r.violations.push(Violation {
                    vehicle: v.id.clone(),
                    step,
                    constraint,
                    magnitude: excess,
                });
            }
        };
        for t in 0..n {
            let (sch, dch, fch, soe) = (vs.e_sch[t], vs.e_dch[t], vs.e_fch[t], vs.soe[t]);
            let neg = [sch, dch, fch].iter().map(|x| -x).fold(0.0, f64::max);
            flag(t, ConstraintKind::Nonnegativity, neg);

            let cp_cap = s.slow_limit(vi, t);
            flag(t, ConstraintKind::CpLimit, (sch - cp_cap).max(dch - cp_cap));
            let obc = v.obc_max_kwh_per_step;
            flag(t, ConstraintKind::ObcLimit, (sch - obc).max(dch - obc));
            if v.has_cv_taper() && soe > v.soe_cv_kwh() {
                flag(t, ConstraintKind::CvTaper, sch - v.cv_taper_limit(soe));
            }
            flag(t, ConstraintKind::FastLimit, fch - s.fast_limit(vi, t));

            if let Ok((p1, p2)) = plane_values(v, dch.max(0.0), soe) {
                flag(t, ConstraintKind::Degradation, p1.max(p2) - vs.c_deg[t]);
            }

            let prev = if t == 0 {
                v.soe_initial_kwh()
            } else {
                vs.soe[t - 1]
            };
            let expected = prev + v.eta_sch * sch - dch / v.eta_dch + v.eta_fch * fch
                - s.trips.get(vi, t) / v.eta_run;
            flag(t, ConstraintKind::Balance, (soe - expected).abs());

            flag(
                t,
                ConstraintKind::SoeBounds,
                (v.soe_min_kwh() - soe).max(soe - v.soe_max_kwh()),
            );
            if t + 1 == n {
                flag(t, ConstraintKind::TerminalSoe, v.soe_initial_kwh() - soe);
            }
            if sch > tol && dch > tol {
                r.simultaneous.push(SimultaneousFlow {
                    vehicle: v.id.clone(),
                    step: t,
                    e_sch: sch,
                    e_dch: dch,
                });
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChargingPoint, Horizon, PriceSeries, Vehicle};
    use crate::model::{solve_evba, CostToggles, PowerMode, VehicleSchedule};

    fn scenario() -> Scenario {
        let h = Horizon::new(4, 1.0);
        let mut s = Scenario::new(
            h,
            vec![Vehicle::new("EV1", 20.0, &h)],
            vec![ChargingPoint::leisure("l", &h)],
        );
        s.connect(0, 0, 0, 3);
        s.with_prices(PriceSeries::new("p", vec![0.01, 0.02, 0.30, 0.30]))
            .unwrap()
    }

    fn hand_schedule(s: &Scenario, soe: [f64; 4], sch: [f64; 4], dch: [f64; 4]) -> FleetSchedule {
        let mut fs = solve_evba(s, CostToggles::ALL, PowerMode::Both).unwrap();
        let v = &s.vehicles[0];
        let mut vs = VehicleSchedule::zeros("EV1", 4);
        vs.soe = soe.to_vec();
        vs.e_sch = sch.to_vec();
        vs.e_dch = dch.to_vec();
        vs.c_deg = (0..4)
            .map(|t| {
                let (a, b) = plane_values(v, dch[t], soe[t].clamp(0.0, 20.0)).unwrap();
                a.max(b)
            })
            .collect();
        fs.vehicles = vec![vs];
        fs
    }

    #[test]
    fn optimal_schedule_is_clean() {
        let s = scenario();
        let fs = solve_evba(&s, CostToggles::ALL, PowerMode::Both).unwrap();
        assert!(check_schedule(&s, &fs).unwrap().is_clean());
    }

    #[test]
    fn below_minimum_flagged_once_as_soe_bounds() {
        let s = scenario();
        // 12 -> 8 -> 3.4 (below 4) -> 8 -> 12, balance-consistent.
        let d = 4.0 * 0.85;
        let fs = hand_schedule(
            &s,
            [8.0, 3.4, 3.4 + 4.6, 12.0],
            [0.0, 0.0, 4.6 / 0.95, 4.0 / 0.95],
            [d, 4.6 * 0.85, 0.0, 0.0],
        );
        let r = check_schedule(&s, &fs).unwrap();
        assert_eq!(r.count(ConstraintKind::SoeBounds), 1, "{r:?}");
        assert_eq!(r.violations.len(), 1, "{r:?}");
        assert_eq!(r.violations[0].step, 1);
        assert!((r.violations[0].magnitude - 0.6).abs() < 1e-9);
    }

    #[test]
    fn overcharging_against_obc_and_taper() {
        let mut s = scenario();
        s.vehicles[0].obc_max_kwh_per_step = 5.0;
        // 6 kWh through a 5 kWh OBC, ending above the CV breakpoint.
        let top = 12.0 + 6.0 * 0.95;
        let fs = hand_schedule(&s, [top; 4], [6.0, 0.0, 0.0, 0.0], [0.0; 4]);
        let r = check_schedule(&s, &fs).unwrap();
        assert_eq!(
            r.kinds(),
            vec![ConstraintKind::ObcLimit, ConstraintKind::CvTaper]
        );
    }

    #[test]
    fn simultaneous_flows_are_warnings() {
        let s = scenario();
        let after = 12.0 + 0.95 - 1.0 / 0.85;
        let refill = 1.0 / 0.85 / 0.95 - 1.0;
        let fs = hand_schedule(
            &s,
            [after, 12.0, 12.0, 12.0],
            [1.0, refill, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        );
        let r = check_schedule(&s, &fs).unwrap();
        assert_eq!(r.simultaneous.len(), 1);
        assert!(r.violations.is_empty(), "{r:?}");
    }

    #[test]
    fn wrong_shape_is_an_error() {
        let s = scenario();
        let mut fs = solve_evba(&s, CostToggles::ALL, PowerMode::Both).unwrap();
        fs.vehicles[0].soe.pop();
        assert!(matches!(
            check_schedule(&s, &fs),
            Err(AuditError::StepCount { .. })
        ));
    }
}
