use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DiagnosticKind {
    Horizon,
    Capacity,
    SoeOrdering,
    CvBreakpoint,
    Efficiency,
    ObcLimit,
    BatteryCost,
    PowerLimit,
    Fee,
    DuplicateId,
    Dimensions,
    MultipleConnections,
    DrivingWhileConnected,
    NegativeTrip,
    Degradation,
    Prices,
    Calendar,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Horizon => "horizon",
            Self::Capacity => "capacity",
            Self::SoeOrdering => "SOE ordering",
            Self::CvBreakpoint => "CV breakpoint",
            Self::Efficiency => "efficiency",
            Self::ObcLimit => "OBC limit",
            Self::BatteryCost => "battery cost",
            Self::PowerLimit => "power limit",
            Self::Fee => "fee",
            Self::DuplicateId => "duplicate id",
            Self::Dimensions => "dimensions",
            Self::MultipleConnections => "multiple connections",
            Self::DrivingWhileConnected => "driving while connected",
            Self::NegativeTrip => "negative trip",
            Self::Degradation => "degradation",
            Self::Prices => "prices",
            Self::Calendar => "tariff calendar",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Where the problem is, e.g. `vehicle EV1` or `vehicle EV1, step 7`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.kind, self.location, self.message)
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn check(
        &mut self,
        ok: bool,
        kind: DiagnosticKind,
        location: &str,
        message: impl FnOnce() -> String,
    ) {
        if !ok {
            self.0.push(Diagnostic {
                kind,
                location: location.to_string(),
                message: message(),
            });
        }
    }
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Checks every scenario invariant and returns one diagnostic per violation.
/// An empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Diagnostic> {
    use DiagnosticKind as K;
    let mut c = Collector(Vec::new());
    let h = &s.horizon;
    c.check(h.step_count >= 1, K::Horizon, "horizon", || {
        "step_count must be at least 1".into()
    });
    c.check(
        h.step_hours.is_finite() && h.step_hours > 0.0,
        K::Horizon,
        "horizon",
        || format!("step_hours must be positive, got {}", h.step_hours),
    );

    let mut ids = HashSet::new();
    for v in &s.vehicles {
        let loc = format!("vehicle {}", v.id);
        c.check(ids.insert(&v.id), K::DuplicateId, &loc, || {
            "vehicle id repeated".into()
        });
        c.check(
            v.capacity_kwh.is_finite() && v.capacity_kwh > 0.0,
            K::Capacity,
            &loc,
            || format!("capacity must be positive, got {}", v.capacity_kwh),
        );
        let ordered = 0.0 <= v.soe_min_frac
            && v.soe_min_frac <= v.soe_initial_frac
            && v.soe_initial_frac <= v.soe_max_frac
            && v.soe_max_frac <= 1.0;
        c.check(ordered, K::SoeOrdering, &loc, || {
            format!(
                "need 0 <= min ({}) <= initial ({}) <= max ({}) <= 1",
                v.soe_min_frac, v.soe_initial_frac, v.soe_max_frac
            )
        });
        c.check(
            v.soe_min_frac < v.soe_cv_frac && v.soe_cv_frac <= 1.0,
            K::CvBreakpoint,
            &loc,
            || {
                format!(
                    "need min ({}) < cv ({}) <= 1",
                    v.soe_min_frac, v.soe_cv_frac
                )
            },
        );
        for (name, eta) in [
            ("eta_sch", v.eta_sch),
            ("eta_dch", v.eta_dch),
            ("eta_run", v.eta_run),
            ("eta_fch", v.eta_fch),
        ] {
            c.check(eta > 0.0 && eta <= 1.0, K::Efficiency, &loc, || {
                format!("{name} must lie in (0, 1], got {eta}")
            });
        }
        c.check(nonneg(v.obc_max_kwh_per_step), K::ObcLimit, &loc, || {
            format!(
                "OBC limit must be non-negative, got {}",
                v.obc_max_kwh_per_step
            )
        });
        c.check(nonneg(v.battery_cost_eur), K::BatteryCost, &loc, || {
            format!(
                "battery cost must be non-negative, got {}",
                v.battery_cost_eur
            )
        });
        let d = v.degradation;
        c.check(
            [d.d1, d.d2, d.d3, d.d4].iter().all(|x| x.is_finite()),
            K::Degradation,
            &loc,
            || "degradation coefficients must be finite".into(),
        );
    }

    let mut cp_ids = HashSet::new();
    for cp in &s.charging_points {
        let loc = format!("charging point {}", cp.id);
        c.check(cp_ids.insert(&cp.id), K::DuplicateId, &loc, || {
            "charging point id repeated".into()
        });
        c.check(
            nonneg(cp.power_limit_kwh_per_step),
            K::PowerLimit,
            &loc,
            || {
                format!(
                    "power limit must be non-negative, got {}",
                    cp.power_limit_kwh_per_step
                )
            },
        );
        for (name, fee) in [
            ("grid_fee_low", cp.grid_fee_low_eur_per_kwh),
            ("grid_fee_high", cp.grid_fee_high_eur_per_kwh),
            ("cp_fee", cp.cp_fee_eur_per_kwh),
        ] {
            c.check(nonneg(fee), K::Fee, &loc, || {
                format!("{name} must be non-negative, got {fee}")
            });
        }
    }

    let (nv, nt, nc) = (s.vehicles.len(), h.step_count, s.charging_points.len());
    let dims_ok = s.connectivity.dims() == (nv, nt, nc) && s.trips.dims() == (nv, nt);
    c.check(dims_ok, K::Dimensions, "scenario", || {
        format!(
            "connectivity {:?} and trips {:?} must match (vehicles, steps, CPs) = {:?}",
            s.connectivity.dims(),
            s.trips.dims(),
            (nv, nt, nc)
        )
    });
    if dims_ok {
        for (vi, v) in s.vehicles.iter().enumerate() {
            for t in 0..nt {
                let loc = format!("vehicle {}, step {t}", v.id);
                let connected: Vec<usize> = s.connectivity.connected_cps(vi, t).collect();
                let trip = s.trips.get(vi, t);
                c.check(connected.len() <= 1, K::MultipleConnections, &loc, || {
                    let names: Vec<&str> = connected
                        .iter()
                        .map(|&k| s.charging_points[k].id.as_str())
                        .collect();
                    format!("connected to {}", names.join(", "))
                });
                c.check(
                    trip.is_finite() && trip >= 0.0,
                    K::NegativeTrip,
                    &loc,
                    || format!("trip energy must be non-negative, got {trip}"),
                );
                c.check(
                    trip <= 0.0 || connected.is_empty(),
                    K::DrivingWhileConnected,
                    &loc,
                    || format!("trip of {trip} kWh while plugged in"),
                );
            }
        }
    }

    if let Some(p) = &s.prices {
        c.check(p.len() == nt, K::Prices, "prices", || {
            format!(
                "series `{}` has {} steps, horizon has {nt}",
                p.label,
                p.len()
            )
        });
        c.check(
            p.eur_per_kwh.iter().all(|x| x.is_finite()),
            K::Prices,
            "prices",
            || format!("series `{}` contains non-finite values", p.label),
        );
    }
    let cal = &s.tariff_calendar;
    c.check(
        cal.night_start_hour < 24 && cal.night_end_hour < 24 && cal.len() == nt,
        K::Calendar,
        "tariff calendar",
        || "night hours must be below 24 and bands must cover the horizon".into(),
    );
    c.0
}
