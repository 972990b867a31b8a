//! Two-plane piecewise-linear battery degradation cost.
//!
//! The cost of a step is the larger of two affine functions of the discharged
//! energy and the state of energy. `plane1` grows with depth of discharge,
//! `plane2` depends on throughput only and dominates when the battery is
//! nearly full.

use evsched_lp::{LpError, LpProblem, RowId, Sense, VarId};
use thiserror::Error;

use crate::domain::{DegradationParams, Vehicle};

#[derive(Debug, Error, PartialEq)]
pub enum DegradationError {
    #[error("state of energy {soe_kwh} kWh outside [0, {capacity_kwh}] kWh")]
    SoeOutOfRange { soe_kwh: f64, capacity_kwh: f64 },
    #[error("discharged energy must be a non-negative number, got {0}")]
    InvalidDischarge(f64),
}

const RANGE_TOL: f64 = 1e-9;

/// Both plane values (EUR) for one step, evaluated directly from the
/// coefficient form: percentages of capacity for throughput and depth of
/// discharge.
pub fn plane_values(v: &Vehicle, e_dch: f64, soe: f64) -> Result<(f64, f64), DegradationError> {
    let cap = v.capacity_kwh;
    if !e_dch.is_finite() || e_dch < -RANGE_TOL {
        return Err(DegradationError::InvalidDischarge(e_dch));
    }
    if !(soe >= -RANGE_TOL && soe <= cap + RANGE_TOL) {
        return Err(DegradationError::SoeOutOfRange {
            soe_kwh: soe,
            capacity_kwh: cap,
        });
    }
    let d = &v.degradation;
    let c = v.battery_cost_eur;
    let throughput_pct = e_dch / cap * 100.0;
    let dod_pct = (cap - soe) / cap * 100.0;
    let plane1 = c * (d.d1 + d.d2 * throughput_pct + d.d3 * dod_pct);
    let plane2 = c * d.d4 * throughput_pct;
    Ok((plane1, plane2))
}

/// Degradation cost of a step: the maximum of the two planes.
pub fn degradation_cost(v: &Vehicle, e_dch: f64, soe: f64) -> Result<f64, DegradationError> {
    let (p1, p2) = plane_values(v, e_dch, soe)?;
    Ok(p1.max(p2))
}

/// Depth of discharge (percent) below which `plane2` exceeds `plane1` for a
/// step discharging `throughput_pct` percent of capacity. Negative when
/// `plane1` binds at every depth.
pub fn low_dod_threshold_pct(d: &DegradationParams, throughput_pct: f64) -> f64 {
    (-d.d1 - (d.d2 - d.d4) * throughput_pct) / d.d3
}

/// The planes as `cost >= intercept + slope_dch * e_dch + slope_soe * soe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planes {
    pub plane1_intercept: f64,
    pub plane1_slope_dch: f64,
    pub plane1_slope_soe: f64,
    pub plane2_slope_dch: f64,
}

impl Planes {
    pub fn for_vehicle(v: &Vehicle) -> Self {
        let d = &v.degradation;
        let c = v.battery_cost_eur;
        let per_kwh = 100.0 / v.capacity_kwh;
        Self {
            plane1_intercept: c * (d.d1 + 100.0 * d.d3),
            plane1_slope_dch: c * d.d2 * per_kwh,
            plane1_slope_soe: -c * d.d3 * per_kwh,
            plane2_slope_dch: c * d.d4 * per_kwh,
        }
    }
}

/// Adds the two epigraph rows `c_deg >= plane1` and `c_deg >= plane2` for one
/// step. The caller gives `c_deg` unit objective weight so that, at an
/// optimum, it equals the larger plane.
pub fn emit_degradation_rows(
    p: &mut LpProblem,
    v: &Vehicle,
    c_deg: VarId,
    e_dch: VarId,
    soe: VarId,
    tag: &str,
) -> Result<[RowId; 2], LpError> {
    let pl = Planes::for_vehicle(v);
    let r1 = p.add_constraint(
        [
            (c_deg, 1.0),
            (e_dch, -pl.plane1_slope_dch),
            (soe, -pl.plane1_slope_soe),
        ],
        Sense::Ge,
        pl.plane1_intercept,
        format!("deg_plane1[{tag}]"),
    )?;
    let r2 = p.add_constraint(
        [(c_deg, 1.0), (e_dch, -pl.plane2_slope_dch)],
        Sense::Ge,
        0.0,
        format!("deg_plane2[{tag}]"),
    )?;
    Ok([r1, r2])
}
