//! LP formulations of the two aggregator types.
//!
//! Both share the per-vehicle block in [`block`]: EVBA emits one block per
//! vehicle over the full horizon, EVCA one block per plug-in session.

mod block;
mod evba;
mod evca;
mod schedule;

use std::fmt;
use std::str::FromStr;

use evsched_lp::{LpError, SolverOptions};
use serde::Serialize;
use thiserror::Error;

use crate::domain::{Diagnostic, ScenarioError};

pub use evba::{build_evba, reachability_violation, solve_evba, solve_evba_with, EvbaModel};
pub use evca::{
    chain_arrival_soe, derive_sessions, solve_evca, solve_evca_with, Session, SoePolicy,
};
pub use schedule::{cost_breakdown, CostBreakdown, FleetSchedule, SessionTrace, VehicleSchedule};

/// Which cost components enter the objective. Energy cost is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CostToggles {
    pub include_degradation: bool,
    pub include_grid_tariff: bool,
    pub include_cp_tariff: bool,
}

impl CostToggles {
    pub const ENERGY_ONLY: Self = Self::new(false, false, false);
    pub const ALL: Self = Self::new(true, true, true);

    pub const fn new(degradation: bool, grid_tariff: bool, cp_tariff: bool) -> Self {
        Self {
            include_degradation: degradation,
            include_grid_tariff: grid_tariff,
            include_cp_tariff: cp_tariff,
        }
    }
}

/// The five objective variants of the cost ablation, in increasing order of
/// included cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CostVariant {
    /// Energy only.
    Of1,
    /// Energy and degradation.
    Of2,
    /// Energy and grid tariff.
    Of3,
    /// Energy and CP tariff.
    Of4,
    /// Everything.
    Of5,
}

impl CostVariant {
    pub const ALL: [Self; 5] = [Self::Of1, Self::Of2, Self::Of3, Self::Of4, Self::Of5];

    pub fn toggles(self) -> CostToggles {
        match self {
            Self::Of1 => CostToggles::ENERGY_ONLY,
            Self::Of2 => CostToggles::new(true, false, false),
            Self::Of3 => CostToggles::new(false, true, false),
            Self::Of4 => CostToggles::new(false, false, true),
            Self::Of5 => CostToggles::ALL,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Of1 => "OF1",
            Self::Of2 => "OF2",
            Self::Of3 => "OF3",
            Self::Of4 => "OF4",
            Self::Of5 => "OF5",
        }
    }
}

impl FromStr for CostVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown cost variant `{s}`, expected one of of1..of5"))
    }
}

/// Which power-limit constraints are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PowerMode {
    /// A flat 4 kW whenever plugged into a slow CP, plus the CV taper.
    Fixed4kw,
    /// OBC limits and CV taper; CP limits ignored.
    ObcOnly,
    /// CP limits only; OBC and CV taper ignored.
    CpOnly,
    /// CP limits, OBC limits and CV taper.
    Both,
}

impl PowerMode {
    pub const ALL: [Self; 4] = [Self::Fixed4kw, Self::ObcOnly, Self::CpOnly, Self::Both];

    /// Charger rating used by [`PowerMode::Fixed4kw`].
    pub const FIXED_KW: f64 = 4.0;

    pub fn label(self) -> &'static str {
        match self {
            Self::Fixed4kw => "fixed_4kw",
            Self::ObcOnly => "obc_only",
            Self::CpOnly => "cp_only",
            Self::Both => "both",
        }
    }

    pub(crate) fn cp_limits(self) -> bool {
        matches!(self, Self::CpOnly | Self::Both)
    }

    pub(crate) fn obc_limits(self) -> bool {
        matches!(self, Self::ObcOnly | Self::Both)
    }

    pub(crate) fn cv_taper(self) -> bool {
        !matches!(self, Self::CpOnly)
    }
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PowerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" | "fixed_4kw" => Ok(Self::Fixed4kw),
            "obc" | "obc_only" => Ok(Self::ObcOnly),
            "cp" | "cp_only" => Ok(Self::CpOnly),
            "both" => Ok(Self::Both),
            _ => Err(format!(
                "unknown power mode `{s}`, expected fixed, obc, cp or both"
            )),
        }
    }
}

/// Solver and checking tolerances shared by the models and experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub solver: SolverOptions,
    /// Tolerance for audits, cost reconciliation and ordering checks.
    pub tolerance: f64,
    /// Relax unreachable EVCA departure floors instead of failing.
    pub best_effort: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            tolerance: 1e-6,
            best_effort: false,
        }
    }
}

impl Settings {
    pub fn with_tolerance(tolerance: f64) -> Self {
        let mut s = Self {
            tolerance,
            ..Self::default()
        };
        s.solver.feasibility_tol = tolerance;
        s
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid scenario: {}", join(.0))]
    InvalidScenario(Vec<Diagnostic>),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("model assembly failed: {0}")]
    Lp(#[from] LpError),
    #[error("infeasible: vehicle {vehicle}, step {step}: {bound}")]
    Infeasible {
        vehicle: String,
        step: usize,
        bound: String,
    },
    #[error("infeasible: no single vehicle bound explains it")]
    InfeasibleUnlocated,
    #[error("LP unbounded; a power or energy limit is missing")]
    Unbounded,
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("cost breakdown {recomputed} does not reconcile with LP objective {lp_objective}")]
    Reconciliation { lp_objective: f64, recomputed: f64 },
    #[error(
        "itinerary infeasible: vehicle {vehicle} reaches {soe_kwh:.4} kWh at step {step}, below its {min_kwh:.4} kWh minimum"
    )]
    ItineraryInfeasible {
        vehicle: String,
        step: usize,
        soe_kwh: f64,
        min_kwh: f64,
    },
    #[error(
        "session infeasible: vehicle {vehicle} at {cp}, steps {arrive_step}..={depart_step}, cannot reach {floor_kwh:.4} kWh by departure"
    )]
    SessionInfeasible {
        vehicle: String,
        cp: String,
        arrive_step: usize,
        depart_step: usize,
        floor_kwh: f64,
    },
    #[error("departure policy {frac} is below the minimum SOE of vehicle {vehicle}")]
    InvalidPolicy { frac: f64, vehicle: String },
}

fn join(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
