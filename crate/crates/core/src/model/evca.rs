//! Charging-point-based aggregator: each plug-in session is optimized on its
//! own, knowing only the arrival SOE and a departure floor.

use std::fmt;
use std::str::FromStr;

use evsched_lp::{solve_with, LpProblem, LpStatus};
use serde::Serialize;

use super::block::{emit_block, evaluate_degradation, read_block, BlockObjective, BlockSpec};
use super::evba::reconcile;
use super::schedule::{
    cost_breakdown, CostBreakdown, FleetSchedule, SessionTrace, VehicleSchedule,
};
use super::{CostToggles, ModelError, PowerMode, Settings};
use crate::domain::{validate_scenario, Scenario, Vehicle};

/// A maximal run of consecutive steps with a vehicle plugged into one CP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Session {
    pub vehicle: usize,
    pub cp: usize,
    pub arrive_step: usize,
    /// Last plugged-in step, inclusive.
    pub depart_step: usize,
}

impl Session {
    pub fn steps(&self) -> std::ops::Range<usize> {
        self.arrive_step..self.depart_step + 1
    }
}

/// Minimum departure SOE, as a fraction of capacity, for every session except
/// a vehicle's last one of the day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoePolicy {
    pub depart_min_frac: f64,
}

impl SoePolicy {
    pub const HIGH: Self = Self {
        depart_min_frac: 0.95,
    };
    pub const LOW: Self = Self {
        depart_min_frac: 0.60,
    };

    pub fn label(&self) -> String {
        if *self == Self::HIGH {
            "high".into()
        } else if *self == Self::LOW {
            "low".into()
        } else {
            format!("{:.2}", self.depart_min_frac)
        }
    }

    pub fn model_label(&self) -> String {
        format!("EVCA-{}", self.label())
    }
}

impl fmt::Display for SoePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SoePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Self::HIGH),
            "low" => Ok(Self::LOW),
            other => match other.parse::<f64>() {
                Ok(x) if (0.0..=1.0).contains(&x) => Ok(Self { depart_min_frac: x }),
                _ => Err(format!(
                    "invalid policy `{s}`, expected high, low or a fraction in [0, 1]"
                )),
            },
        }
    }
}

/// Sessions of every vehicle, in step order.
pub fn derive_sessions(s: &Scenario) -> Vec<Vec<Session>> {
    (0..s.vehicles.len())
        .map(|vi| {
            let mut out: Vec<Session> = Vec::new();
            for t in 0..s.step_count() {
                let Some(cp) = s.connectivity.connection(vi, t) else {
                    continue;
                };
                match out.last_mut() {
                    Some(cur) if cur.cp == cp && cur.depart_step + 1 == t => cur.depart_step = t,
                    _ => out.push(Session {
                        vehicle: vi,
                        cp,
                        arrive_step: t,
                        depart_step: t,
                    }),
                }
            }
            out
        })
        .collect()
}

/// SOE after driving `trip_kwh` (at the wheels) from a departure SOE.
/// `step` names where the result is needed, for the error message.
pub fn chain_arrival_soe(
    v: &Vehicle,
    departure_soe: f64,
    trip_kwh: f64,
    step: usize,
) -> Result<f64, ModelError> {
    let arrival = departure_soe - trip_kwh / v.eta_run;
    if arrival < v.soe_min_kwh() - 1e-9 {
        return Err(ModelError::ItineraryInfeasible {
            vehicle: v.id.clone(),
            step,
            soe_kwh: arrival,
            min_kwh: v.soe_min_kwh(),
        });
    }
    Ok(arrival)
}

pub fn solve_evca(
    s: &Scenario,
    policy: SoePolicy,
    toggles: CostToggles,
    mode: PowerMode,
) -> Result<FleetSchedule, ModelError> {
    solve_evca_with(s, policy, toggles, mode, &Settings::default())
}

pub fn solve_evca_with(
    s: &Scenario,
    policy: SoePolicy,
    toggles: CostToggles,
    mode: PowerMode,
    settings: &Settings,
) -> Result<FleetSchedule, ModelError> {
    let diags = validate_scenario(s);
    if !diags.is_empty() {
        return Err(ModelError::InvalidScenario(diags));
    }
    if let Some(v) = s
        .vehicles
        .iter()
        .find(|v| policy.depart_min_frac < v.soe_min_frac)
    {
        return Err(ModelError::InvalidPolicy {
            frac: policy.depart_min_frac,
            vehicle: v.id.clone(),
        });
    }
    let prices = &s.prices()?.eur_per_kwh;
    let n = s.step_count();
    let sessions = derive_sessions(s);
    let mut vehicles = Vec::with_capacity(s.vehicles.len());
    let mut traces = Vec::new();
    let mut warnings = Vec::new();
    let mut objective = 0.0;
    let mut costs = CostBreakdown::default();

    for (vi, v) in s.vehicles.iter().enumerate() {
        let mut vs = VehicleSchedule::zeros(v.id.clone(), n);
        let mut soe = v.soe_initial_kwh();
        let mut cursor = 0;
        let list = &sessions[vi];

        for (k, sess) in list.iter().enumerate() {
            soe = drive(s, vi, &mut vs, soe, cursor..sess.arrive_step)?;
            let arrival = soe;
            let floor = if k + 1 == list.len() {
                // Last session: leave enough for any remaining trips and
                // still end the day at the initial SOE.
                let tail = s.trips.total(vi, sess.depart_step + 1..n);
                v.soe_initial_kwh() + tail / v.eta_run
            } else {
                policy.depart_min_frac * v.capacity_kwh
            };
            let spec = |floor: f64, objective: BlockObjective| BlockSpec {
                vehicle: vi,
                steps: sess.steps(),
                initial_soe: arrival,
                terminal_floor: Some(floor),
                objective,
                toggles,
                mode,
                prices,
            };

            let mut imposed = floor;
            let mut attempt = session_lp(s, &spec(floor, BlockObjective::Cost), settings)?;
            if attempt.is_none() && settings.best_effort {
                let reach = max_reachable(
                    s,
                    &spec(v.soe_min_kwh(), BlockObjective::MaxFinalSoe),
                    settings,
                )?;
                imposed = (reach - 1e-9).min(floor);
                warnings.push(format!(
                    "vehicle {} at {} (steps {}..={}): departure floor {floor:.4} kWh unreachable, relaxed to {imposed:.4} kWh",
                    v.id, s.charging_points[sess.cp].id, sess.arrive_step, sess.depart_step
                ));
                attempt = session_lp(s, &spec(imposed, BlockObjective::Cost), settings)?;
            }
            let Some((obj, vals)) = attempt else {
                return Err(ModelError::SessionInfeasible {
                    vehicle: v.id.clone(),
                    cp: s.charging_points[sess.cp].id.clone(),
                    arrive_step: sess.arrive_step,
                    depart_step: sess.depart_step,
                    floor_kwh: floor,
                });
            };
            objective += obj;
            for (i, t) in sess.steps().enumerate() {
                vs.e_sch[t] = vals.e_sch[i];
                vs.e_dch[t] = vals.e_dch[i];
                vs.e_fch[t] = vals.e_fch[i];
                vs.soe[t] = vals.soe[i];
                vs.c_deg[t] = vals.c_deg[i];
            }
            soe = vs.soe[sess.depart_step];
            traces.push(SessionTrace {
                vehicle_id: v.id.clone(),
                cp_id: s.charging_points[sess.cp].id.clone(),
                arrive_step: sess.arrive_step,
                depart_step: sess.depart_step,
                arrival_soe_kwh: arrival,
                floor_kwh: floor,
                imposed_floor_kwh: imposed,
                departure_soe_kwh: soe,
                objective_eur: obj,
            });
            cursor = sess.depart_step + 1;
        }
        soe = drive(s, vi, &mut vs, soe, cursor..n)?;
        if soe < v.soe_initial_kwh() - settings.tolerance && !settings.best_effort {
            return Err(ModelError::Infeasible {
                vehicle: v.id.clone(),
                step: n.saturating_sub(1),
                bound: format!(
                    "terminal SOE: ends at {soe:.4} kWh without a later session, floor is {:.4} kWh",
                    v.soe_initial_kwh()
                ),
            });
        }

        // Unplugged steps are outside every session LP; their degradation
        // term is the evaluator value at zero discharge.
        for t in 0..n {
            if s.connectivity.connection(vi, t).is_none() {
                vs.c_deg[t] = evaluate_degradation(v, 0.0, vs.soe[t]);
                if toggles.include_degradation {
                    objective += vs.c_deg[t];
                }
            }
        }
        vs.costs = cost_breakdown(s, vi, &vs, toggles)?;
        costs = costs + vs.costs;
        vehicles.push(vs);
    }
    reconcile(objective, costs.total, settings.tolerance)?;
    Ok(FleetSchedule {
        model: policy.model_label(),
        price_label: s.prices()?.label.clone(),
        toggles,
        power_mode: mode,
        step_count: n,
        vehicles,
        lp_objective: objective,
        costs,
        sessions: traces,
        warnings,
        assumptions: s.assumptions(),
    })
}

/// Advances an unplugged vehicle through `steps`, recording the SOE path.
fn drive(
    s: &Scenario,
    vi: usize,
    vs: &mut VehicleSchedule,
    mut soe: f64,
    steps: std::ops::Range<usize>,
) -> Result<f64, ModelError> {
    let v = &s.vehicles[vi];
    for t in steps {
        soe = chain_arrival_soe(v, soe, s.trips.get(vi, t), t)?;
        vs.soe[t] = soe;
    }
    Ok(soe)
}

type SessionResult = Option<(f64, super::block::BlockValues)>;

fn session_lp(
    s: &Scenario,
    spec: &BlockSpec,
    settings: &Settings,
) -> Result<SessionResult, ModelError> {
    let mut p = LpProblem::new();
    let b = emit_block(&mut p, s, spec)?;
    let sol = solve_with(&p, &settings.solver);
    match sol.status {
        LpStatus::Optimal => {
            let vals = read_block(s, spec.vehicle, &b, &sol, spec.toggles.include_degradation);
            Ok(Some((sol.objective, vals)))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(ModelError::Unbounded),
        LpStatus::IterationLimit => Err(ModelError::IterationLimit(sol.iterations)),
    }
}

fn max_reachable(s: &Scenario, spec: &BlockSpec, settings: &Settings) -> Result<f64, ModelError> {
    let mut p = LpProblem::new();
    emit_block(&mut p, s, spec)?;
    let sol = solve_with(&p, &settings.solver);
    match sol.status {
        LpStatus::Optimal => Ok(-sol.objective),
        LpStatus::Infeasible => Ok(s.vehicles[spec.vehicle].soe_min_kwh()),
        LpStatus::Unbounded => Err(ModelError::Unbounded),
        LpStatus::IterationLimit => Err(ModelError::IterationLimit(sol.iterations)),
    }
}
