//! EV-based aggregator: one LP covering every vehicle over the whole day.

use evsched_lp::{solve_with, LpProblem, LpStatus};

use super::block::{emit_block, read_block, BlockObjective, BlockSpec, BlockVars};
use super::schedule::{cost_breakdown, CostBreakdown, FleetSchedule, VehicleSchedule};
use super::{CostToggles, ModelError, PowerMode, Settings};
use crate::domain::{validate_scenario, Scenario};

/// The assembled fleet LP and the variable index of each vehicle block.
#[derive(Debug, Clone)]
pub struct EvbaModel {
    pub problem: LpProblem,
    pub(crate) blocks: Vec<BlockVars>,
    pub toggles: CostToggles,
    pub mode: PowerMode,
}

pub fn build_evba(
    s: &Scenario,
    toggles: CostToggles,
    mode: PowerMode,
) -> Result<EvbaModel, ModelError> {
    let diags = validate_scenario(s);
    if !diags.is_empty() {
        return Err(ModelError::InvalidScenario(diags));
    }
    let prices = &s.prices()?.eur_per_kwh;
    let mut problem = LpProblem::new();
    let mut blocks = Vec::with_capacity(s.vehicles.len());
    for (vi, v) in s.vehicles.iter().enumerate() {
        let spec = BlockSpec {
            vehicle: vi,
            steps: 0..s.step_count(),
            initial_soe: v.soe_initial_kwh(),
            terminal_floor: Some(v.soe_initial_kwh()),
            objective: BlockObjective::Cost,
            toggles,
            mode,
            prices,
        };
        blocks.push(emit_block(&mut problem, s, &spec)?);
    }
    Ok(EvbaModel {
        problem,
        blocks,
        toggles,
        mode,
    })
}

pub fn solve_evba(
    s: &Scenario,
    toggles: CostToggles,
    mode: PowerMode,
) -> Result<FleetSchedule, ModelError> {
    solve_evba_with(s, toggles, mode, &Settings::default())
}

pub fn solve_evba_with(
    s: &Scenario,
    toggles: CostToggles,
    mode: PowerMode,
    settings: &Settings,
) -> Result<FleetSchedule, ModelError> {
    let model = build_evba(s, toggles, mode)?;
    let sol = solve_with(&model.problem, &settings.solver);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(match reachability_violation(s, mode, settings.tolerance) {
                Some((vi, step, bound)) => ModelError::Infeasible {
                    vehicle: s.vehicles[vi].id.clone(),
                    step,
                    bound,
                },
                None => ModelError::InfeasibleUnlocated,
            })
        }
        LpStatus::Unbounded => return Err(ModelError::Unbounded),
        LpStatus::IterationLimit => return Err(ModelError::IterationLimit(sol.iterations)),
    }

    let n = s.step_count();
    let mut vehicles = Vec::with_capacity(s.vehicles.len());
    let mut costs = CostBreakdown::default();
    for (vi, b) in model.blocks.iter().enumerate() {
        let vals = read_block(s, vi, b, &sol, toggles.include_degradation);
        let mut vs = VehicleSchedule::zeros(s.vehicles[vi].id.clone(), n);
        vs.e_sch = vals.e_sch;
        vs.e_dch = vals.e_dch;
        vs.e_fch = vals.e_fch;
        vs.soe = vals.soe;
        vs.c_deg = vals.c_deg;
        vs.costs = cost_breakdown(s, vi, &vs, toggles)?;
        costs = costs + vs.costs;
        vehicles.push(vs);
    }
    reconcile(sol.objective, costs.total, settings.tolerance)?;
    Ok(FleetSchedule {
        model: "EVBA".into(),
        price_label: s.prices()?.label.clone(),
        toggles,
        power_mode: mode,
        step_count: n,
        vehicles,
        lp_objective: sol.objective,
        costs,
        sessions: Vec::new(),
        warnings: Vec::new(),
        assumptions: s.assumptions(),
    })
}

pub(crate) fn reconcile(lp_objective: f64, recomputed: f64, tol: f64) -> Result<(), ModelError> {
    if (lp_objective - recomputed).abs() <= tol * (1.0 + lp_objective.abs()) {
        Ok(())
    } else {
        Err(ModelError::Reconciliation {
            lp_objective,
            recomputed,
        })
    }
}

/// Upper bound on slow-charger energy per step under `mode`, ignoring the taper.
fn slow_reach(s: &Scenario, vi: usize, t: usize, mode: PowerMode) -> f64 {
    let plugged = s.slow_cp(vi, t).is_some();
    let obc = s.vehicles[vi].obc_max_kwh_per_step;
    match mode {
        PowerMode::Both => s.slow_limit(vi, t).min(obc),
        PowerMode::CpOnly => s.slow_limit(vi, t),
        PowerMode::ObcOnly if plugged => obc,
        PowerMode::Fixed4kw if plugged => s.horizon.kw_to_kwh_per_step(PowerMode::FIXED_KW),
        _ => 0.0,
    }
}

/// Simulates each vehicle charging as fast as the limits allow and returns
/// the first `(vehicle, step, bound)` that even this schedule violates.
pub fn reachability_violation(
    s: &Scenario,
    mode: PowerMode,
    tol: f64,
) -> Option<(usize, usize, String)> {
    for (vi, v) in s.vehicles.iter().enumerate() {
        let mut reach = v.soe_initial_kwh();
        for t in 0..s.step_count() {
            let gain = v.eta_sch * slow_reach(s, vi, t, mode) + v.eta_fch * s.fast_limit(vi, t);
            reach = (reach + gain - s.trips.get(vi, t) / v.eta_run).min(v.soe_max_kwh());
            if reach < v.soe_min_kwh() - tol {
                return Some((
                    vi,
                    t,
                    format!(
                        "SOE lower bound: at most {reach:.4} kWh reachable, minimum is {:.4} kWh",
                        v.soe_min_kwh()
                    ),
                ));
            }
        }
        if reach < v.soe_initial_kwh() - tol {
            return Some((
                vi,
                s.step_count() - 1,
                format!(
                    "terminal SOE: at most {reach:.4} kWh reachable, end-of-day floor is {:.4} kWh",
                    v.soe_initial_kwh()
                ),
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChargingPoint, Horizon, PriceSeries, Vehicle};

    fn single(prices: Vec<f64>) -> Scenario {
        let h = Horizon::new(prices.len(), 1.0);
        let mut s = Scenario::new(
            h,
            vec![Vehicle::new("EV1", 40.0, &h)],
            vec![ChargingPoint::home("home", &h)],
        );
        s.connect(0, 0, 0, prices.len() - 1);
        s.with_prices(PriceSeries::new("p", prices)).unwrap()
    }

    #[test]
    fn flat_prices_and_no_trips_do_nothing() {
        let s = single(vec![0.05; 6]);
        let fs = solve_evba(&s, CostToggles::ALL, PowerMode::Both).unwrap();
        let v = &fs.vehicles[0];
        assert!(v.charged_kwh() < 1e-9 && v.discharged_kwh() < 1e-9);
        assert!(v.soe.iter().all(|&x| (x - 24.0).abs() < 1e-9));
        assert!(fs.total_cost().abs() < 1e-9);
    }

    #[test]
    fn price_spread_triggers_arbitrage() {
        let s = single(vec![0.01, 0.01, 0.30, 0.30]);
        let fs = solve_evba(&s, CostToggles::ENERGY_ONLY, PowerMode::Both).unwrap();
        let v = &fs.vehicles[0];
        assert!(v.discharged_kwh() > 1.0);
        assert!(fs.total_cost() < 0.0);
        assert!((fs.lp_objective - fs.total_cost()).abs() < 1e-9);
        assert!(*v.soe.last().unwrap() >= 24.0 - 1e-9);
    }

    #[test]
    fn unreachable_trip_is_located() {
        let h = Horizon::new(4, 1.0);
        let mut s = Scenario::new(
            h,
            vec![Vehicle::new("EV1", 20.0, &h)],
            vec![ChargingPoint::home("home", &h)],
        );
        s.connect(0, 0, 0, 1);
        s.trips.set(0, 2, 15.0);
        let s = s.with_prices(PriceSeries::constant("p", 0.05, 4)).unwrap();
        match solve_evba(&s, CostToggles::ALL, PowerMode::Both).unwrap_err() {
            ModelError::Infeasible {
                vehicle,
                step,
                bound,
            } => {
                assert_eq!((vehicle.as_str(), step), ("EV1", 2));
                assert!(bound.contains("SOE lower bound"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_prices_rejected() {
        let h = Horizon::new(2, 1.0);
        let s = Scenario::new(h, vec![Vehicle::new("EV1", 20.0, &h)], vec![]);
        assert!(matches!(
            solve_evba(&s, CostToggles::ALL, PowerMode::Both),
            Err(ModelError::Scenario(_))
        ));
    }
}
