use std::ops::Range;

use evsched_lp::{LpError, LpProblem, LpSolution, Sense, VarId};

use super::{CostToggles, PowerMode};
use crate::degradation::{degradation_cost, emit_degradation_rows};
use crate::domain::{grid_fee, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum BlockObjective {
    /// Charging cost net of V2G revenue, plus the toggled-on fees.
    Cost,
    /// Maximize the SOE at the last step; used to relax unreachable floors.
    MaxFinalSoe,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockSpec<'a> {
    pub vehicle: usize,
    pub steps: Range<usize>,
    /// SOE before the first step of the block.
    pub initial_soe: f64,
    pub terminal_floor: Option<f64>,
    pub objective: BlockObjective,
    pub toggles: CostToggles,
    pub mode: PowerMode,
    pub prices: &'a [f64],
}

/// Variables of one vehicle over a contiguous step range, indexed by offset
/// from the first step.
#[derive(Debug, Clone)]
pub(crate) struct BlockVars {
    pub e_sch: Vec<VarId>,
    pub e_dch: Vec<VarId>,
    pub e_fch: Vec<VarId>,
    pub soe: Vec<VarId>,
    pub c_deg: Vec<VarId>,
}

/// Per-kWh objective coefficients of slow charging and fast charging at a step.
pub(crate) fn unit_costs(
    s: &Scenario,
    v: usize,
    t: usize,
    price: f64,
    ct: CostToggles,
) -> (f64, f64) {
    let fees = |cp: Option<&crate::domain::ChargingPoint>| {
        cp.map_or(0.0, |cp| {
            let grid = if ct.include_grid_tariff {
                grid_fee(cp, t, &s.tariff_calendar)
            } else {
                0.0
            };
            let fee = if ct.include_cp_tariff {
                cp.cp_fee_eur_per_kwh
            } else {
                0.0
            };
            grid + fee
        })
    };
    (price + fees(s.slow_cp(v, t)), price + fees(s.fast_cp(v, t)))
}

pub(crate) fn emit_block(
    p: &mut LpProblem,
    s: &Scenario,
    spec: &BlockSpec,
) -> Result<BlockVars, LpError> {
    let vi = spec.vehicle;
    let v = &s.vehicles[vi];
    let n = spec.steps.len();
    let mut b = BlockVars {
        e_sch: Vec::with_capacity(n),
        e_dch: Vec::with_capacity(n),
        e_fch: Vec::with_capacity(n),
        soe: Vec::with_capacity(n),
        c_deg: Vec::with_capacity(n),
    };
    let cost_on = spec.objective == BlockObjective::Cost;
    let deg_on = cost_on && spec.toggles.include_degradation;
    let inf = f64::INFINITY;
    let fixed_cap = s.horizon.kw_to_kwh_per_step(PowerMode::FIXED_KW);

    for (k, t) in spec.steps.clone().enumerate() {
        let tag = format!("{},{t}", v.id);
        let price = spec.prices[t];
        let (c_sch, c_fch) = unit_costs(s, vi, t, price, spec.toggles);
        let last = k + 1 == n;
        let soe_cost = if !cost_on && last { -1.0 } else { 0.0 };
        let (c_sch, c_dch, c_fch) = if cost_on {
            (c_sch, -price, c_fch)
        } else {
            (0.0, 0.0, 0.0)
        };

        let e_sch = p.add_variable(0.0, inf, c_sch, format!("e_sch[{tag}]"))?;
        let e_dch = p.add_variable(0.0, inf, c_dch, format!("e_dch[{tag}]"))?;
        let e_fch = p.add_variable(0.0, inf, c_fch, format!("e_fch[{tag}]"))?;
        let soe = p.add_variable(
            v.soe_min_kwh(),
            v.soe_max_kwh(),
            soe_cost,
            format!("soe[{tag}]"),
        )?;
        let c_deg = if deg_on {
            p.add_variable(-inf, inf, 1.0, format!("c_deg[{tag}]"))?
        } else {
            p.add_variable(0.0, 0.0, 0.0, format!("c_deg[{tag}]"))?
        };

        let at_slow = s.slow_cp(vi, t).is_some();
        if spec.mode.cp_limits() {
            let cap = s.slow_limit(vi, t);
            p.add_constraint([(e_sch, 1.0)], Sense::Le, cap, format!("cp_sch[{tag}]"))?;
            p.add_constraint([(e_dch, 1.0)], Sense::Le, cap, format!("cp_dch[{tag}]"))?;
        }
        if spec.mode == PowerMode::ObcOnly && !at_slow {
            p.add_constraint(
                [(e_sch, 1.0)],
                Sense::Le,
                0.0,
                format!("unplugged_sch[{tag}]"),
            )?;
            p.add_constraint(
                [(e_dch, 1.0)],
                Sense::Le,
                0.0,
                format!("unplugged_dch[{tag}]"),
            )?;
        }
        if spec.mode == PowerMode::Fixed4kw {
            let cap = if at_slow { fixed_cap } else { 0.0 };
            p.add_constraint([(e_sch, 1.0)], Sense::Le, cap, format!("fixed_sch[{tag}]"))?;
            p.add_constraint([(e_dch, 1.0)], Sense::Le, cap, format!("fixed_dch[{tag}]"))?;
        }
        if spec.mode.obc_limits() {
            let obc = v.obc_max_kwh_per_step;
            p.add_constraint([(e_sch, 1.0)], Sense::Le, obc, format!("obc_sch[{tag}]"))?;
            p.add_constraint([(e_dch, 1.0)], Sense::Le, obc, format!("obc_dch[{tag}]"))?;
        }
        if spec.mode.cv_taper() && v.has_cv_taper() {
            let span = 1.0 - v.soe_cv_frac;
            let obc = v.obc_max_kwh_per_step;
            p.add_constraint(
                [(e_sch, 1.0), (soe, obc / (v.capacity_kwh * span))],
                Sense::Le,
                obc / span,
                format!("cv_taper[{tag}]"),
            )?;
        }
        p.add_constraint(
            [(e_fch, 1.0)],
            Sense::Le,
            s.fast_limit(vi, t),
            format!("fast[{tag}]"),
        )?;
        if deg_on {
            emit_degradation_rows(p, v, c_deg, e_dch, soe, &tag)?;
        }

        let drive = s.trips.get(vi, t) / v.eta_run;
        let mut terms = vec![
            (soe, 1.0),
            (e_sch, -v.eta_sch),
            (e_dch, 1.0 / v.eta_dch),
            (e_fch, -v.eta_fch),
        ];
        let rhs = match b.soe.last() {
            Some(&prev) => {
                terms.push((prev, -1.0));
                -drive
            }
            None => spec.initial_soe - drive,
        };
        p.add_constraint(terms, Sense::Eq, rhs, format!("balance[{tag}]"))?;

        if last {
            if let Some(floor) = spec.terminal_floor {
                p.add_constraint(
                    [(soe, 1.0)],
                    Sense::Ge,
                    floor,
                    format!("terminal_soe[{}]", v.id),
                )?;
            }
        }
        b.e_sch.push(e_sch);
        b.e_dch.push(e_dch);
        b.e_fch.push(e_fch);
        b.soe.push(soe);
        b.c_deg.push(c_deg);
    }
    Ok(b)
}

/// Per-step values read back from a block.
pub(crate) struct BlockValues {
    pub e_sch: Vec<f64>,
    pub e_dch: Vec<f64>,
    pub e_fch: Vec<f64>,
    pub soe: Vec<f64>,
    pub c_deg: Vec<f64>,
}

/// Reads a block's solution. Flows are clamped at zero to drop round-off.
/// Without the degradation term, `c_deg` is filled from the evaluator.
pub(crate) fn read_block(
    s: &Scenario,
    vehicle: usize,
    b: &BlockVars,
    sol: &LpSolution,
    degradation_in_lp: bool,
) -> BlockValues {
    let v = &s.vehicles[vehicle];
    let flow = |ids: &[VarId]| {
        ids.iter()
            .map(|&x| sol.value(x).max(0.0))
            .collect::<Vec<_>>()
    };
    let e_sch = flow(&b.e_sch);
    let e_dch = flow(&b.e_dch);
    let e_fch = flow(&b.e_fch);
    let soe: Vec<f64> = b.soe.iter().map(|&x| sol.value(x)).collect();
    let c_deg = if degradation_in_lp {
        b.c_deg.iter().map(|&x| sol.value(x)).collect()
    } else {
        e_dch
            .iter()
            .zip(&soe)
            .map(|(&e, &x)| evaluate_degradation(v, e, x))
            .collect()
    };
    BlockValues {
        e_sch,
        e_dch,
        e_fch,
        soe,
        c_deg,
    }
}

/// Evaluator value with the SOE clamped into the battery's range.
pub(crate) fn evaluate_degradation(v: &crate::domain::Vehicle, e_dch: f64, soe: f64) -> f64 {
    degradation_cost(v, e_dch.max(0.0), soe.clamp(0.0, v.capacity_kwh))
        .expect("clamped inputs are in range")
}
