use serde::Serialize;

use super::{CostToggles, PowerMode};
use crate::domain::{grid_fee, Scenario, ScenarioError};

/// Cost of one vehicle's schedule, split by component (EUR).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostBreakdown {
    /// Energy bought minus energy sold back.
    pub energy: f64,
    pub grid_fee: f64,
    pub cp_fee: f64,
    pub degradation: f64,
    /// Gross revenue from discharging, already netted into `energy`.
    pub v2g_revenue: f64,
    /// Sum of the components included in the objective.
    pub total: f64,
    /// Sum of all components, whether or not they were optimized.
    pub full_cost: f64,
}

impl std::ops::Add for CostBreakdown {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            energy: self.energy + o.energy,
            grid_fee: self.grid_fee + o.grid_fee,
            cp_fee: self.cp_fee + o.cp_fee,
            degradation: self.degradation + o.degradation,
            v2g_revenue: self.v2g_revenue + o.v2g_revenue,
            total: self.total + o.total,
            full_cost: self.full_cost + o.full_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleSchedule {
    pub vehicle_id: String,
    pub e_sch: Vec<f64>,
    pub e_dch: Vec<f64>,
    pub e_fch: Vec<f64>,
    /// End-of-step state of energy, kWh.
    pub soe: Vec<f64>,
    pub c_deg: Vec<f64>,
    pub costs: CostBreakdown,
}

impl VehicleSchedule {
    pub fn zeros(vehicle_id: impl Into<String>, steps: usize) -> Self {
        Self {
            vehicle_id: vehicle_id.into(),
            e_sch: vec![0.0; steps],
            e_dch: vec![0.0; steps],
            e_fch: vec![0.0; steps],
            soe: vec![0.0; steps],
            c_deg: vec![0.0; steps],
            costs: CostBreakdown::default(),
        }
    }

    /// Energy drawn from chargers, slow and fast.
    pub fn charged_kwh(&self) -> f64 {
        self.e_sch.iter().chain(&self.e_fch).sum()
    }

    pub fn discharged_kwh(&self) -> f64 {
        self.e_dch.iter().sum()
    }
}

/// One EVCA plug-in session and the LP that scheduled it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionTrace {
    pub vehicle_id: String,
    pub cp_id: String,
    pub arrive_step: usize,
    pub depart_step: usize,
    pub arrival_soe_kwh: f64,
    /// Departure floor as requested by the policy or end-of-day target.
    pub floor_kwh: f64,
    /// Floor actually imposed; lower than `floor_kwh` only when relaxed.
    pub imposed_floor_kwh: f64,
    pub departure_soe_kwh: f64,
    pub objective_eur: f64,
}

impl SessionTrace {
    pub fn relaxed(&self) -> bool {
        self.imposed_floor_kwh < self.floor_kwh
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetSchedule {
    /// `EVBA`, `EVCA-high`, `EVCA-low` or `EVCA-<fraction>`.
    pub model: String,
    pub price_label: String,
    pub toggles: CostToggles,
    pub power_mode: PowerMode,
    pub step_count: usize,
    pub vehicles: Vec<VehicleSchedule>,
    /// Objective value as reported by the LP solver(s).
    pub lp_objective: f64,
    pub costs: CostBreakdown,
    pub sessions: Vec<SessionTrace>,
    pub warnings: Vec<String>,
    pub assumptions: Vec<String>,
}

impl FleetSchedule {
    pub fn total_cost(&self) -> f64 {
        self.costs.total
    }

    pub fn charged_kwh(&self) -> f64 {
        self.vehicles.iter().map(VehicleSchedule::charged_kwh).sum()
    }

    pub fn discharged_kwh(&self) -> f64 {
        self.vehicles
            .iter()
            .map(VehicleSchedule::discharged_kwh)
            .sum()
    }

    pub fn vehicle(&self, id: &str) -> Option<&VehicleSchedule> {
        self.vehicles.iter().find(|v| v.vehicle_id == id)
    }
}

/// Recomputes a vehicle's cost term by term from prices, fees and the
/// schedule's flows, independent of the LP objective.
pub fn cost_breakdown(
    s: &Scenario,
    vehicle: usize,
    vs: &VehicleSchedule,
    toggles: CostToggles,
) -> Result<CostBreakdown, ScenarioError> {
    let prices = &s.prices()?.eur_per_kwh;
    let mut c = CostBreakdown::default();
    for (t, &price) in prices.iter().enumerate().take(vs.e_sch.len()) {
        let bought = vs.e_sch[t] + vs.e_fch[t];
        c.energy += price * (bought - vs.e_dch[t]);
        c.v2g_revenue += price * vs.e_dch[t];
        for (cp, e) in [
            (s.slow_cp(vehicle, t), vs.e_sch[t]),
            (s.fast_cp(vehicle, t), vs.e_fch[t]),
        ] {
            if let Some(cp) = cp {
                c.grid_fee += grid_fee(cp, t, &s.tariff_calendar) * e;
                c.cp_fee += cp.cp_fee_eur_per_kwh * e;
            }
        }
        c.degradation += vs.c_deg[t];
    }
    let on = |flag: bool, x: f64| if flag { x } else { 0.0 };
    c.total = c.energy
        + on(toggles.include_grid_tariff, c.grid_fee)
        + on(toggles.include_cp_tariff, c.cp_fee)
        + on(toggles.include_degradation, c.degradation);
    c.full_cost = c.energy + c.grid_fee + c.cp_fee + c.degradation;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChargingPoint, Horizon, PriceSeries, Vehicle};

    #[test]
    fn breakdown_by_hand() {
        let h = Horizon::new(2, 1.0);
        let mut s = Scenario::new(
            h,
            vec![Vehicle::new("EV1", 40.0, &h)],
            vec![ChargingPoint::home("home", &h)],
        );
        s.connect(0, 0, 0, 1);
        let s = s
            .with_prices(PriceSeries::new("p", vec![0.1, 0.2]))
            .unwrap();
        let mut vs = VehicleSchedule::zeros("EV1", 2);
        vs.e_sch[0] = 2.0;
        vs.e_dch[1] = 1.0;
        vs.c_deg = vec![0.5, 0.25];
        let c = cost_breakdown(&s, 0, &vs, CostToggles::new(false, true, false)).unwrap();
        assert!((c.energy - (0.2 - 0.2)).abs() < 1e-15);
        assert!((c.v2g_revenue - 0.2).abs() < 1e-15);
        // Steps 0 and 1 fall in the night band.
        assert!((c.grid_fee - 2.0 * 0.02284).abs() < 1e-15);
        assert!((c.cp_fee - 0.008).abs() < 1e-15);
        assert!((c.degradation - 0.75).abs() < 1e-15);
        assert!((c.total - (c.energy + c.grid_fee)).abs() < 1e-15);
        assert!((c.full_cost - (c.energy + c.grid_fee + c.cp_fee + 0.75)).abs() < 1e-15);
    }
}
