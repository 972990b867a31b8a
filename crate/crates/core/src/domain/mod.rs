//! Scenario data model shared by both aggregator formulations.
//!
//! Power limits are stored as energy per time step (kWh); scenario files carry
//! kW and are converted with the horizon's step length at load time.

mod io;
mod tariff;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_price_series, load_scenario, parse_price_csv, read_scenario_unchecked, scenario_from_json,
    scenario_from_json_unchecked, scenario_to_json, write_scenario,
};
pub use tariff::{grid_fee, TariffBand, TariffCalendar};
pub use validate::{validate_scenario, Diagnostic, DiagnosticKind};

/// Default battery capital cost when a vehicle does not state one.
pub const DEFAULT_BATTERY_COST_EUR_PER_KWH: f64 = 150.0;
/// Default on-board charger rating when a vehicle does not state one.
pub const DEFAULT_OBC_KW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub step_count: usize,
    pub step_hours: f64,
}

impl Default for Horizon {
    fn default() -> Self {
        Self {
            step_count: 24,
            step_hours: 1.0,
        }
    }
}

impl Horizon {
    pub fn new(step_count: usize, step_hours: f64) -> Self {
        Self {
            step_count,
            step_hours,
        }
    }

    /// Hour of day (in `[0, 24)`) at which step `t` starts, with step 0 at midnight.
    pub fn start_hour(&self, t: usize) -> f64 {
        (t as f64 * self.step_hours).rem_euclid(24.0)
    }

    pub fn kw_to_kwh_per_step(&self, kw: f64) -> f64 {
        kw * self.step_hours
    }
}

/// Coefficients of the two-plane linearized degradation cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationParams {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            d1: -0.3429,
            d2: 0.03403,
            d3: 0.004287,
            d4: 0.008317,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vehicle {
    pub id: String,
    pub capacity_kwh: f64,
    pub obc_max_kwh_per_step: f64,
    pub battery_cost_eur: f64,
    pub soe_min_frac: f64,
    pub soe_max_frac: f64,
    /// Breakpoint between constant-current and constant-voltage charging.
    pub soe_cv_frac: f64,
    pub soe_initial_frac: f64,
    pub eta_sch: f64,
    pub eta_dch: f64,
    pub eta_run: f64,
    pub eta_fch: f64,
    pub degradation: DegradationParams,
    /// The battery cost is the per-kWh default rather than a stated value.
    pub battery_cost_assumed: bool,
    /// The OBC rating is the default rather than a stated value.
    pub obc_assumed: bool,
}

impl Vehicle {
    /// A vehicle with the reference efficiencies, SOE window and degradation
    /// coefficients, the default OBC rating and the default battery cost.
    pub fn new(id: impl Into<String>, capacity_kwh: f64, horizon: &Horizon) -> Self {
        Self {
            id: id.into(),
            capacity_kwh,
            obc_max_kwh_per_step: horizon.kw_to_kwh_per_step(DEFAULT_OBC_KW),
            battery_cost_eur: DEFAULT_BATTERY_COST_EUR_PER_KWH * capacity_kwh,
            soe_min_frac: 0.2,
            soe_max_frac: 1.0,
            soe_cv_frac: 0.8,
            soe_initial_frac: 0.6,
            eta_sch: 0.95,
            eta_dch: 0.85,
            eta_run: 0.90,
            eta_fch: 0.80,
            degradation: DegradationParams::default(),
            battery_cost_assumed: true,
            obc_assumed: true,
        }
    }

    pub fn soe_min_kwh(&self) -> f64 {
        self.soe_min_frac * self.capacity_kwh
    }

    pub fn soe_max_kwh(&self) -> f64 {
        self.soe_max_frac * self.capacity_kwh
    }

    pub fn soe_cv_kwh(&self) -> f64 {
        self.soe_cv_frac * self.capacity_kwh
    }

    pub fn soe_initial_kwh(&self) -> f64 {
        self.soe_initial_frac * self.capacity_kwh
    }

    /// Whether the constant-voltage taper is active (a breakpoint below 100 %).
    pub fn has_cv_taper(&self) -> bool {
        self.soe_cv_frac < 1.0
    }

    /// Upper limit on slow charging at end-of-step SOE `soe_kwh` from the
    /// CC-CV taper: the OBC rating at the breakpoint, falling linearly to zero
    /// at full capacity.
    pub fn cv_taper_limit(&self, soe_kwh: f64) -> f64 {
        self.obc_max_kwh_per_step * (self.capacity_kwh - soe_kwh)
            / (self.capacity_kwh * (1.0 - self.soe_cv_frac))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpKind {
    /// AC charger; power flows through the vehicle's OBC.
    Slow,
    /// DC charger; bypasses the OBC, charging only.
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargingPoint {
    pub id: String,
    pub kind: CpKind,
    pub power_limit_kwh_per_step: f64,
    pub grid_fee_low_eur_per_kwh: f64,
    pub grid_fee_high_eur_per_kwh: f64,
    pub cp_fee_eur_per_kwh: f64,
}

impl ChargingPoint {
    fn reference(
        id: impl Into<String>,
        kind: CpKind,
        power_kw: f64,
        fees: [f64; 3],
        horizon: &Horizon,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            power_limit_kwh_per_step: horizon.kw_to_kwh_per_step(power_kw),
            grid_fee_low_eur_per_kwh: fees[0],
            grid_fee_high_eur_per_kwh: fees[1],
            cp_fee_eur_per_kwh: fees[2],
        }
    }

    /// 4 kW home charger.
    pub fn home(id: impl Into<String>, horizon: &Horizon) -> Self {
        Self::reference(id, CpKind::Slow, 4.0, [0.02284, 0.047040, 0.004], horizon)
    }

    /// 8 kW workplace charger.
    pub fn work(id: impl Into<String>, horizon: &Horizon) -> Self {
        Self::reference(id, CpKind::Slow, 8.0, [0.016120, 0.033600, 0.0183], horizon)
    }

    /// 12 kW leisure-site charger.
    pub fn leisure(id: impl Into<String>, horizon: &Horizon) -> Self {
        Self::reference(id, CpKind::Slow, 12.0, [0.016120, 0.033600, 0.03], horizon)
    }

    /// 100 kW DC fast charger.
    pub fn dc_fast(id: impl Into<String>, horizon: &Horizon) -> Self {
        Self::reference(id, CpKind::Fast, 100.0, [0.010750, 0.022840, 0.2], horizon)
    }
}

/// Dense `(vehicle, step, charging point)` connection indicator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityMatrix {
    vehicles: usize,
    steps: usize,
    cps: usize,
    data: Vec<bool>,
}

impl ConnectivityMatrix {
    pub fn new(vehicles: usize, steps: usize, cps: usize) -> Self {
        Self {
            vehicles,
            steps,
            cps,
            data: vec![false; vehicles * steps * cps],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.vehicles, self.steps, self.cps)
    }

    fn idx(&self, v: usize, t: usize, cp: usize) -> usize {
        assert!(v < self.vehicles && t < self.steps && cp < self.cps);
        (v * self.steps + t) * self.cps + cp
    }

    pub fn get(&self, v: usize, t: usize, cp: usize) -> bool {
        self.data[self.idx(v, t, cp)]
    }

    pub fn set(&mut self, v: usize, t: usize, cp: usize, on: bool) {
        let i = self.idx(v, t, cp);
        self.data[i] = on;
    }

    pub fn connected_cps(&self, v: usize, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cps).filter(move |&cp| self.get(v, t, cp))
    }

    /// The charging point vehicle `v` is plugged into at step `t`, if any.
    pub fn connection(&self, v: usize, t: usize) -> Option<usize> {
        self.connected_cps(v, t).next()
    }
}

/// Mobility energy draw `E_RUN` per `(vehicle, step)`, in kWh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripPlan {
    vehicles: usize,
    steps: usize,
    data: Vec<f64>,
}

impl TripPlan {
    pub fn new(vehicles: usize, steps: usize) -> Self {
        Self {
            vehicles,
            steps,
            data: vec![0.0; vehicles * steps],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.vehicles, self.steps)
    }

    pub fn get(&self, v: usize, t: usize) -> f64 {
        assert!(v < self.vehicles && t < self.steps);
        self.data[v * self.steps + t]
    }

    pub fn set(&mut self, v: usize, t: usize, energy_kwh: f64) {
        assert!(v < self.vehicles && t < self.steps);
        self.data[v * self.steps + t] = energy_kwh;
    }

    pub fn add(&mut self, v: usize, t: usize, energy_kwh: f64) {
        let cur = self.get(v, t);
        self.set(v, t, cur + energy_kwh);
    }

    /// Total draw of vehicle `v` over `steps`.
    pub fn total(&self, v: usize, steps: std::ops::Range<usize>) -> f64 {
        steps.map(|t| self.get(v, t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub label: String,
    /// Energy price per step, EUR/kWh. May be negative.
    pub eur_per_kwh: Vec<f64>,
}

impl PriceSeries {
    pub fn new(label: impl Into<String>, eur_per_kwh: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            eur_per_kwh,
        }
    }

    pub fn constant(label: impl Into<String>, price: f64, steps: usize) -> Self {
        Self::new(label, vec![price; steps])
    }

    pub fn len(&self) -> usize {
        self.eur_per_kwh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eur_per_kwh.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.eur_per_kwh.iter().sum::<f64>() / self.len().max(1) as f64
    }

    /// Sample standard deviation.
    pub fn std_dev(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.eur_per_kwh.iter().map(|p| (p - m).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub horizon: Horizon,
    pub vehicles: Vec<Vehicle>,
    pub charging_points: Vec<ChargingPoint>,
    pub connectivity: ConnectivityMatrix,
    pub trips: TripPlan,
    pub tariff_calendar: TariffCalendar,
    pub prices: Option<PriceSeries>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{context} references unknown {kind} `{id}`")]
    UnknownReference {
        kind: &'static str,
        id: String,
        context: String,
    },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{context}: step range {from}..={to} is outside the {steps}-step horizon")]
    StepRange {
        context: String,
        from: usize,
        to: usize,
        steps: usize,
    },
    #[error("scenario violates {} invariant(s): {}", .0.len(), join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{path}: line {line}: {message}")]
    PriceRow {
        path: String,
        line: usize,
        message: String,
    },
    #[error("price series `{label}` has {found} steps, horizon has {expected}")]
    PriceLength {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("scenario has no price series attached")]
    MissingPrices,
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Scenario {
    /// An empty scenario over `horizon` with the default tariff calendar.
    pub fn empty(horizon: Horizon) -> Self {
        let n = horizon.step_count;
        Self {
            horizon,
            vehicles: Vec::new(),
            charging_points: Vec::new(),
            connectivity: ConnectivityMatrix::new(0, n, 0),
            trips: TripPlan::new(0, n),
            tariff_calendar: TariffCalendar::default_for(&horizon),
            prices: None,
        }
    }

    /// Builds a scenario from parts, sizing connectivity and trips to match.
    pub fn new(
        horizon: Horizon,
        vehicles: Vec<Vehicle>,
        charging_points: Vec<ChargingPoint>,
    ) -> Self {
        let (nv, nt, nc) = (vehicles.len(), horizon.step_count, charging_points.len());
        Self {
            horizon,
            connectivity: ConnectivityMatrix::new(nv, nt, nc),
            trips: TripPlan::new(nv, nt),
            tariff_calendar: TariffCalendar::default_for(&horizon),
            vehicles,
            charging_points,
            prices: None,
        }
    }

    /// Marks `vehicle` as connected to `cp` over the inclusive step range.
    pub fn connect(&mut self, vehicle: usize, cp: usize, from_step: usize, to_step: usize) {
        for t in from_step..=to_step {
            self.connectivity.set(vehicle, t, cp, true);
        }
    }

    /// Attaches a price series, checking its length against the horizon.
    pub fn with_prices(mut self, prices: PriceSeries) -> Result<Self, ScenarioError> {
        if prices.len() != self.horizon.step_count {
            return Err(ScenarioError::PriceLength {
                found: prices.len(),
                label: prices.label,
                expected: self.horizon.step_count,
            });
        }
        self.prices = Some(prices);
        Ok(self)
    }

    pub fn prices(&self) -> Result<&PriceSeries, ScenarioError> {
        self.prices.as_ref().ok_or(ScenarioError::MissingPrices)
    }

    pub fn step_count(&self) -> usize {
        self.horizon.step_count
    }

    pub fn vehicle_index(&self, id: &str) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    pub fn cp_index(&self, id: &str) -> Option<usize> {
        self.charging_points.iter().position(|c| c.id == id)
    }

    /// The slow charging point vehicle `v` is plugged into at step `t`.
    pub fn slow_cp(&self, v: usize, t: usize) -> Option<&ChargingPoint> {
        self.connectivity
            .connected_cps(v, t)
            .map(|cp| &self.charging_points[cp])
            .find(|cp| cp.kind == CpKind::Slow)
    }

    /// The fast charging point vehicle `v` is plugged into at step `t`.
    pub fn fast_cp(&self, v: usize, t: usize) -> Option<&ChargingPoint> {
        self.connectivity
            .connected_cps(v, t)
            .map(|cp| &self.charging_points[cp])
            .find(|cp| cp.kind == CpKind::Fast)
    }

    /// Slow-charging energy limit at `(v, t)`: the connected slow CP's limit, else zero.
    pub fn slow_limit(&self, v: usize, t: usize) -> f64 {
        self.slow_cp(v, t)
            .map_or(0.0, |c| c.power_limit_kwh_per_step)
    }

    /// Fast-charging energy limit at `(v, t)`: the connected fast CP's limit, else zero.
    pub fn fast_limit(&self, v: usize, t: usize) -> f64 {
        self.fast_cp(v, t)
            .map_or(0.0, |c| c.power_limit_kwh_per_step)
    }

    /// Human-readable notes on values that were defaulted rather than stated.
    pub fn assumptions(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let assumed_cost: Vec<&str> = self
            .vehicles
            .iter()
            .filter(|v| v.battery_cost_assumed)
            .map(|v| v.id.as_str())
            .collect();
        if !assumed_cost.is_empty() {
            notes.push(format!(
                "battery capital cost defaults to {DEFAULT_BATTERY_COST_EUR_PER_KWH} EUR/kWh of capacity for: {}",
                assumed_cost.join(", ")
            ));
        }
        let assumed_obc: Vec<&str> = self
            .vehicles
            .iter()
            .filter(|v| v.obc_assumed)
            .map(|v| v.id.as_str())
            .collect();
        if !assumed_obc.is_empty() {
            notes.push(format!(
                "on-board charger rating defaults to {DEFAULT_OBC_KW} kW for: {}",
                assumed_obc.join(", ")
            ));
        }
        notes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_chargers_convert_kw_with_step_length() {
        let h = Horizon::new(48, 0.5);
        let home = ChargingPoint::home("home", &h);
        assert_eq!(home.power_limit_kwh_per_step, 2.0);
        assert_eq!(ChargingPoint::dc_fast("f", &h).kind, CpKind::Fast);
        let v = Vehicle::new("ev", 40.0, &h);
        assert_eq!(v.obc_max_kwh_per_step, 5.0);
        assert_eq!(v.battery_cost_eur, 6000.0);
    }

    #[test]
    fn taper_equals_obc_at_breakpoint_and_zero_when_full() {
        let v = Vehicle::new("ev", 20.0, &Horizon::default());
        assert!((v.cv_taper_limit(16.0) - 10.0).abs() < 1e-12);
        assert!(v.cv_taper_limit(20.0).abs() < 1e-12);
    }

    #[test]
    fn price_length_checked_on_attach() {
        let s = Scenario::empty(Horizon::default());
        let err = s
            .with_prices(PriceSeries::constant("flat", 0.05, 23))
            .unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::PriceLength {
                expected: 24,
                found: 23,
                ..
            }
        ));
    }

    #[test]
    fn sample_std_dev() {
        let p = PriceSeries::new("x", vec![1.0, 2.0, 3.0, 4.0]);
        assert!((p.mean() - 2.5).abs() < 1e-15);
        assert!((p.std_dev() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
