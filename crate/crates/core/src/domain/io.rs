//! JSON scenario files and headerless price CSVs.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    validate_scenario, ChargingPoint, ConnectivityMatrix, CpKind, DegradationParams, Horizon,
    PriceSeries, Scenario, ScenarioError, TariffCalendar, TripPlan, Vehicle,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    horizon: HorizonFile,
    #[serde(default)]
    vehicles: Vec<VehicleFile>,
    #[serde(default)]
    charging_points: Vec<CpFile>,
    #[serde(default)]
    connectivity: Vec<ConnectionFile>,
    #[serde(default)]
    trips: Vec<TripFile>,
    #[serde(default)]
    tariff_calendar: CalendarFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prices: Option<PriceSeries>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonFile {
    #[serde(default = "default_steps")]
    step_count: usize,
    #[serde(default = "default_step_hours")]
    step_hours: f64,
}

fn default_steps() -> usize {
    24
}

fn default_step_hours() -> f64 {
    1.0
}

impl Default for HorizonFile {
    fn default() -> Self {
        Self {
            step_count: default_steps(),
            step_hours: default_step_hours(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleFile {
    id: String,
    capacity_kwh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obc_max_kw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    battery_cost_eur: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    soe_min_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    soe_max_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    soe_cv_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    soe_initial_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_sch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_dch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_run: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_fch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degradation: Option<DegradationParams>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CpFile {
    id: String,
    kind: CpKind,
    power_kw: f64,
    grid_fee_low_eur_per_kwh: f64,
    grid_fee_high_eur_per_kwh: f64,
    cp_fee_eur_per_kwh: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectionFile {
    vehicle: String,
    cp: String,
    from_step: usize,
    to_step: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TripFile {
    vehicle: String,
    step: usize,
    energy_kwh: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalendarFile {
    night_start_hour: u32,
    night_end_hour: u32,
}

impl Default for CalendarFile {
    fn default() -> Self {
        Self {
            night_start_hour: 22,
            night_end_hour: 6,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads and validates a scenario file. Invariant violations are returned as
/// [`ScenarioError::Invalid`] with one diagnostic per violation.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let s = read_scenario_unchecked(path)?;
    check(s)
}

/// Reads a scenario file, resolving references but skipping invariant checks.
pub fn read_scenario_unchecked(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse(&text, &path.display().to_string())
}

/// Parses and validates scenario JSON.
pub fn scenario_from_json(text: &str) -> Result<Scenario, ScenarioError> {
    check(parse(text, "<json>")?)
}

/// Parses scenario JSON without invariant checks.
pub fn scenario_from_json_unchecked(text: &str) -> Result<Scenario, ScenarioError> {
    parse(text, "<json>")
}

fn check(s: Scenario) -> Result<Scenario, ScenarioError> {
    let diags = validate_scenario(&s);
    if diags.is_empty() {
        Ok(s)
    } else {
        Err(ScenarioError::Invalid(diags))
    }
}

fn parse(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let horizon = Horizon::new(file.horizon.step_count, file.horizon.step_hours);
    let nt = horizon.step_count;

    let mut seen = HashSet::new();
    let mut vehicles = Vec::with_capacity(file.vehicles.len());
    for vf in file.vehicles {
        if !seen.insert(vf.id.clone()) {
            return Err(ScenarioError::DuplicateId {
                kind: "vehicle",
                id: vf.id,
            });
        }
        let mut v = Vehicle::new(vf.id, vf.capacity_kwh, &horizon);
        if let Some(kw) = vf.obc_max_kw {
            v.obc_max_kwh_per_step = horizon.kw_to_kwh_per_step(kw);
            v.obc_assumed = false;
        }
        if let Some(c) = vf.battery_cost_eur {
            v.battery_cost_eur = c;
            v.battery_cost_assumed = false;
        }
        let set = |slot: &mut f64, value: Option<f64>| {
            if let Some(x) = value {
                *slot = x;
            }
        };
        set(&mut v.soe_min_frac, vf.soe_min_frac);
        set(&mut v.soe_max_frac, vf.soe_max_frac);
        set(&mut v.soe_cv_frac, vf.soe_cv_frac);
        set(&mut v.soe_initial_frac, vf.soe_initial_frac);
        set(&mut v.eta_sch, vf.eta_sch);
        set(&mut v.eta_dch, vf.eta_dch);
        set(&mut v.eta_run, vf.eta_run);
        set(&mut v.eta_fch, vf.eta_fch);
        if let Some(d) = vf.degradation {
            v.degradation = d;
        }
        vehicles.push(v);
    }

    let mut seen = HashSet::new();
    let mut cps = Vec::with_capacity(file.charging_points.len());
    for cf in file.charging_points {
        if !seen.insert(cf.id.clone()) {
            return Err(ScenarioError::DuplicateId {
                kind: "charging point",
                id: cf.id,
            });
        }
        cps.push(ChargingPoint {
            id: cf.id,
            kind: cf.kind,
            power_limit_kwh_per_step: horizon.kw_to_kwh_per_step(cf.power_kw),
            grid_fee_low_eur_per_kwh: cf.grid_fee_low_eur_per_kwh,
            grid_fee_high_eur_per_kwh: cf.grid_fee_high_eur_per_kwh,
            cp_fee_eur_per_kwh: cf.cp_fee_eur_per_kwh,
        });
    }

    let vehicle_idx = |id: &str, context: String| {
        vehicles
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| ScenarioError::UnknownReference {
                kind: "vehicle",
                id: id.to_string(),
                context,
            })
    };

    let mut connectivity = ConnectivityMatrix::new(vehicles.len(), nt, cps.len());
    for (i, c) in file.connectivity.iter().enumerate() {
        let context = format!("connectivity entry {i}");
        let v = vehicle_idx(&c.vehicle, context.clone())?;
        let cp = cps.iter().position(|x| x.id == c.cp).ok_or_else(|| {
            ScenarioError::UnknownReference {
                kind: "charging point",
                id: c.cp.clone(),
                context: context.clone(),
            }
        })?;
        if c.from_step > c.to_step || c.to_step >= nt {
            return Err(ScenarioError::StepRange {
                context,
                from: c.from_step,
                to: c.to_step,
                steps: nt,
            });
        }
        for t in c.from_step..=c.to_step {
            connectivity.set(v, t, cp, true);
        }
    }

    let mut trips = TripPlan::new(vehicles.len(), nt);
    for (i, tr) in file.trips.iter().enumerate() {
        let context = format!("trip entry {i}");
        let v = vehicle_idx(&tr.vehicle, context.clone())?;
        if tr.step >= nt {
            return Err(ScenarioError::StepRange {
                context,
                from: tr.step,
                to: tr.step,
                steps: nt,
            });
        }
        trips.add(v, tr.step, tr.energy_kwh);
    }

    let tariff_calendar = TariffCalendar::new(
        file.tariff_calendar.night_start_hour,
        file.tariff_calendar.night_end_hour,
        &horizon,
    );
    Ok(Scenario {
        horizon,
        vehicles,
        charging_points: cps,
        connectivity,
        trips,
        tariff_calendar,
        prices: file.prices,
    })
}

fn to_file(s: &Scenario) -> ScenarioFile {
    let h = s.horizon;
    let per_kw = |kwh: f64| kwh / h.step_hours;
    let vehicles = s
        .vehicles
        .iter()
        .map(|v| VehicleFile {
            id: v.id.clone(),
            capacity_kwh: v.capacity_kwh,
            obc_max_kw: (!v.obc_assumed).then(|| per_kw(v.obc_max_kwh_per_step)),
            battery_cost_eur: (!v.battery_cost_assumed).then_some(v.battery_cost_eur),
            soe_min_frac: Some(v.soe_min_frac),
            soe_max_frac: Some(v.soe_max_frac),
            soe_cv_frac: Some(v.soe_cv_frac),
            soe_initial_frac: Some(v.soe_initial_frac),
            eta_sch: Some(v.eta_sch),
            eta_dch: Some(v.eta_dch),
            eta_run: Some(v.eta_run),
            eta_fch: Some(v.eta_fch),
            degradation: Some(v.degradation),
        })
        .collect();
    let charging_points = s
        .charging_points
        .iter()
        .map(|c| CpFile {
            id: c.id.clone(),
            kind: c.kind,
            power_kw: per_kw(c.power_limit_kwh_per_step),
            grid_fee_low_eur_per_kwh: c.grid_fee_low_eur_per_kwh,
            grid_fee_high_eur_per_kwh: c.grid_fee_high_eur_per_kwh,
            cp_fee_eur_per_kwh: c.cp_fee_eur_per_kwh,
        })
        .collect();

    let (nv, nt, nc) = s.connectivity.dims();
    let mut connectivity = Vec::new();
    for v in 0..nv {
        for cp in 0..nc {
            let mut t = 0;
            while t < nt {
                if !s.connectivity.get(v, t, cp) {
                    t += 1;
                    continue;
                }
                let from = t;
                while t + 1 < nt && s.connectivity.get(v, t + 1, cp) {
                    t += 1;
                }
                connectivity.push(ConnectionFile {
                    vehicle: s.vehicles[v].id.clone(),
                    cp: s.charging_points[cp].id.clone(),
                    from_step: from,
                    to_step: t,
                });
                t += 1;
            }
        }
    }
    let mut trips = Vec::new();
    for v in 0..nv {
        for t in 0..nt {
            let e = s.trips.get(v, t);
            if e != 0.0 {
                trips.push(TripFile {
                    vehicle: s.vehicles[v].id.clone(),
                    step: t,
                    energy_kwh: e,
                });
            }
        }
    }
    ScenarioFile {
        horizon: HorizonFile {
            step_count: h.step_count,
            step_hours: h.step_hours,
        },
        vehicles,
        charging_points,
        connectivity,
        trips,
        tariff_calendar: CalendarFile {
            night_start_hour: s.tariff_calendar.night_start_hour,
            night_end_hour: s.tariff_calendar.night_end_hour,
        },
        prices: s.prices.clone(),
    }
}

/// Serializes a scenario to pretty-printed JSON in the file format.
pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&to_file(s)).expect("scenario file types always serialize")
}

pub fn write_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, scenario_to_json(s)).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a headerless `step_index,price` CSV. Step indices must be 0-based
/// and contiguous. The series is labelled with the file stem.
pub fn load_price_series(path: impl AsRef<Path>) -> Result<PriceSeries, ScenarioError> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "prices".to_string());
    parse_price_csv(&text, &label, &path.display().to_string())
}

pub fn parse_price_csv(
    text: &str,
    label: &str,
    origin: &str,
) -> Result<PriceSeries, ScenarioError> {
    let row_err = |line: usize, message: String| ScenarioError::PriceRow {
        path: origin.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut prices = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            row_err(line, e.to_string())
        })?;
        let line = record
            .position()
            .map_or(prices.len() + 1, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(row_err(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let step: usize = record[0]
            .parse()
            .map_err(|_| row_err(line, format!("invalid step index `{}`", &record[0])))?;
        if step != prices.len() {
            return Err(row_err(
                line,
                format!("expected step index {}, found {step}", prices.len()),
            ));
        }
        let price: f64 = record[1]
            .parse()
            .map_err(|_| row_err(line, format!("invalid price `{}`", &record[1])))?;
        if !price.is_finite() {
            return Err(row_err(line, format!("price must be finite, got {price}")));
        }
        prices.push(price);
    }
    Ok(PriceSeries::new(label, prices))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "horizon": {"step_count": 4, "step_hours": 0.5},
        "vehicles": [{"id": "EV1", "capacity_kwh": 40, "obc_max_kw": 6}],
        "charging_points": [{"id": "home", "kind": "slow", "power_kw": 4,
            "grid_fee_low_eur_per_kwh": 0.02, "grid_fee_high_eur_per_kwh": 0.04,
            "cp_fee_eur_per_kwh": 0.004}],
        "connectivity": [{"vehicle": "EV1", "cp": "home", "from_step": 0, "to_step": 1}],
        "trips": [{"vehicle": "EV1", "step": 3, "energy_kwh": 2.5}]
    }"#;

    #[test]
    fn converts_kw_and_applies_defaults() {
        let s = scenario_from_json(MINIMAL).unwrap();
        assert_eq!(s.charging_points[0].power_limit_kwh_per_step, 2.0);
        let v = &s.vehicles[0];
        assert_eq!(v.obc_max_kwh_per_step, 3.0);
        assert!(!v.obc_assumed);
        assert!(v.battery_cost_assumed);
        assert_eq!(v.battery_cost_eur, 6000.0);
        assert!(s.connectivity.get(0, 1, 0) && !s.connectivity.get(0, 2, 0));
        assert_eq!(s.trips.get(0, 3), 2.5);
        assert!(s.prices.is_none());
    }

    #[test]
    fn round_trip_is_lossless() {
        let s = scenario_from_json(MINIMAL).unwrap();
        let again = scenario_from_json(&scenario_to_json(&s)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn unknown_reference_names_the_id() {
        let text = MINIMAL.replace(r#""cp": "home""#, r#""cp": "garage""#);
        let err = scenario_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("garage"), "{err}");
    }

    #[test]
    fn unknown_field_reports_line_and_field() {
        let text = MINIMAL.replace(
            r#""capacity_kwh": 40"#,
            r#""capacity_kwh": 40, "colour": "red""#,
        );
        match scenario_from_json(&text).unwrap_err() {
            ScenarioError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("colour"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_vehicle_list_is_valid() {
        let s = scenario_from_json(r#"{"vehicles": []}"#).unwrap();
        assert!(s.vehicles.is_empty());
        assert_eq!(s.horizon, Horizon::default());
    }

    #[test]
    fn price_csv_contiguity_and_parse_errors() {
        let ok = parse_price_csv("0,0.05\n1,-0.01\n2,0.07\n", "p", "p.csv").unwrap();
        assert_eq!(ok.eur_per_kwh, vec![0.05, -0.01, 0.07]);
        let gap = parse_price_csv("0,0.05\n2,0.07\n", "p", "p.csv").unwrap_err();
        assert!(gap.to_string().contains("line 2"), "{gap}");
        let bad = parse_price_csv("0,abc\n", "p", "p.csv").unwrap_err();
        assert!(bad.to_string().contains("invalid price"), "{bad}");
        let header = parse_price_csv("step,price\n0,0.1\n", "p", "p.csv").unwrap_err();
        assert!(header.to_string().contains("line 1"), "{header}");
    }

    #[test]
    fn out_of_range_connection_rejected() {
        let text = MINIMAL.replace(r#""to_step": 1"#, r#""to_step": 9"#);
        assert!(matches!(
            scenario_from_json(&text).unwrap_err(),
            ScenarioError::StepRange { to: 9, .. }
        ));
    }
}
