//! Aggregator comparison and the two ablation studies.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::audit::{check_schedule_with_tol, AuditError, ConstraintKind, ViolationReport};
use super::report::{num, opt_num, Report, Table};
use super::svg::{bar_chart, line_chart, Series};
use crate::domain::{validate_scenario, PriceSeries, Scenario};
use crate::model::{
    solve_evba_with, solve_evca_with, CostToggles, CostVariant, FleetSchedule, ModelError,
    PowerMode, Settings, SoePolicy,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] crate::domain::ScenarioError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("ordering violated: {check} ({lhs} > {rhs})")]
    Ordering { check: String, lhs: f64, rhs: f64 },
}

/// A checked inequality `lhs <= rhs` between two objective values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn ordering(check: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> OrderingCheck {
    OrderingCheck {
        check: check.into(),
        lhs,
        rhs,
        holds: lhs <= rhs + tol * (1.0 + rhs.abs()),
    }
}

fn enforce(checks: &[OrderingCheck]) -> Result<(), AnalysisError> {
    match checks.iter().find(|c| !c.holds) {
        Some(c) => Err(AnalysisError::Ordering {
            check: c.check.clone(),
            lhs: c.lhs,
            rhs: c.rhs,
        }),
        None => Ok(()),
    }
}

fn validated(s: &Scenario) -> Result<(), AnalysisError> {
    let d = validate_scenario(s);
    if d.is_empty() {
        Ok(())
    } else {
        Err(ModelError::InvalidScenario(d).into())
    }
}

fn with_prices(s: &Scenario, p: &PriceSeries) -> Result<Scenario, AnalysisError> {
    Ok(s.clone().with_prices(p.clone())?)
}

fn violation_counts(r: &ViolationReport) -> BTreeMap<String, usize> {
    ConstraintKind::ALL
        .iter()
        .map(|&k| (k.name().to_string(), r.count(k)))
        .filter(|(_, n)| *n > 0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleSummary {
    pub vehicle: String,
    pub cost: f64,
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
    pub soe: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCell {
    pub price_set: String,
    pub model: String,
    /// `None` when the model solved; otherwise the reason it did not.
    pub error: Option<String>,
    pub total_cost: Option<f64>,
    pub charged_kwh: Option<f64>,
    pub discharged_kwh: Option<f64>,
    pub audit_violations: usize,
    pub vehicles: Vec<VehicleSummary>,
}

impl ComparisonCell {
    fn from_result(
        price_set: &str,
        model: String,
        r: Result<FleetSchedule, ModelError>,
        audit: usize,
    ) -> Self {
        match r {
            Ok(fs) => Self {
                price_set: price_set.to_string(),
                model,
                error: None,
                total_cost: Some(fs.total_cost()),
                charged_kwh: Some(fs.charged_kwh()),
                discharged_kwh: Some(fs.discharged_kwh()),
                audit_violations: audit,
                vehicles: fs
                    .vehicles
                    .iter()
                    .map(|v| VehicleSummary {
                        vehicle: v.vehicle_id.clone(),
                        cost: v.costs.total,
                        charged_kwh: v.charged_kwh(),
                        discharged_kwh: v.discharged_kwh(),
                        soe: v.soe.clone(),
                    })
                    .collect(),
            },
            Err(e) => Self {
                price_set: price_set.to_string(),
                model,
                error: Some(e.to_string()),
                total_cost: None,
                charged_kwh: None,
                discharged_kwh: None,
                audit_violations: 0,
                vehicles: Vec::new(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub toggles: CostToggles,
    pub power_mode: PowerMode,
    pub policies: Vec<SoePolicy>,
    pub price_sets: Vec<PriceSeries>,
    pub cells: Vec<ComparisonCell>,
    /// EVBA cost never exceeds a feasible EVCA cost on the same prices.
    pub dominance: Vec<OrderingCheck>,
    pub assumptions: Vec<String>,
}

impl ComparisonReport {
    pub fn cell(&self, price_set: &str, model: &str) -> Option<&ComparisonCell> {
        self.cells
            .iter()
            .find(|c| c.price_set == price_set && c.model == model)
    }

    pub fn models(&self) -> Vec<String> {
        let mut m = vec!["EVBA".to_string()];
        m.extend(self.policies.iter().map(SoePolicy::model_label));
        m
    }
}

/// Solves EVBA and EVCA under each policy for every price set, with all cost
/// terms and power limits on.
pub fn compare_aggregators(
    s: &Scenario,
    price_sets: &[PriceSeries],
    policies: &[SoePolicy],
) -> Result<ComparisonReport, AnalysisError> {
    compare_aggregators_with(
        s,
        price_sets,
        policies,
        CostToggles::ALL,
        PowerMode::Both,
        &Settings::default(),
    )
}

pub fn compare_aggregators_with(
    s: &Scenario,
    price_sets: &[PriceSeries],
    policies: &[SoePolicy],
    toggles: CostToggles,
    mode: PowerMode,
    settings: &Settings,
) -> Result<ComparisonReport, AnalysisError> {
    validated(s)?;
    let mut cells = Vec::new();
    let mut dominance = Vec::new();
    for p in price_sets {
        let sp = with_prices(s, p)?;
        let audit = |r: &Result<FleetSchedule, ModelError>| -> Result<usize, AnalysisError> {
            Ok(match r {
                Ok(fs) => check_schedule_with_tol(&sp, fs, settings.tolerance)?
                    .violations
                    .len(),
                Err(_) => 0,
            })
        };
        let evba = solve_evba_with(&sp, toggles, mode, settings);
        let evba_audit = audit(&evba)?;
        let evba_cost = evba.as_ref().ok().map(FleetSchedule::total_cost);
        cells.push(ComparisonCell::from_result(
            &p.label,
            "EVBA".into(),
            evba,
            evba_audit,
        ));
        for pol in policies {
            let r = solve_evca_with(&sp, *pol, toggles, mode, settings);
            if let Err(e) = &r {
                if !matches!(
                    e,
                    ModelError::SessionInfeasible { .. }
                        | ModelError::ItineraryInfeasible { .. }
                        | ModelError::Infeasible { .. }
                ) {
                    return Err(r.unwrap_err().into());
                }
            }
            let a = audit(&r)?;
            if let (Some(b), Ok(fs)) = (evba_cost, &r) {
                dominance.push(ordering(
                    format!("{}: EVBA <= {}", p.label, pol.model_label()),
                    b,
                    fs.total_cost(),
                    settings.tolerance,
                ));
            }
            cells.push(ComparisonCell::from_result(
                &p.label,
                pol.model_label(),
                r,
                a,
            ));
        }
    }
    enforce(&dominance)?;
    Ok(ComparisonReport {
        toggles,
        power_mode: mode,
        policies: policies.to_vec(),
        price_sets: price_sets.to_vec(),
        cells,
        dominance,
        assumptions: s.assumptions(),
    })
}

impl Report for ComparisonReport {
    fn stem(&self) -> &str {
        "comparison"
    }

    fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    fn table(&self) -> Table {
        let mut t = Table::new(&[
            "price_set",
            "model",
            "vehicle",
            "cost_eur",
            "charged_kwh",
            "discharged_kwh",
            "audit_violations",
            "status",
        ]);
        for c in &self.cells {
            let status = c.error.clone().unwrap_or_else(|| "optimal".into());
            t.push(vec![
                c.price_set.clone(),
                c.model.clone(),
                "fleet".into(),
                opt_num(c.total_cost),
                opt_num(c.charged_kwh),
                opt_num(c.discharged_kwh),
                c.audit_violations.to_string(),
                status,
            ]);
            for v in &c.vehicles {
                t.push(vec![
                    c.price_set.clone(),
                    c.model.clone(),
                    v.vehicle.clone(),
                    num(v.cost),
                    num(v.charged_kwh),
                    num(v.discharged_kwh),
                    String::new(),
                    String::new(),
                ]);
            }
        }
        t
    }

    fn charts(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let labels: Vec<String> = self.price_sets.iter().map(|p| p.label.clone()).collect();
        let cost_series: Vec<Series> = self
            .models()
            .iter()
            .map(|m| {
                Series::new(
                    m.clone(),
                    labels
                        .iter()
                        .map(|p| {
                            self.cell(p, m)
                                .and_then(|c| c.total_cost)
                                .unwrap_or(f64::NAN)
                        })
                        .collect(),
                )
            })
            .collect();
        out.push((
            "costs.svg".into(),
            bar_chart("Fleet cost by price set", "EUR", &labels, &cost_series),
        ));
        let prices: Vec<Series> = self
            .price_sets
            .iter()
            .map(|p| Series::new(p.label.clone(), p.eur_per_kwh.clone()))
            .collect();
        out.push((
            "prices.svg".into(),
            line_chart("Energy price", "step", "EUR/kWh", &prices),
        ));

        // SOE per vehicle under the most volatile price set.
        if let Some(p) = self
            .price_sets
            .iter()
            .max_by(|a, b| a.std_dev().total_cmp(&b.std_dev()))
        {
            let vehicles: Vec<String> = self
                .cells
                .iter()
                .find(|c| c.price_set == p.label && c.error.is_none())
                .map(|c| c.vehicles.iter().map(|v| v.vehicle.clone()).collect())
                .unwrap_or_default();
            for id in vehicles {
                let series: Vec<Series> = self
                    .models()
                    .iter()
                    .filter_map(|m| {
                        let c = self.cell(&p.label, m)?;
                        let v = c.vehicles.iter().find(|v| v.vehicle == id)?;
                        Some(Series::new(m.clone(), v.soe.clone()))
                    })
                    .collect();
                out.push((
                    format!("soe_{id}.svg"),
                    line_chart(
                        &format!("State of energy, {id}, {} prices", p.label),
                        "step",
                        "kWh",
                        &series,
                    ),
                ));
            }
        }
        out
    }

    fn assumptions(&self) -> &[String] {
        &self.assumptions
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRun {
    pub label: String,
    pub objective: f64,
    pub costs: crate::model::CostBreakdown,
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
    pub violation_counts: BTreeMap<String, usize>,
    pub audit: ViolationReport,
    pub soe: Vec<(String, Vec<f64>)>,
}

impl AblationRun {
    fn from_schedule(
        label: &str,
        s: &Scenario,
        fs: &FleetSchedule,
        tol: f64,
    ) -> Result<Self, AnalysisError> {
        let audit = check_schedule_with_tol(s, fs, tol)?;
        Ok(Self {
            label: label.to_string(),
            objective: fs.total_cost(),
            costs: fs.costs,
            charged_kwh: fs.charged_kwh(),
            discharged_kwh: fs.discharged_kwh(),
            violation_counts: violation_counts(&audit),
            audit,
            soe: fs
                .vehicles
                .iter()
                .map(|v| (v.vehicle_id.clone(), v.soe.clone()))
                .collect(),
        })
    }

    pub fn violations(&self, kind: ConstraintKind) -> usize {
        self.audit.count(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    /// `power_ablation` or `cost_ablation`.
    pub kind: String,
    pub price_set: String,
    /// The fixed setting: the cost variant for power ablation, the power
    /// mode for cost ablation.
    pub fixed: String,
    pub runs: Vec<AblationRun>,
    pub orderings: Vec<OrderingCheck>,
    /// Cost ablation only: whether the full objective discharges no more
    /// than the energy-only objective.
    pub discharge_monotone: Option<bool>,
    pub assumptions: Vec<String>,
}

pub type PowerAblationReport = AblationReport;
pub type CostAblationReport = AblationReport;

impl AblationReport {
    pub fn run(&self, label: &str) -> Option<&AblationRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

/// Whether the fixed 4 kW charger is a restriction of the combined limits:
/// 4 kW never exceeds the CP or OBC rating wherever a vehicle is plugged in.
pub fn fixed_is_restriction(s: &Scenario) -> bool {
    let cap = s.horizon.kw_to_kwh_per_step(PowerMode::FIXED_KW);
    (0..s.vehicles.len()).all(|vi| {
        (0..s.step_count()).all(|t| match s.slow_cp(vi, t) {
            Some(cp) => {
                cap <= cp
                    .power_limit_kwh_per_step
                    .min(s.vehicles[vi].obc_max_kwh_per_step)
                    + 1e-12
            }
            None => true,
        })
    })
}

/// Solves EVBA under each power mode with the energy-only objective.
pub fn run_power_ablation(s: &Scenario) -> Result<PowerAblationReport, AnalysisError> {
    run_power_ablation_with(s, CostVariant::Of1, &Settings::default())
}

pub fn run_power_ablation_with(
    s: &Scenario,
    variant: CostVariant,
    settings: &Settings,
) -> Result<PowerAblationReport, AnalysisError> {
    validated(s)?;
    let mut runs = Vec::new();
    for mode in PowerMode::ALL {
        let fs = solve_evba_with(s, variant.toggles(), mode, settings)?;
        runs.push(AblationRun::from_schedule(
            mode.label(),
            s,
            &fs,
            settings.tolerance,
        )?);
    }
    let obj = |m: PowerMode| {
        runs.iter()
            .find(|r| r.label == m.label())
            .map_or(f64::NAN, |r| r.objective)
    };
    let tol = settings.tolerance;
    let mut orderings = vec![
        ordering(
            "obc_only <= both",
            obj(PowerMode::ObcOnly),
            obj(PowerMode::Both),
            tol,
        ),
        ordering(
            "cp_only <= both",
            obj(PowerMode::CpOnly),
            obj(PowerMode::Both),
            tol,
        ),
    ];
    if fixed_is_restriction(s) {
        orderings.push(ordering(
            "both <= fixed_4kw",
            obj(PowerMode::Both),
            obj(PowerMode::Fixed4kw),
            tol,
        ));
    }
    enforce(&orderings)?;
    Ok(AblationReport {
        kind: "power_ablation".into(),
        price_set: s.prices()?.label.clone(),
        fixed: variant.label().into(),
        runs,
        orderings,
        discharge_monotone: None,
        assumptions: s.assumptions(),
    })
}

/// Solves EVBA under each objective variant with the given power mode.
pub fn run_cost_ablation(
    s: &Scenario,
    mode: PowerMode,
) -> Result<CostAblationReport, AnalysisError> {
    run_cost_ablation_with(s, mode, &Settings::default())
}

pub fn run_cost_ablation_with(
    s: &Scenario,
    mode: PowerMode,
    settings: &Settings,
) -> Result<CostAblationReport, AnalysisError> {
    validated(s)?;
    let mut runs = Vec::new();
    for v in CostVariant::ALL {
        let fs = solve_evba_with(s, v.toggles(), mode, settings)?;
        runs.push(AblationRun::from_schedule(
            v.label(),
            s,
            &fs,
            settings.tolerance,
        )?);
    }
    let tol = settings.tolerance;
    let of1 = &runs[0];
    let of5 = &runs[4];
    let mut orderings = Vec::new();
    // Every added term is non-negative, so each objective bounds OF1 from
    // above and is bounded by OF5.
    for r in &runs[1..4] {
        orderings.push(ordering(
            format!("OF1 <= {}", r.label),
            of1.objective,
            r.objective,
            tol,
        ));
        orderings.push(ordering(
            format!("{} <= OF5", r.label),
            r.objective,
            of5.objective,
            tol,
        ));
    }
    enforce(&orderings)?;
    let monotone = of5.discharged_kwh <= of1.discharged_kwh + tol * (1.0 + of1.discharged_kwh);
    Ok(AblationReport {
        kind: "cost_ablation".into(),
        price_set: s.prices()?.label.clone(),
        fixed: mode.label().into(),
        runs,
        orderings,
        discharge_monotone: Some(monotone),
        assumptions: s.assumptions(),
    })
}

impl Report for AblationReport {
    fn stem(&self) -> &str {
        &self.kind
    }

    fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    fn table(&self) -> Table {
        let mut header = vec![
            "variant",
            "objective_eur",
            "energy_eur",
            "grid_fee_eur",
            "cp_fee_eur",
            "degradation_eur",
            "v2g_revenue_eur",
            "full_cost_eur",
            "charged_kwh",
            "discharged_kwh",
        ];
        let kinds: Vec<&str> = ConstraintKind::ALL.iter().map(|k| k.name()).collect();
        header.extend(kinds.iter());
        let mut t = Table::new(&header);
        for r in &self.runs {
            let c = &r.costs;
            let mut row = vec![
                r.label.clone(),
                num(r.objective),
                num(c.energy),
                num(c.grid_fee),
                num(c.cp_fee),
                num(c.degradation),
                num(c.v2g_revenue),
                num(c.full_cost),
                num(r.charged_kwh),
                num(r.discharged_kwh),
            ];
            row.extend(
                kinds
                    .iter()
                    .map(|k| r.violation_counts.get(*k).copied().unwrap_or(0).to_string()),
            );
            t.push(row);
        }
        t
    }

    fn extra_tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["check", "lhs", "rhs", "holds"]);
        for o in &self.orderings {
            t.push(vec![
                o.check.clone(),
                num(o.lhs),
                num(o.rhs),
                o.holds.to_string(),
            ]);
        }
        vec![(format!("{}_orderings", self.kind), t)]
    }

    fn charts(&self) -> Vec<(String, String)> {
        let labels: Vec<String> = self.runs.iter().map(|r| r.label.clone()).collect();
        let series = vec![
            Series::new("objective", self.runs.iter().map(|r| r.objective).collect()),
            Series::new(
                "full cost",
                self.runs.iter().map(|r| r.costs.full_cost).collect(),
            ),
        ];
        let energy = vec![
            Series::new("charged", self.runs.iter().map(|r| r.charged_kwh).collect()),
            Series::new(
                "discharged",
                self.runs.iter().map(|r| r.discharged_kwh).collect(),
            ),
        ];
        vec![
            (
                format!("{}_costs.svg", self.kind),
                bar_chart(
                    &format!("Cost by variant ({})", self.fixed),
                    "EUR",
                    &labels,
                    &series,
                ),
            ),
            (
                format!("{}_energy.svg", self.kind),
                bar_chart(
                    &format!("Energy by variant ({})", self.fixed),
                    "kWh",
                    &labels,
                    &energy,
                ),
            ),
        ]
    }

    fn assumptions(&self) -> &[String] {
        &self.assumptions
    }
}
