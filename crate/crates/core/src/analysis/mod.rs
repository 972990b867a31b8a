//! Auditing, synthetic inputs, experiments and report output.

pub mod audit;
pub mod experiments;
pub mod prices;
pub mod report;
pub mod svg;
pub mod synthetic;

pub use audit::{
    check_schedule, check_schedule_with_tol, AuditError, ConstraintKind, Violation, ViolationReport,
};
pub use experiments::{
    compare_aggregators, compare_aggregators_with, fixed_is_restriction, run_cost_ablation,
    run_cost_ablation_with, run_power_ablation, run_power_ablation_with, AblationReport,
    AblationRun, AnalysisError, ComparisonCell, ComparisonReport, CostAblationReport,
    OrderingCheck, PowerAblationReport,
};
pub use prices::{generate_price_series, generate_price_set, Volatility, MEAN_PRICE};
pub use report::{write_report, Report, ReportError, Table};
pub use synthetic::{example_scenario, random_scenario};
