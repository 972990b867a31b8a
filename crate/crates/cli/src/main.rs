use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evsched::analysis::{
    compare_aggregators_with, example_scenario, generate_price_series, run_cost_ablation_with,
    run_power_ablation_with, write_report, Report, Volatility,
};
use evsched::domain::{
    load_price_series, load_scenario, read_scenario_unchecked, validate_scenario, PriceSeries,
    Scenario,
};
use evsched::model::{
    solve_evba_with, solve_evca_with, CostVariant, PowerMode, Settings, SoePolicy,
};

/// Day-ahead EV charging schedules and the experiments built on them.
#[derive(Debug, Parser)]
#[command(name = "evsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one model for one price series and write the schedule.
    Solve(SolveArgs),
    /// Compare EVBA with EVCA under each policy across several price series.
    Compare(CompareArgs),
    /// Solve EVBA under each power-limit mode and audit the schedules.
    AblatePower(AblatePowerArgs),
    /// Solve EVBA under each objective variant OF1..OF5.
    AblateCosts(AblateCostsArgs),
    /// Check a scenario (and optionally a price file) and print diagnostics.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Evba,
    Evca,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file. Defaults to the bundled three-vehicle example.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Price CSV (`step,eur_per_kwh`, no header).
    #[arg(long, conflicts_with = "generate")]
    prices: Vec<PathBuf>,
    /// Generate synthetic prices of the given volatility instead of reading a file.
    #[arg(long, value_parser = parse_volatility)]
    generate: Vec<Volatility>,
    /// Seed for generated prices.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "EVSCHED_OUT", default_value = "evsched-out")]
    out: PathBuf,
    /// Feasibility and comparison tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Model::Evba)]
    model: Model,
    /// Departure SOE policy for EVCA: high, low or a fraction.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<SoePolicy>,
    /// Objective variant, of1 (energy only) to of5 (all terms).
    #[arg(long, value_parser = parse_variant, default_value = "of5")]
    costs: CostVariant,
    /// Power limits: fixed, obc, cp or both.
    #[arg(long, value_parser = parse_power, default_value = "both")]
    power: PowerMode,
    /// EVCA: relax unreachable departure floors instead of failing.
    #[arg(long)]
    best_effort: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// EVCA policies to compare; repeat the flag for several.
    #[arg(long, value_parser = parse_policy, default_values = ["high", "low"])]
    policy: Vec<SoePolicy>,
    #[arg(long, value_parser = parse_variant, default_value = "of5")]
    costs: CostVariant,
    #[arg(long, value_parser = parse_power, default_value = "both")]
    power: PowerMode,
}

#[derive(Debug, Args)]
struct AblatePowerArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_variant, default_value = "of1")]
    costs: CostVariant,
}

#[derive(Debug, Args)]
struct AblateCostsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_power, default_value = "both")]
    power: PowerMode,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    prices: Option<PathBuf>,
}

fn parse_volatility(s: &str) -> Result<Volatility, String> {
    s.parse()
}

fn parse_policy(s: &str) -> Result<SoePolicy, String> {
    s.parse()
}

fn parse_variant(s: &str) -> Result<CostVariant, String> {
    s.parse()
}

fn parse_power(s: &str) -> Result<PowerMode, String> {
    s.parse()
}

enum Failure {
    /// Bad flag combination; exit 2.
    Usage(String),
    /// Infeasible model, invalid input or I/O problem; exit 1.
    Run(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Compare(a) => compare(a),
        Command::AblatePower(a) => ablate_power(a),
        Command::AblateCosts(a) => ablate_costs(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

impl Common {
    fn settings(&self) -> Result<Settings, Failure> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Failure::Usage(format!(
                "--tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(Settings::with_tolerance(self.tolerance))
    }

    fn scenario(&self) -> Result<Scenario, Failure> {
        match &self.scenario {
            Some(p) => Ok(load_scenario(p)?),
            None => Ok(example_scenario()),
        }
    }

    fn price_sets(&self, s: &Scenario) -> Result<Vec<PriceSeries>, Failure> {
        let mut out = Vec::new();
        for p in &self.prices {
            out.push(load_price_series(p)?);
        }
        for &v in &self.generate {
            out.push(generate_price_series(
                v,
                self.seed,
                s.step_count(),
                s.horizon.step_hours,
            ));
        }
        Ok(out)
    }

    /// A single price series: an explicit flag, else the scenario's own
    /// prices, else high-volatility generated prices.
    fn priced_scenario(&self) -> Result<Scenario, Failure> {
        let s = self.scenario()?;
        let mut sets = self.price_sets(&s)?;
        if sets.len() > 1 {
            return Err(Failure::Usage(
                "this command takes a single --prices or --generate".into(),
            ));
        }
        match sets.pop() {
            Some(p) => Ok(s.with_prices(p)?),
            None if s.prices.is_some() => Ok(s),
            None => {
                let p = generate_price_series(
                    Volatility::High,
                    self.seed,
                    s.step_count(),
                    s.horizon.step_hours,
                );
                Ok(s.with_prices(p)?)
            }
        }
    }
}

fn emit(r: &dyn Report, dir: &Path) -> Outcome {
    let files = write_report(r, dir)?;
    for note in r.assumptions() {
        eprintln!("note: {note}");
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Outcome {
    let settings = Settings {
        best_effort: a.best_effort,
        ..a.common.settings()?
    };
    let toggles = a.costs.toggles();
    let s = a.common.priced_scenario()?;
    let fs = match (a.model, a.policy) {
        (Model::Evba, None) => solve_evba_with(&s, toggles, a.power, &settings)?,
        (Model::Evba, Some(_)) => {
            return Err(Failure::Usage(
                "--policy applies only to --model evca".into(),
            ))
        }
        (Model::Evca, Some(p)) => solve_evca_with(&s, p, toggles, a.power, &settings)?,
        (Model::Evca, None) => return Err(Failure::Usage("--model evca requires --policy".into())),
    };
    for w in &fs.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} {} {}: total {:.4} EUR (energy {:.4}, grid fee {:.4}, CP fee {:.4}, degradation {:.4}), charged {:.3} kWh, discharged {:.3} kWh",
        fs.model,
        a.costs.label(),
        a.power.label(),
        fs.total_cost(),
        fs.costs.energy,
        fs.costs.grid_fee,
        fs.costs.cp_fee,
        fs.costs.degradation,
        fs.charged_kwh(),
        fs.discharged_kwh()
    );
    emit(&fs, &a.common.out)
}

fn compare(a: CompareArgs) -> Outcome {
    let settings = a.common.settings()?;
    let s = a.common.scenario()?;
    let mut sets = a.common.price_sets(&s)?;
    if sets.is_empty() {
        sets = Volatility::ALL
            .iter()
            .map(|&v| generate_price_series(v, a.common.seed, s.step_count(), s.horizon.step_hours))
            .collect();
    }
    let mut labels: Vec<&str> = sets.iter().map(|p| p.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::Usage(
            "price series labels must be distinct".into(),
        ));
    }
    let r = compare_aggregators_with(&s, &sets, &a.policy, a.costs.toggles(), a.power, &settings)?;
    for c in &r.cells {
        match (&c.error, c.total_cost) {
            (None, Some(cost)) => println!("{:<10} {:<12} {cost:>12.4} EUR", c.price_set, c.model),
            (Some(e), _) => println!("{:<10} {:<12} {:>12} ({e})", c.price_set, c.model, "n/a"),
            _ => {}
        }
    }
    emit(&r, &a.common.out)
}

fn print_runs(r: &evsched::analysis::AblationReport) {
    for run in &r.runs {
        let viol: Vec<String> = run
            .violation_counts
            .iter()
            .map(|(k, n)| format!("{k} {n}"))
            .collect();
        println!(
            "{:<10} {:>12.4} EUR  discharged {:>9.3} kWh  violations: {}",
            run.label,
            run.objective,
            run.discharged_kwh,
            if viol.is_empty() {
                "none".into()
            } else {
                viol.join(", ")
            }
        );
    }
    for o in &r.orderings {
        println!(
            "{}: {}",
            o.check,
            if o.holds { "holds" } else { "violated" }
        );
    }
}

fn ablate_power(a: AblatePowerArgs) -> Outcome {
    let settings = a.common.settings()?;
    let s = a.common.priced_scenario()?;
    let r = run_power_ablation_with(&s, a.costs, &settings)?;
    print_runs(&r);
    emit(&r, &a.common.out)
}

fn ablate_costs(a: AblateCostsArgs) -> Outcome {
    let settings = a.common.settings()?;
    let s = a.common.priced_scenario()?;
    let r = run_cost_ablation_with(&s, a.power, &settings)?;
    print_runs(&r);
    if let Some(m) = r.discharge_monotone {
        println!("OF5 discharges no more than OF1: {m}");
    }
    emit(&r, &a.common.out)
}

fn validate(a: ValidateArgs) -> Outcome {
    let mut s = read_scenario_unchecked(&a.scenario)?;
    if let Some(p) = &a.prices {
        s.prices = Some(load_price_series(p)?);
    }
    let diags = validate_scenario(&s);
    for d in &diags {
        println!("{d}");
    }
    if diags.is_empty() {
        println!("{}: ok", a.scenario.display());
        Ok(())
    } else {
        Err(Failure::Run(format!("{} diagnostic(s)", diags.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn compare_accepts_repeated_policies() {
        let cli = Cli::try_parse_from(["evsched", "compare", "--policy", "0.8", "--policy", "low"])
            .unwrap();
        let Command::Compare(a) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(
            a.policy,
            vec![
                SoePolicy {
                    depart_min_frac: 0.8
                },
                SoePolicy::LOW
            ]
        );
    }
}
