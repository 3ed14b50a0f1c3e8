use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use station_ems::engine::{self, Case, EngineError};
use station_ems::instance::TinyInstance;
use station_ems::milp::{brute_force_oracle, solve, BackendKind, OracleOutcome, ProblemError, SolveOptions, SolverStatus};
use station_ems::model::{load_scenario_dir, ConfigError, DataError, FleetSchedule, ScenarioSet, Station, StationConfig};
use station_ems::synthetic;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_SOLVER: u8 = 5;

#[derive(Parser)]
#[command(name = "station-ems", version, about = "Day-ahead energy management for a railway station")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case or all four and write reports.
    Run(RunArgs),
    /// Check the inputs without solving.
    Validate(InputArgs),
    /// Compare the MILP against exhaustive enumeration on a tiny instance.
    Oracle(OracleArgs),
    /// Write the bundled example dataset.
    ExampleData {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Station TOML; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with one subdirectory per scenario.
    #[arg(long)]
    scenarios: PathBuf,
    /// Fleet CSV, overriding the one named in the config.
    #[arg(long)]
    fleet: Option<PathBuf>,
    /// Step length in minutes, overriding the config.
    #[arg(long)]
    dt_min: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// 1, 2, 3, 4 or all.
    #[arg(long, default_value = "all")]
    case: String,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    /// Worker threads for scenario solves.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Carry on past failed scenarios and mark the report partial.
    #[arg(long)]
    keep_going: bool,
    /// Leave the creation time out of report.json.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance TOML with at most four steps.
    instance: PathBuf,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
}

/// Error carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::new(EXIT_DATA, e.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::Problem { .. } => EXIT_DATA,
            EngineError::Infeasible { .. } => EXIT_INFEASIBLE,
            EngineError::Solver { .. } => EXIT_SOLVER,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::ExampleData { out } => synthetic::write_example_dataset(&out)
            .map(|()| println!("example dataset written to {}", out.display()))
            .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", out.display()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Inputs {
    config: StationConfig,
    scenarios: ScenarioSet,
    station: Station,
}

fn load_config(args: &InputArgs) -> Result<StationConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => StationConfig::from_path(path)?,
        None => StationConfig::default(),
    };
    if let Some(step) = args.dt_min {
        config.step_minutes = step;
        config.validate()?;
    }
    if let Some(fleet) = &args.fleet {
        config.fleet = Some(fleet.clone());
    }
    Ok(config)
}

fn load_inputs(args: &InputArgs) -> Result<Inputs, Failure> {
    let config = load_config(args)?;
    let scenarios = load_scenario_dir(&args.scenarios, config.step_minutes)?;
    let report = scenarios.validate();
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(Failure::new(EXIT_DATA, lines.join("\n")));
    }
    let fleet = match &config.fleet {
        Some(path) => FleetSchedule::from_csv(path, &config.ev)?,
        None => FleetSchedule::empty(),
    };
    let station = Station::from_config(&config, fleet, scenarios.peak_train_demand());
    station.validate()?;
    Ok(Inputs {
        config,
        scenarios,
        station,
    })
}

fn solve_options(
    config: Option<&StationConfig>,
    gap: Option<f64>,
    time_limit_s: Option<f64>,
    jobs: Option<usize>,
) -> Result<SolveOptions, Failure> {
    let defaults = SolveOptions::default();
    let section = config.map(|c| &c.solver);
    let gap = gap.or(section.map(|s| s.gap)).unwrap_or(defaults.gap);
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(Failure::new(EXIT_CONFIG, format!("gap {gap} must be a non-negative number")));
    }
    let limit = time_limit_s
        .or(section.map(|s| s.time_limit_s))
        .unwrap_or(defaults.time_limit.as_secs_f64());
    if !(limit > 0.0 && limit.is_finite()) {
        return Err(Failure::new(EXIT_CONFIG, format!("time limit {limit} s must be positive")));
    }
    if jobs == Some(0) {
        return Err(Failure::new(EXIT_CONFIG, "--jobs must be at least 1"));
    }
    let backend = BackendKind::resolve(section.and_then(|s| s.backend.as_deref()))
        .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?;
    Ok(SolveOptions {
        gap,
        time_limit: Duration::from_secs_f64(limit),
        backend,
        jobs,
    })
}

fn parse_cases(raw: &str) -> Result<Vec<Case>, Failure> {
    if raw.eq_ignore_ascii_case("all") {
        return Ok(Case::ALL.to_vec());
    }
    raw.parse::<u8>()
        .ok()
        .and_then(Case::from_number)
        .map(|c| vec![c])
        .ok_or_else(|| Failure::new(EXIT_CONFIG, format!("--case `{raw}`: expected 1, 2, 3, 4 or all")))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let cases = parse_cases(&args.case)?;
    let inputs = load_inputs(&args.input)?;
    let options = solve_options(Some(&inputs.config), args.gap, args.time_limit_s, args.jobs)?;
    info!(
        "{} scenarios, {} buses, backend {}",
        inputs.scenarios.len(),
        inputs.station.fleet.buses().len(),
        options.backend
    );

    let mut ablation = engine::run_ablation(&inputs.scenarios, &inputs.station, &cases, &options, args.keep_going)?;
    if !args.no_timestamp {
        ablation.report.generated_at = Some(engine::timestamp_now());
    }
    engine::write_outputs(&ablation, &args.out)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", args.out.display())))?;
    print!("{}", engine::format_summary(&ablation.report));
    println!("reports written to {}", args.out.display());

    // with --keep-going the reports are written first, then the failure is reported
    let failed = ablation
        .report
        .cases
        .iter()
        .flat_map(|c| c.scenarios.iter().map(move |s| (c.case, s)))
        .filter(|(_, s)| matches!(s.status, SolverStatus::Infeasible | SolverStatus::Error))
        .collect::<Vec<_>>();
    for (case, s) in &failed {
        warn!("case {case}, scenario {}: {}", s.scenario, s.message.as_deref().unwrap_or("failed"));
    }
    match failed.iter().map(|(_, s)| s.status).max() {
        Some(SolverStatus::Error) => Err(Failure::new(EXIT_SOLVER, format!("{} scenario solves failed", failed.len()))),
        Some(_) => Err(Failure::new(
            EXIT_INFEASIBLE,
            format!("{} scenario solves infeasible", failed.len()),
        )),
        None => Ok(()),
    }
}

fn cmd_validate(args: InputArgs) -> Result<(), Failure> {
    let inputs = load_inputs(&args)?;
    let grid = inputs.scenarios.grid().expect("validated set is non-empty");
    println!(
        "ok: {} scenarios of {} x {} min, {} buses, PV rated {:.1} kW",
        inputs.scenarios.len(),
        grid.steps(),
        grid.step_minutes(),
        inputs.station.fleet.buses().len(),
        inputs.station.pv.rated_kw
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    let instance = TinyInstance::from_path(&args.instance)?;
    let limit = station_ems::milp::ORACLE_MAX_STEPS;
    if instance.steps() > limit {
        return Err(Failure::new(
            EXIT_CONFIG,
            format!(
                "{}: {} steps; enumeration is limited to {limit}",
                args.instance.display(),
                instance.steps()
            ),
        ));
    }
    let problem = instance.to_problem().map_err(problem_failure(&args.instance))?;
    let oracle = brute_force_oracle(&problem).map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?;
    let options = solve_options(None, args.gap, args.time_limit_s, Some(1))?;
    let solution = solve(&problem, &options);
    let milp = match solution.status {
        SolverStatus::Optimal | SolverStatus::FeasibleGap => solution.objective_eur,
        SolverStatus::Infeasible => None,
        SolverStatus::Error => {
            let message = solution.scenarios[0].message.clone().unwrap_or_default();
            return Err(Failure::new(EXIT_SOLVER, format!("MILP solve failed: {message}")));
        }
    };

    let show = |cost: Option<f64>| cost.map_or_else(|| "infeasible".to_string(), |c| format!("{c:.9} EUR"));
    println!("steps:      {}", instance.steps());
    println!("oracle:     {}", show(oracle.objective()));
    println!("milp:       {} ({})", show(milp), options.backend);
    match (oracle.objective(), milp) {
        (Some(a), Some(b)) => {
            let diff = b - a;
            println!("difference: {diff:.3e} EUR");
            if (a - b).abs() > 1e-6 * 1f64.max(a.abs()).max(b.abs()) {
                return Err(Failure::new(EXIT_FAILURE, "oracle and MILP disagree"));
            }
        }
        (None, None) => println!("difference: both infeasible"),
        _ => return Err(Failure::new(EXIT_FAILURE, "oracle and MILP disagree on feasibility")),
    }
    if let OracleOutcome::Optimal { u_b, u_g, .. } = &oracle {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        println!("binaries:   u_b={} u_g={}", bits(u_b), bits(u_g));
    }
    Ok(())
}

fn problem_failure(path: &Path) -> impl Fn(ProblemError) -> Failure + '_ {
    move |e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display()))
}
