//! Runs the four asset configurations over a scenario set and compares their
//! expected costs against the grid-only baseline.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::ev::{ev_demand_profile, EvDemandProfile};
use crate::milp::{
    build_problem, solve, validate_solution, CaseFlags, EmsProblem, EmsSolution, ModelSize, ProblemError,
    SolveOptions, SolverStatus,
};
use crate::model::{ScenarioSet, Station};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(into = "u8")]
pub enum Case {
    /// Grid only.
    Base = 1,
    /// Storage charged from the grid and from regenerative braking.
    EssOnly = 2,
    PvOnly = 3,
    Full = 4,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Base, Case::EssOnly, Case::PvOnly, Case::Full];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Case> {
        Case::ALL.into_iter().find(|c| c.number() == n)
    }

    pub fn flags(self) -> CaseFlags {
        match self {
            Case::Base => CaseFlags::new(false, false),
            Case::EssOnly => CaseFlags::new(true, false),
            Case::PvOnly => CaseFlags::new(false, true),
            Case::Full => CaseFlags::new(true, true),
        }
    }
}

impl From<Case> for u8 {
    fn from(case: Case) -> u8 {
        case.number()
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("case {case}: {source}")]
    Problem {
        case: Case,
        #[source]
        source: ProblemError,
    },
    #[error("case {case}, scenario {scenario}: infeasible ({hint})")]
    Infeasible { case: Case, scenario: String, hint: String },
    #[error("case {case}, scenario {scenario}: solver failure ({message})")]
    Solver {
        case: Case,
        scenario: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioCost {
    pub scenario: String,
    pub probability: f64,
    pub status: SolverStatus,
    pub cost_eur: Option<f64>,
    pub gap: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverStats {
    pub backend: String,
    pub model_size: ModelSize,
    pub max_gap: Option<f64>,
    // timings stay out of report.json so reruns compare byte for byte
    #[serde(skip)]
    pub wall_seconds: f64,
    #[serde(skip)]
    pub max_scenario_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: Case,
    pub status: SolverStatus,
    /// `Σ π_s · cost_s`; absent when some scenario has no schedule.
    pub expected_cost_eur: Option<f64>,
    /// Relative to Case 1, when Case 1 was run and costs more than zero.
    pub savings_pct: Option<f64>,
    /// True when some scenario failed and the expected cost is missing.
    pub partial: bool,
    /// Every recomputed constraint holds within tolerance.
    pub feasible: bool,
    pub scenarios: Vec<ScenarioCost>,
    pub solver: SolverStats,
}

/// Outcome of one case, with the data needed for schedule and plot output.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub report: CaseReport,
    pub problem: EmsProblem,
    pub solution: EmsSolution,
}

/// Builds and solves one case, then recomputes every constraint on the result.
pub fn run_case(
    scenarios: &ScenarioSet,
    station: &Station,
    ev_demand: &EvDemandProfile,
    case: Case,
    options: &SolveOptions,
) -> Result<CaseRun, EngineError> {
    let started = Instant::now();
    let problem =
        build_problem(scenarios, station, ev_demand, case.flags()).map_err(|source| EngineError::Problem { case, source })?;
    let solution = solve(&problem, options);
    let residuals = validate_solution(&problem, &solution);
    let scenario_costs: Vec<ScenarioCost> = solution
        .scenarios
        .iter()
        .map(|r| ScenarioCost {
            scenario: r.id.clone(),
            probability: r.probability,
            status: r.status,
            cost_eur: r.cost_eur,
            gap: r.gap,
            message: r.message.clone(),
        })
        .collect();
    let expected = scenario_costs
        .iter()
        .map(|s| s.cost_eur.map(|c| s.probability * c))
        .sum::<Option<f64>>();
    let report = CaseReport {
        case,
        status: solution.status,
        expected_cost_eur: expected,
        savings_pct: None,
        partial: expected.is_none(),
        feasible: residuals.is_feasible(),
        scenarios: scenario_costs,
        solver: SolverStats {
            backend: solution.backend.to_string(),
            model_size: solution.model_size,
            max_gap: solution.gap,
            wall_seconds: started.elapsed().as_secs_f64(),
            max_scenario_seconds: solution
                .scenarios
                .iter()
                .map(|s| s.solve_seconds)
                .fold(0.0, f64::max),
        },
    };
    Ok(CaseRun {
        report,
        problem,
        solution,
    })
}

/// First failed scenario of a case as an error.
fn failure(run: &CaseRun) -> Option<EngineError> {
    let case = run.report.case;
    run.solution.scenarios.iter().find_map(|s| match s.status {
        SolverStatus::Infeasible => Some(EngineError::Infeasible {
            case,
            scenario: s.id.clone(),
            hint: s.message.clone().unwrap_or_default(),
        }),
        SolverStatus::Error => Some(EngineError::Solver {
            case,
            scenario: s.id.clone(),
            message: s.message.clone().unwrap_or_default(),
        }),
        _ => None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    /// RFC 3339 creation time; omitted for reproducible output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub scenario_count: usize,
    pub steps: usize,
    pub step_minutes: u32,
    pub pv_rated_kw: f64,
    pub partial: bool,
    pub cases: Vec<CaseReport>,
}

#[derive(Debug, Clone)]
pub struct Ablation {
    pub report: AblationReport,
    pub runs: Vec<CaseRun>,
    pub ev_demand: EvDemandProfile,
}

/// Runs `cases` in order. Without `keep_going` the first scenario failure
/// aborts with an error; with it, failed cases are marked partial.
pub fn run_ablation(
    scenarios: &ScenarioSet,
    station: &Station,
    cases: &[Case],
    options: &SolveOptions,
    keep_going: bool,
) -> Result<Ablation, EngineError> {
    let grid = scenarios.grid().copied().ok_or(EngineError::Problem {
        case: cases.first().copied().unwrap_or(Case::Base),
        source: ProblemError::EmptyScenarioSet,
    })?;
    let ev_demand = ev_demand_profile(&station.fleet, &grid);
    let mut runs = Vec::with_capacity(cases.len());
    for &case in cases {
        let run = run_case(scenarios, station, &ev_demand, case, options)?;
        if !keep_going {
            if let Some(error) = failure(&run) {
                return Err(error);
            }
        }
        runs.push(run);
    }

    let baseline = runs
        .iter()
        .find(|r| r.report.case == Case::Base)
        .and_then(|r| r.report.expected_cost_eur);
    for run in &mut runs {
        run.report.savings_pct = match (baseline, run.report.expected_cost_eur) {
            (Some(base), Some(cost)) if base > 0.0 => Some(savings_pct(base, cost)),
            _ => None,
        };
    }
    let report = AblationReport {
        generated_at: None,
        scenario_count: scenarios.len(),
        steps: grid.steps(),
        step_minutes: grid.step_minutes(),
        pv_rated_kw: station.pv.rated_kw,
        partial: runs.iter().any(|r| r.report.partial),
        cases: runs.iter().map(|r| r.report.clone()).collect(),
    };
    Ok(Ablation {
        report,
        runs,
        ev_demand,
    })
}

/// Current UTC time for `AblationReport::generated_at`.
pub fn timestamp_now() -> String {
    chrono::DateTime::<chrono::Utc>::from(std::time::SystemTime::now()).to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn savings_pct(baseline_eur: f64, cost_eur: f64) -> f64 {
    100.0 * (baseline_eur - cost_eur) / baseline_eur
}

/// Writes `report.json`, `costs.csv`, one schedule CSV per case and
/// scenario, and `t,value` plot series for storage energy and PV output.
pub fn write_outputs(ablation: &Ablation, out: &Path) -> io::Result<()> {
    fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(&ablation.report).map_err(io::Error::other)?;
    fs::write(out.join("report.json"), json + "\n")?;

    let mut costs = String::from("case,scenario,cost_eur\n");
    for case in &ablation.report.cases {
        for s in &case.scenarios {
            let cost = s.cost_eur.map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(costs, "{},{},{cost}", case.case, s.scenario);
        }
    }
    fs::write(out.join("costs.csv"), costs)?;

    let schedules = out.join("schedules");
    let plots = out.join("plots");
    fs::create_dir_all(&schedules)?;
    fs::create_dir_all(&plots)?;
    for run in &ablation.runs {
        let case = run.report.case;
        for schedule in run.solution.schedules() {
            let stem = format!("case{case}_{}", schedule.scenario_id);
            fs::write(schedules.join(format!("{stem}.csv")), schedule.to_csv())?;
            if !schedule.soc.is_empty() {
                fs::write(plots.join(format!("soc_{stem}.csv")), series_csv(&schedule.soc))?;
            }
        }
        if case.flags().pv {
            for (scenario, pv) in run.problem.scenarios().iter().zip(run.problem.pv()) {
                let path = plots.join(format!("pv_{}.csv", scenario.id()));
                if !path.exists() {
                    fs::write(path, series_csv(pv.values()))?;
                }
            }
        }
    }
    fs::write(plots.join("ev_demand.csv"), series_csv(ablation.ev_demand.values()))
}

pub fn series_csv(values: &[f64]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

/// Savings table with two-decimal rounding.
pub fn format_summary(report: &AblationReport) -> String {
    let mut out = String::from("case  expected_cost_eur  savings_pct  solve_s  status\n");
    for c in &report.cases {
        let cost = c
            .expected_cost_eur
            .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let savings = c.savings_pct.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "{:<4}  {cost:>17}  {savings:>11}  {:>7.2}  {}",
            c.case, c.solver.wall_seconds, c.status
        );
    }
    out
}
