use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::backend::{BackendKind, BackendOutcome, BackendStatus};
use super::emit::{emit_milp, emit_scenario_milp, ScenarioLayout};
use super::linear::ModelSize;
use super::EmsProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative MIP gap at which a solve may stop.
    pub gap: f64,
    /// Wall-clock limit per solver call.
    pub time_limit: Duration,
    pub backend: BackendKind,
    /// Worker threads for per-scenario solves; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            time_limit: Duration::from_secs(60),
            backend: BackendKind::Highs,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    /// A feasible schedule whose optimality is only proven up to the gap.
    FeasibleGap,
    Infeasible,
    Error,
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::FeasibleGap => "feasible_gap",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Error => "error",
        })
    }
}

/// Decisions of one scenario, one entry per step. Binaries are the raw solver
/// values. Without storage the storage powers are zero, `soc` is empty and
/// `u_b` is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionSchedule {
    pub scenario_id: String,
    pub p_buy: Vec<f64>,
    pub p_sell: Vec<f64>,
    pub p_ch: Vec<f64>,
    pub p_dis: Vec<f64>,
    pub p_rbe: Vec<f64>,
    pub soc: Vec<f64>,
    pub u_b: Vec<f64>,
    pub u_g: Vec<f64>,
}

impl DecisionSchedule {
    pub fn steps(&self) -> usize {
        self.p_buy.len()
    }

    /// `t,p_buy,p_sell,p_ch,p_dis,p_rbe,soc,u_b,u_g`, binaries rounded.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p_buy,p_sell,p_ch,p_dis,p_rbe,soc,u_b,u_g\n");
        for t in 0..self.steps() {
            let soc = self.soc.get(t).map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{t},{},{},{},{},{},{soc},{},{}\n",
                self.p_buy[t],
                self.p_sell[t],
                self.p_ch[t],
                self.p_dis[t],
                self.p_rbe[t],
                self.u_b[t].round(),
                self.u_g[t].round()
            ));
        }
        out
    }

    fn extract(scenario_id: &str, layout: &ScenarioLayout, values: &[f64]) -> Self {
        let pick = |ids: &[super::VarId]| ids.iter().map(|id| values[id.0]).collect::<Vec<f64>>();
        let steps = layout.p_buy.len();
        let or_zeros = |v: Vec<f64>| if v.is_empty() { vec![0.0; steps] } else { v };
        let mut p_ch = or_zeros(pick(&layout.p_ch));
        let mut p_dis = or_zeros(pick(&layout.p_dis));
        let p_rbe = or_zeros(pick(&layout.p_rbe));
        let mut u_b: Vec<f64> = vec![0.0; steps];
        for (t, id) in layout.u_b.iter().enumerate() {
            u_b[t] = match id {
                Some(id) => values[id.0],
                None => {
                    let both = p_ch[t].min(p_dis[t]).max(0.0);
                    p_ch[t] -= both;
                    p_dis[t] -= both;
                    if p_ch[t] + p_rbe[t] > 0.0 { 1.0 } else { 0.0 }
                }
            };
        }
        let mut p_buy = pick(&layout.p_buy);
        let mut p_sell = pick(&layout.p_sell);
        let u_g = layout
            .u_g
            .iter()
            .enumerate()
            .map(|(t, id)| match id {
                Some(id) => values[id.0],
                None => {
                    let both = p_buy[t].min(p_sell[t]).max(0.0);
                    p_buy[t] -= both;
                    p_sell[t] -= both;
                    if p_sell[t] > 0.0 { 0.0 } else { 1.0 }
                }
            })
            .collect();
        Self {
            scenario_id: scenario_id.to_string(),
            p_buy,
            p_sell,
            p_ch,
            p_dis,
            p_rbe,
            soc: pick(&layout.soc),
            u_b,
            u_g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub id: String,
    pub probability: f64,
    pub status: SolverStatus,
    /// Solver objective for this scenario (unweighted); absent for joint solves.
    pub objective_eur: Option<f64>,
    /// Cost recomputed from the schedule and the scenario prices.
    pub cost_eur: Option<f64>,
    pub gap: Option<f64>,
    pub schedule: Option<DecisionSchedule>,
    pub message: Option<String>,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmsSolution {
    /// Worst status over the scenarios.
    pub status: SolverStatus,
    /// `Σ π_s · cost_s`; present only when every scenario has a schedule.
    pub objective_eur: Option<f64>,
    /// Largest reported MIP gap.
    pub gap: Option<f64>,
    pub scenarios: Vec<ScenarioResult>,
    /// Size of the model handed to the solver (one scenario unless joint).
    pub model_size: ModelSize,
    pub backend: BackendKind,
}

impl EmsSolution {
    pub fn schedules(&self) -> impl Iterator<Item = &DecisionSchedule> {
        self.scenarios.iter().filter_map(|s| s.schedule.as_ref())
    }

    fn assemble(scenarios: Vec<ScenarioResult>, objective: Option<f64>, model_size: ModelSize, backend: BackendKind) -> Self {
        let status = scenarios
            .iter()
            .map(|s| s.status)
            .max()
            .unwrap_or(SolverStatus::Error);
        let gap = scenarios.iter().filter_map(|s| s.gap).reduce(f64::max);
        Self {
            status,
            objective_eur: objective,
            gap,
            scenarios,
            model_size,
            backend,
        }
    }
}

/// Solves every scenario on its own, in parallel, and combines the costs.
pub fn solve(problem: &EmsProblem, options: &SolveOptions) -> EmsSolution {
    let n = problem.scenarios.len();
    let run = || -> Vec<ScenarioResult> { (0..n).into_par_iter().map(|s| solve_one(problem, s, options)).collect() };
    let results = match options.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    };
    let objective = results
        .iter()
        .map(|r| r.objective_eur.map(|obj| r.probability * obj))
        .sum::<Option<f64>>();
    let size = if n > 0 {
        emit_scenario_milp(problem, 0).model.size()
    } else {
        ModelSize::default()
    };
    EmsSolution::assemble(results, objective, size, options.backend)
}

fn solve_one(problem: &EmsProblem, s: usize, options: &SolveOptions) -> ScenarioResult {
    let scenario = &problem.scenarios.scenarios()[s];
    let started = Instant::now();
    let emitted = emit_scenario_milp(problem, s);
    let mut backend = options.backend.create();
    backend.load(&emitted.model);
    let outcome = backend.optimize(options.gap, options.time_limit);
    let seconds = started.elapsed().as_secs_f64();
    let mut result = ScenarioResult {
        id: scenario.id().to_string(),
        probability: scenario.probability(),
        status: SolverStatus::Error,
        objective_eur: None,
        cost_eur: None,
        gap: None,
        schedule: None,
        message: None,
        solve_seconds: seconds,
    };
    match outcome {
        Err(e) => result.message = Some(e.to_string()),
        Ok(outcome) => fill(&mut result, problem, s, &emitted.layouts[0], outcome),
    }
    result
}

fn fill(result: &mut ScenarioResult, problem: &EmsProblem, s: usize, layout: &ScenarioLayout, outcome: BackendOutcome) {
    result.status = match outcome.status {
        BackendStatus::Optimal => SolverStatus::Optimal,
        BackendStatus::Feasible => SolverStatus::FeasibleGap,
        BackendStatus::Infeasible => SolverStatus::Infeasible,
        BackendStatus::NoSolution | BackendStatus::Unbounded => SolverStatus::Error,
    };
    match outcome.status {
        BackendStatus::Infeasible => result.message = Some(infeasibility_hint(problem, s)),
        BackendStatus::NoSolution => {
            result.message = Some("time limit reached before a feasible schedule was found".into())
        }
        BackendStatus::Unbounded => result.message = Some("solver reported the model unbounded".into()),
        _ => {}
    }
    result.gap = outcome.mip_gap;
    result.objective_eur = outcome.objective;
    if let Some(values) = outcome.values {
        let schedule = DecisionSchedule::extract(&result.id, layout, &values);
        result.cost_eur = Some(problem.scenario_cost(s, &schedule.p_buy, &schedule.p_sell));
        result.schedule = Some(schedule);
    }
}

/// Solves all scenarios as one model; used to check that separate solves
/// give the same expected cost.
pub fn solve_joint(problem: &EmsProblem, options: &SolveOptions) -> EmsSolution {
    let started = Instant::now();
    let emitted = emit_milp(problem);
    let mut backend = options.backend.create();
    backend.load(&emitted.model);
    let outcome = backend.optimize(options.gap, options.time_limit);
    let seconds = started.elapsed().as_secs_f64();
    let size = emitted.model.size();

    let mut results: Vec<ScenarioResult> = problem
        .scenarios
        .iter()
        .map(|s| ScenarioResult {
            id: s.id().to_string(),
            probability: s.probability(),
            status: SolverStatus::Error,
            objective_eur: None,
            cost_eur: None,
            gap: None,
            schedule: None,
            message: None,
            solve_seconds: seconds,
        })
        .collect();
    let outcome = match outcome {
        Ok(outcome) => outcome,
        Err(e) => {
            for r in &mut results {
                r.message = Some(e.to_string());
            }
            return EmsSolution::assemble(results, None, size, options.backend);
        }
    };
    let objective = outcome.objective;
    for (s, (result, layout)) in results.iter_mut().zip(&emitted.layouts).enumerate() {
        fill(result, problem, s, layout, outcome.clone());
        result.objective_eur = None;
    }
    EmsSolution::assemble(results, objective, size, options.backend)
}

/// Names the constraint family most likely responsible for an infeasible scenario.
pub(crate) fn infeasibility_hint(problem: &EmsProblem, s: usize) -> String {
    let grid = problem.grid_params;
    let (charge, discharge) = problem
        .ess
        .map_or((0.0, 0.0), |e| (e.p_charge_max_kw, e.p_discharge_max_kw));
    for t in 0..problem.steps() {
        let load = problem.net_load(s, t);
        if load > grid.p_buy_max_kw + discharge {
            return format!(
                "power balance: net load {load:.3} kW at step {t} exceeds grid import ({:.3} kW) plus storage discharge ({discharge:.3} kW)",
                grid.p_buy_max_kw
            );
        }
        if -load > grid.p_sell_max_kw + charge {
            return format!(
                "power balance: surplus {:.3} kW at step {t} exceeds grid export ({:.3} kW) plus storage charging ({charge:.3} kW)",
                -load, grid.p_sell_max_kw
            );
        }
    }
    if problem.ess.is_some() {
        let terminal = if problem.options.enforce_terminal_soc {
            " or terminal soc"
        } else {
            ""
        };
        return format!("storage energy: soc recursion cannot stay within soc bounds{terminal} while covering the load");
    }
    "power balance: grid import and export limits cannot cover the load".into()
}
