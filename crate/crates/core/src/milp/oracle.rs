//! Exact reference solver for tiny instances: enumerates every assignment of
//! the binaries and solves the remaining LP with the dense simplex. It builds
//! its LPs straight from the problem data rather than from the emitted model.

use serde::Serialize;
use thiserror::Error;

use super::simplex::{DenseLp, LpResult, Sense};
use super::{DischargeConvention, EmsProblem};

/// Largest horizon the oracle accepts (2^(2T) LPs).
pub const ORACLE_MAX_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle handles at most {ORACLE_MAX_STEPS} steps, got {0}")]
    TooManySteps(usize),
    #[error("oracle handles exactly one scenario, got {0}")]
    ScenarioCount(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OracleOutcome {
    Optimal {
        /// Probability-weighted, so comparable with the MILP objective.
        objective_eur: f64,
        u_b: Vec<bool>,
        u_g: Vec<bool>,
        assignments: usize,
    },
    Infeasible {
        assignments: usize,
    },
}

impl OracleOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { objective_eur, .. } => Some(*objective_eur),
            OracleOutcome::Infeasible { .. } => None,
        }
    }
}

pub fn brute_force_oracle(problem: &EmsProblem) -> Result<OracleOutcome, OracleError> {
    let steps = problem.steps();
    if steps > ORACLE_MAX_STEPS {
        return Err(OracleError::TooManySteps(steps));
    }
    if problem.scenarios.len() != 1 {
        return Err(OracleError::ScenarioCount(problem.scenarios.len()));
    }
    let with_ess = problem.ess.is_some();
    let bits = if with_ess { 2 * steps } else { steps };
    let assignments = 1usize << bits;

    let mut best: Option<(f64, Vec<bool>, Vec<bool>)> = None;
    for mask in 0..assignments {
        let u_g: Vec<bool> = (0..steps).map(|t| mask >> t & 1 == 1).collect();
        let u_b: Vec<bool> = if with_ess {
            (0..steps).map(|t| mask >> (steps + t) & 1 == 1).collect()
        } else {
            vec![false; steps]
        };
        if let LpResult::Optimal { objective, .. } = fixed_binary_lp(problem, &u_b, &u_g).solve() {
            if best.as_ref().map_or(true, |(b, _, _)| objective < *b) {
                best = Some((objective, u_b, u_g));
            }
        }
    }
    let probability = problem.scenarios.scenarios()[0].probability();
    Ok(match best {
        Some((cost, u_b, u_g)) => OracleOutcome::Optimal {
            objective_eur: probability * cost,
            u_b,
            u_g,
            assignments,
        },
        None => OracleOutcome::Infeasible { assignments },
    })
}

fn fixed_binary_lp(problem: &EmsProblem, u_b: &[bool], u_g: &[bool]) -> DenseLp {
    let scenario = &problem.scenarios.scenarios()[0];
    let steps = problem.steps();
    let dt = problem.ev_demand.grid().step_minutes() as f64 / 60.0;
    let grid = problem.grid_params;
    let per_step = if problem.ess.is_some() { 6 } else { 2 };
    let n = per_step * steps;
    let (buy, sell, ch, dis, rbe, soc) = (0, 1, 2, 3, 4, 5);
    let idx = |t: usize, k: usize| per_step * t + k;
    let on = |b: bool| if b { 1.0 } else { 0.0 };

    let mut lp = DenseLp::new(n);
    for t in 0..steps {
        lp.objective[idx(t, buy)] = scenario.buy_price().values()[t] * dt;
        lp.objective[idx(t, sell)] = -scenario.sell_price().values()[t] * dt;
        lp.upper[idx(t, buy)] = grid.p_buy_max_kw * on(u_g[t]);
        lp.upper[idx(t, sell)] = grid.p_sell_max_kw * (1.0 - on(u_g[t]));

        let load = scenario.train_demand().values()[t] + problem.ev_demand.values()[t] - problem.pv[0].values()[t];
        let mut balance = vec![0.0; n];
        balance[idx(t, buy)] = 1.0;
        balance[idx(t, sell)] = -1.0;

        if let Some(ess) = &problem.ess {
            let cap = ess.capacity_kwh;
            lp.upper[idx(t, ch)] = ess.p_charge_max_kw;
            lp.upper[idx(t, dis)] = ess.p_discharge_max_kw * (1.0 - on(u_b[t]));
            lp.upper[idx(t, rbe)] = scenario.rb_available().values()[t];
            lp.lower[idx(t, soc)] = ess.soc_min_fraction * cap;
            lp.upper[idx(t, soc)] = ess.soc_max_fraction * cap;

            let mut gate = vec![0.0; n];
            gate[idx(t, rbe)] = 1.0;
            gate[idx(t, ch)] = 1.0;
            lp.add_row(gate, Sense::Le, ess.p_charge_max_kw * on(u_b[t]));

            let discharge_loss = match problem.options.discharge_convention {
                DischargeConvention::AsPaper => ess.eta_discharge * dt,
                DischargeConvention::Divide => dt / ess.eta_discharge,
            };
            let retained = 1.0 - ess.self_discharge;
            let mut recursion = vec![0.0; n];
            recursion[idx(t, soc)] = 1.0;
            recursion[idx(t, rbe)] = -ess.eta_charge * dt;
            recursion[idx(t, ch)] = -ess.eta_charge * dt;
            recursion[idx(t, dis)] = discharge_loss;
            let rhs = if t == 0 {
                retained * ess.soc0_fraction * cap
            } else {
                recursion[idx(t - 1, soc)] = -retained;
                0.0
            };
            lp.add_row(recursion, Sense::Eq, rhs);

            balance[idx(t, dis)] = 1.0;
            balance[idx(t, ch)] = -1.0;
        }
        lp.add_row(balance, Sense::Eq, load);
    }
    if let (Some(ess), true) = (&problem.ess, problem.options.enforce_terminal_soc) {
        let mut terminal = vec![0.0; n];
        terminal[idx(steps - 1, soc)] = 1.0;
        lp.add_row(terminal, Sense::Ge, ess.soc0_fraction * ess.capacity_kwh);
    }
    lp
}
