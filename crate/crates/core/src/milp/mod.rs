//! Mixed-integer model of the station's daily operation.
//!
//! Per scenario `s` and step `t` the model decides grid purchases and sales,
//! storage charging (from the grid and from regenerative braking) and
//! discharging, and the storage energy level, minimizing
//! `Σ_s π_s Σ_t (C_G·P_G − C_S·P_S)·Δt`. Two binaries per step keep storage
//! charging apart from discharging and grid purchases apart from sales.
//! Scenarios share no variables, so each one is solved on its own.

mod backend;
mod emit;
mod linear;
mod oracle;
mod problem;
mod simplex;
mod solve;
mod validate;

use serde::{Deserialize, Serialize};

pub use backend::{
    BackendError, BackendKind, BackendOutcome, BackendStatus, HighsBackend, MicroLpBackend, SolverBackend,
};
pub use emit::{emit_milp, emit_scenario_milp, EmittedModel, ScenarioLayout};
pub use linear::{Constraint, Family, LinearModel, ModelSize, VarId, VarKind, Variable};
pub use oracle::{brute_force_oracle, OracleError, OracleOutcome, ORACLE_MAX_STEPS};
pub use problem::{build_problem, CaseFlags, EmsProblem, ProblemError};
pub use solve::{
    solve, solve_joint, DecisionSchedule, EmsSolution, ScenarioResult, SolveOptions, SolverStatus,
};
pub use validate::{validate_solution, ResidualReport, ScenarioResiduals};

/// How discharging lowers the stored energy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DischargeConvention {
    /// `SoC -= η_dis · P_dis · Δt`
    #[default]
    AsPaper,
    /// `SoC -= P_dis · Δt / η_dis`
    Divide,
}

impl DischargeConvention {
    /// Energy (kWh) leaving the store per kW of discharge over `dt_hours`.
    pub fn energy_per_kw(self, eta_discharge: f64, dt_hours: f64) -> f64 {
        match self {
            DischargeConvention::AsPaper => eta_discharge * dt_hours,
            DischargeConvention::Divide => dt_hours / eta_discharge,
        }
    }
}

/// Formulation switches that are not physical parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub discharge_convention: DischargeConvention,
    /// Require the storage to end the day at least as full as it started.
    pub enforce_terminal_soc: bool,
}
