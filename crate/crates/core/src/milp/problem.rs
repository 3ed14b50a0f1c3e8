use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ModelOptions;
use crate::ev::EvDemandProfile;
use crate::model::{DataError, EssParams, GridParams, ScenarioSet, Station, TimeGrid, Violation};
use crate::pv::{pv_profile, PvError, PvPowerProfile};

/// Which optional assets take part in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseFlags {
    pub ess: bool,
    pub pv: bool,
}

impl CaseFlags {
    pub const fn new(ess: bool, pv: bool) -> Self {
        Self { ess, pv }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("invalid scenario set: {}", join(.0))]
    InvalidScenarios(Vec<Violation>),
    #[error("EV demand grid {ev} does not match the scenario grid {scenario}")]
    GridMismatch { scenario: String, ev: String },
    #[error(transparent)]
    Pv(#[from] PvError),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Everything the model needs, already on one time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmsProblem {
    pub(crate) scenarios: ScenarioSet,
    pub(crate) ess: Option<EssParams>,
    pub(crate) grid_params: GridParams,
    pub(crate) pv: Vec<PvPowerProfile>,
    pub(crate) ev_demand: EvDemandProfile,
    pub(crate) flags: CaseFlags,
    pub(crate) options: ModelOptions,
}

/// Assembles a problem, computing PV output per scenario when PV is enabled.
pub fn build_problem(
    scenarios: &ScenarioSet,
    station: &Station,
    ev_demand: &EvDemandProfile,
    flags: CaseFlags,
) -> Result<EmsProblem, ProblemError> {
    let Some(grid) = scenarios.grid() else {
        return Err(ProblemError::EmptyScenarioSet);
    };
    let report = scenarios.validate();
    if !report.is_valid() {
        return Err(ProblemError::InvalidScenarios(report.violations));
    }
    if !ev_demand.grid().is_compatible(grid) {
        return Err(ProblemError::GridMismatch {
            scenario: describe(grid),
            ev: describe(ev_demand.grid()),
        });
    }
    station.validate()?;

    let pv = scenarios
        .iter()
        .map(|s| {
            if flags.pv {
                pv_profile(s.radiation(), &station.pv)
            } else {
                Ok(PvPowerProfile::zeros(*s.grid()))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(EmsProblem {
        scenarios: scenarios.clone(),
        ess: flags.ess.then_some(station.ess),
        grid_params: station.grid,
        pv,
        ev_demand: ev_demand.clone(),
        flags,
        options: station.options,
    })
}

fn describe(grid: &TimeGrid) -> String {
    format!("{} x {} min from {}", grid.steps(), grid.step_minutes(), grid.start())
}

impl EmsProblem {
    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    pub fn ess(&self) -> Option<&EssParams> {
        self.ess.as_ref()
    }

    pub fn grid_params(&self) -> &GridParams {
        &self.grid_params
    }

    pub fn pv(&self) -> &[PvPowerProfile] {
        &self.pv
    }

    pub fn ev_demand(&self) -> &EvDemandProfile {
        &self.ev_demand
    }

    pub fn flags(&self) -> CaseFlags {
        self.flags
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn steps(&self) -> usize {
        self.ev_demand.grid().steps()
    }

    pub fn dt_hours(&self) -> f64 {
        self.ev_demand.grid().dt_hours()
    }

    /// Load the grid and storage must cover at step `t`: train and EV demand
    /// minus PV output.
    pub fn net_load(&self, scenario: usize, t: usize) -> f64 {
        let s = &self.scenarios.scenarios()[scenario];
        s.train_demand().values()[t] + self.ev_demand.values()[t] - self.pv[scenario].values()[t]
    }

    /// Cost in € of one scenario's grid exchange, unweighted.
    pub fn scenario_cost(&self, scenario: usize, p_buy: &[f64], p_sell: &[f64]) -> f64 {
        let s = &self.scenarios.scenarios()[scenario];
        let dt = self.dt_hours();
        let buy = s.buy_price().values();
        let sell = s.sell_price().values();
        (0..self.steps())
            .map(|t| (buy[t] * p_buy[t] - sell[t] * p_sell[t]) * dt)
            .sum()
    }
}
