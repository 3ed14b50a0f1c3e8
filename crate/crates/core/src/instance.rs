//! Small self-contained instances written as one TOML file, with every
//! profile given inline on a short horizon. Used for oracle checks.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::ev::EvDemandProfile;
use crate::milp::{build_problem, CaseFlags, EmsProblem, ModelOptions, ProblemError};
use crate::model::{
    ConfigError, DataError, EssParams, FleetSchedule, GridParams, MilpSection, Profile, ProfileKind, PvParams,
    Scenario, ScenarioSet, Station, TimeGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TinyInstance {
    #[serde(default = "default_step")]
    pub step_minutes: u32,
    #[serde(default = "default_start")]
    pub start: NaiveDateTime,
    #[serde(default = "enabled")]
    pub ess_enabled: bool,
    #[serde(default = "enabled")]
    pub pv_enabled: bool,
    pub train_demand: Vec<f64>,
    pub rb_available: Vec<f64>,
    pub radiation: Vec<f64>,
    pub buy_price: Vec<f64>,
    /// Defaults to `buy_price`.
    #[serde(default)]
    pub sell_price: Option<Vec<f64>>,
    /// Defaults to zero.
    #[serde(default)]
    pub ev_demand: Option<Vec<f64>>,
    #[serde(default)]
    pub ess: EssParams,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default = "default_pv")]
    pub pv: PvParams,
    #[serde(default)]
    pub milp: MilpSection,
}

fn default_step() -> u32 {
    15
}

fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 6, 21)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

fn enabled() -> bool {
    true
}

fn default_pv() -> PvParams {
    PvParams::with_rating(100.0)
}

impl TinyInstance {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance serializes")
    }

    pub fn steps(&self) -> usize {
        self.train_demand.len()
    }

    pub fn flags(&self) -> CaseFlags {
        CaseFlags::new(self.ess_enabled, self.pv_enabled)
    }

    pub fn grid(&self) -> Result<TimeGrid, DataError> {
        TimeGrid::new(self.start, self.steps(), self.step_minutes)
    }

    pub fn to_problem(&self) -> Result<EmsProblem, ProblemError> {
        let grid = self.grid()?;
        let profile = |kind, values: &Vec<f64>| Profile::new(kind, grid, values.clone());
        let buy = profile(ProfileKind::Price, &self.buy_price)?;
        let sell = match &self.sell_price {
            Some(values) => profile(ProfileKind::Price, values)?,
            None => buy.clone(),
        };
        let scenario = Scenario::new(
            "tiny",
            1.0,
            profile(ProfileKind::TrainDemand, &self.train_demand)?,
            profile(ProfileKind::RbAvailable, &self.rb_available)?,
            profile(ProfileKind::Radiation, &self.radiation)?,
            buy,
            sell,
        )?;
        let ev = match &self.ev_demand {
            Some(values) => EvDemandProfile::from_values(grid, values.clone()).ok_or_else(|| {
                DataError::Validation(format!(
                    "ev_demand needs {} finite non-negative values",
                    grid.steps()
                ))
            })?,
            None => EvDemandProfile::zeros(grid),
        };
        let station = Station {
            ess: self.ess,
            grid: self.grid,
            pv: self.pv,
            fleet: FleetSchedule::empty(),
            options: ModelOptions {
                discharge_convention: self.milp.discharge_convention,
                enforce_terminal_soc: self.milp.enforce_terminal_soc,
            },
        };
        build_problem(&ScenarioSet::new(vec![scenario]), &station, &ev, self.flags())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_instance() {
        let text = r#"
            train_demand = [100.0, 200.0]
            rb_available = [0.0, 50.0]
            radiation = [0.0, 500.0]
            buy_price = [0.1, 0.2]
        "#;
        let instance: TinyInstance = toml::from_str(text).unwrap();
        let problem = instance.to_problem().unwrap();
        assert_eq!(problem.steps(), 2);
        assert!(problem.ess().is_some());
        assert_eq!(problem.pv()[0].values(), &[0.0, 50.0]);
        let back: TinyInstance = toml::from_str(&instance.to_toml()).unwrap();
        assert_eq!(back, instance);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let text = r#"
            train_demand = [100.0, 200.0]
            rb_available = [0.0]
            radiation = [0.0, 500.0]
            buy_price = [0.1, 0.2]
        "#;
        let instance: TinyInstance = toml::from_str(text).unwrap();
        assert!(instance.to_problem().is_err());
    }
}
