use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EssParams, EvDefaults, GridParams, PvParams};
use crate::milp::DischargeConvention;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Station description read from a TOML file.
///
/// ```toml
/// step_minutes = 15
/// fleet = "fleet.csv"
///
/// [ess]
/// capacity_kwh = 1000.0
/// # ...every EssParams field
///
/// [grid]
/// p_buy_max_kw = 3000.0
/// p_sell_max_kw = 3000.0
///
/// [pv]
/// penetration = 0.2      # or rated_kw = 300.0
///
/// [ev]
/// charge_efficiency = 1.0
///
/// [milp]
/// discharge_convention = "as-paper"
///
/// [solver]
/// gap = 1e-6
/// time_limit_s = 60.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub step_minutes: u32,
    /// Fleet CSV; relative paths are taken from the config file's directory.
    pub fleet: Option<PathBuf>,
    pub ess: EssParams,
    pub grid: GridParams,
    pub pv: PvSection,
    pub ev: EvDefaults,
    pub milp: MilpSection,
    pub solver: SolverSection,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            step_minutes: 15,
            fleet: None,
            ess: EssParams::default(),
            grid: GridParams::default(),
            pv: PvSection::default(),
            ev: EvDefaults::default(),
            milp: MilpSection::default(),
            solver: SolverSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvSection {
    /// Installed capacity; takes precedence over `penetration`.
    pub rated_kw: Option<f64>,
    /// Installed capacity as a fraction of the peak train demand of the scenario set.
    pub penetration: Option<f64>,
    pub r_c_wm2: f64,
    pub r_std_wm2: f64,
}

impl Default for PvSection {
    fn default() -> Self {
        Self {
            rated_kw: None,
            penetration: Some(0.2),
            r_c_wm2: PvParams::DEFAULT_R_C_WM2,
            r_std_wm2: PvParams::DEFAULT_R_STD_WM2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MilpSection {
    pub discharge_convention: DischargeConvention,
    pub enforce_terminal_soc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub gap: f64,
    pub time_limit_s: f64,
    pub backend: Option<String>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            time_limit_s: 60.0,
            backend: None,
        }
    }
}

impl StationConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: StationConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })?;
        if let (Some(fleet), Some(dir)) = (config.fleet.as_mut(), path.parent()) {
            if fleet.is_relative() {
                *fleet = dir.join(&*fleet);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: super::DataError| ConfigError::Invalid(e.to_string());
        if self.step_minutes == 0 || super::MINUTES_PER_DAY % self.step_minutes != 0 {
            return Err(ConfigError::Invalid(format!(
                "step_minutes = {} must divide 1440",
                self.step_minutes
            )));
        }
        self.ess.validate().map_err(invalid)?;
        self.grid.validate().map_err(invalid)?;
        if let Some(p) = self.pv.penetration {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("pv.penetration = {p} outside [0, 1]")));
            }
        }
        if self.pv.rated_kw.is_none() && self.pv.penetration.is_none() {
            return Err(ConfigError::Invalid("pv needs rated_kw or penetration".into()));
        }
        self.pv_params(1.0).validate().map_err(invalid)?;
        if !(self.solver.gap >= 0.0 && self.solver.gap.is_finite()) {
            return Err(ConfigError::Invalid(format!("solver.gap = {} must be >= 0", self.solver.gap)));
        }
        if !(self.solver.time_limit_s > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "solver.time_limit_s = {} must be positive",
                self.solver.time_limit_s
            )));
        }
        Ok(())
    }

    /// PV parameters with the rating resolved against `peak_train_demand_kw`
    /// when only a penetration level is configured.
    pub fn pv_params(&self, peak_train_demand_kw: f64) -> PvParams {
        let rated_kw = match (self.pv.rated_kw, self.pv.penetration) {
            (Some(rated), _) => rated,
            (None, Some(penetration)) => crate::pv::size_pv_from_penetration(peak_train_demand_kw, penetration),
            (None, None) => 0.0,
        };
        PvParams {
            rated_kw,
            r_c_wm2: self.pv.r_c_wm2,
            r_std_wm2: self.pv.r_std_wm2,
        }
    }
}
