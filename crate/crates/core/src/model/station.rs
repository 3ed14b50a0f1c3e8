use serde::Serialize;

use super::{DataError, EssParams, FleetSchedule, GridParams, PvParams, StationConfig};
use crate::milp::ModelOptions;

/// Physical description of the station with every option resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Station {
    pub ess: EssParams,
    pub grid: GridParams,
    pub pv: PvParams,
    pub fleet: FleetSchedule,
    pub options: ModelOptions,
}

impl Station {
    /// Resolves `config` against a fleet and the peak train demand of the
    /// scenario set (used when PV is sized by penetration).
    pub fn from_config(config: &StationConfig, fleet: FleetSchedule, peak_train_demand_kw: f64) -> Self {
        Self {
            ess: config.ess,
            grid: config.grid,
            pv: config.pv_params(peak_train_demand_kw),
            fleet,
            options: ModelOptions {
                discharge_convention: config.milp.discharge_convention,
                enforce_terminal_soc: config.milp.enforce_terminal_soc,
            },
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        self.ess.validate()?;
        self.grid.validate()?;
        self.pv.validate()
    }
}
