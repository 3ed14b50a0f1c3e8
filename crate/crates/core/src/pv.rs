//! Radiation to PV active power.
//!
//! Below `r_c` the output grows quadratically, between `r_c` and `r_std`
//! linearly, and saturates at the rated power above `r_std`. Reactive power is
//! not modelled.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Profile, ProfileKind, PvParams, TimeGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PvError {
    #[error("radiation {beta} W/m2 is negative or not finite{}", step_suffix(.step))]
    Domain { beta: f64, step: Option<usize> },
    #[error("expected a radiation profile, got {0}")]
    WrongProfile(ProfileKind),
}

fn step_suffix(step: &Option<usize>) -> String {
    step.map(|t| format!(" at step {t}")).unwrap_or_default()
}

/// PV output in kW for radiation `beta` in W/m².
pub fn pv_power(beta: f64, params: &PvParams) -> Result<f64, PvError> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(PvError::Domain { beta, step: None });
    }
    let PvParams {
        rated_kw,
        r_c_wm2: r_c,
        r_std_wm2: r_std,
    } = *params;
    Ok(if beta < r_c {
        beta * beta / (r_c * r_std) * rated_kw
    } else if beta < r_std {
        beta / r_std * rated_kw
    } else {
        rated_kw
    })
}

/// PV active power per step, each value within `[0, rated_kw]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvPowerProfile {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl PvPowerProfile {
    /// A profile of zeros, used when PV is disabled.
    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            values: vec![0.0; grid.steps()],
            grid,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn pv_profile(radiation: &Profile, params: &PvParams) -> Result<PvPowerProfile, PvError> {
    if radiation.kind() != ProfileKind::Radiation {
        return Err(PvError::WrongProfile(radiation.kind()));
    }
    let values = radiation
        .values()
        .iter()
        .enumerate()
        .map(|(t, &beta)| {
            pv_power(beta, params).map_err(|_| PvError::Domain {
                beta,
                step: Some(t),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PvPowerProfile {
        grid: *radiation.grid(),
        values,
    })
}

/// Rated PV capacity for a penetration level relative to peak demand.
pub fn size_pv_from_penetration(peak_demand_kw: f64, penetration: f64) -> f64 {
    penetration * peak_demand_kw
}
