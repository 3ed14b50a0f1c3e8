use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DataError, TimeGrid};

/// What a profile measures; fixes its unit, sign rule and resampling rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    TrainDemand,
    RbAvailable,
    Radiation,
    Price,
}

impl ProfileKind {
    pub fn canonical_unit(self) -> Unit {
        match self {
            ProfileKind::TrainDemand | ProfileKind::RbAvailable => Unit::Kilowatt,
            ProfileKind::Radiation => Unit::WattPerSquareMetre,
            ProfileKind::Price => Unit::EurPerKwh,
        }
    }

    /// Prices may go negative on day-ahead markets; nothing else may.
    pub fn allows_negative(self) -> bool {
        matches!(self, ProfileKind::Price)
    }

    /// Power-like series are averaged when downsampled; prices are sampled.
    pub fn is_averaged(self) -> bool {
        !matches!(self, ProfileKind::Price)
    }

    pub fn accepts(self, unit: Unit) -> bool {
        unit.canonical() == self.canonical_unit()
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::TrainDemand => "train demand",
            ProfileKind::RbAvailable => "regenerative braking availability",
            ProfileKind::Radiation => "solar radiation",
            ProfileKind::Price => "price",
        })
    }
}

/// Units accepted in CSV headers. Each converts to one of the internal units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Kilowatt,
    Megawatt,
    WattPerSquareMetre,
    EurPerKwh,
    EurPerMwh,
}

impl Unit {
    pub fn parse(tag: &str) -> Option<Unit> {
        let normalized: String = tag
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase()
            .replace('€', "eur")
            .replace('²', "2");
        Some(match normalized.as_str() {
            "kw" => Unit::Kilowatt,
            "mw" => Unit::Megawatt,
            "w/m2" | "wm-2" => Unit::WattPerSquareMetre,
            "eur/kwh" => Unit::EurPerKwh,
            "eur/mwh" => Unit::EurPerMwh,
            _ => return None,
        })
    }

    pub fn canonical(self) -> Unit {
        match self {
            Unit::Kilowatt | Unit::Megawatt => Unit::Kilowatt,
            Unit::WattPerSquareMetre => Unit::WattPerSquareMetre,
            Unit::EurPerKwh | Unit::EurPerMwh => Unit::EurPerKwh,
        }
    }

    /// Converts a value in this unit to its canonical unit.
    pub fn convert(self, value: f64) -> f64 {
        match self {
            Unit::Megawatt => value * 1000.0,
            Unit::EurPerMwh => value / 1000.0,
            _ => value,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Kilowatt => "kW",
            Unit::Megawatt => "MW",
            Unit::WattPerSquareMetre => "W/m2",
            Unit::EurPerKwh => "EUR/kWh",
            Unit::EurPerMwh => "EUR/MWh",
        })
    }
}

/// One exogenous time series on a [`TimeGrid`], stored in internal units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    kind: ProfileKind,
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(kind: ProfileKind, grid: TimeGrid, values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != grid.steps() {
            return Err(DataError::Validation(format!(
                "{kind} profile has {} values for a {}-step grid",
                values.len(),
                grid.steps()
            )));
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Validation(format!(
                "{kind} profile has a non-finite value at step {t}"
            )));
        }
        if !kind.allows_negative() {
            if let Some(t) = values.iter().position(|v| *v < 0.0) {
                return Err(DataError::Validation(format!(
                    "{kind} profile is negative ({}) at step {t}",
                    values[t]
                )));
            }
        }
        Ok(Self { kind, grid, values })
    }

    pub fn constant(kind: ProfileKind, grid: TimeGrid, value: f64) -> Result<Self, DataError> {
        Self::new(kind, grid, vec![value; grid.steps()])
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
