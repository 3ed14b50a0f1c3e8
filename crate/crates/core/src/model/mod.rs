//! Domain types shared by every stage of the pipeline, plus file ingestion.
//!
//! Internal units are fixed: power in kW, energy in kWh, prices in €/kWh and
//! radiation in W/m². Step lengths are carried in hours so that
//! `energy = power * dt_hours` everywhere.

mod config;
mod dataset;
mod fleet;
mod ingest;
mod params;
mod profile;
mod scenario;
mod station;
mod time;

use std::path::PathBuf;

use chrono::NaiveDateTime;
use thiserror::Error;

pub use config::{ConfigError, MilpSection, PvSection, SolverSection, StationConfig};
pub use dataset::{load_scenario_dir, ScenarioMeta, SCENARIO_META_FILE};
pub use fleet::{Bus, Dwell, EvDefaults, FleetSchedule};
pub use ingest::{ingest_profile, ingest_reader, parse_timestamp};
pub use params::{EssParams, GridParams, PvParams};
pub use profile::{Profile, ProfileKind, Unit};
pub use scenario::{Scenario, ScenarioSet, ValidationReport, Violation};
pub use station::Station;
pub use time::{TimeGrid, MINUTES_PER_DAY};

/// Errors raised while reading or validating input data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}: {message}")]
    Format { source_name: String, message: String },
    #[error("{source_name}: missing data for {}", format_ranges(.ranges))]
    Gap {
        source_name: String,
        ranges: Vec<(NaiveDateTime, NaiveDateTime)>,
    },
    #[error("{0}")]
    Validation(String),
}

impl DataError {
    pub(crate) fn format(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        DataError::Format {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_ranges(ranges: &[(NaiveDateTime, NaiveDateTime)]) -> String {
    ranges
        .iter()
        .map(|(from, to)| format!("[{from}, {to})"))
        .collect::<Vec<_>>()
        .join(", ")
}
