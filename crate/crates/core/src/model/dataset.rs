//! Scenario directories: one subdirectory per day holding
//! `train_demand.csv`, `rb_available.csv`, `radiation.csv`, `price.csv`, an
//! optional `sell_price.csv` (defaults to `price.csv`) and a `scenario.meta`.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ingest_profile, parse_timestamp, DataError, ProfileKind, Scenario, ScenarioSet, TimeGrid};

pub const SCENARIO_META_FILE: &str = "scenario.meta";

/// Contents of `scenario.meta` (TOML). Every field is optional: the id
/// defaults to the directory name, the date to the first train-demand stamp,
/// and missing probabilities share whatever mass the others leave.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioMeta {
    pub id: Option<String>,
    pub probability: Option<f64>,
    /// A bare TOML date or a quoted `YYYY-MM-DD` string.
    #[serde(deserialize_with = "date_field")]
    pub date: Option<NaiveDate>,
}

fn date_field<'de, D: serde::Deserializer<'de>>(deserializer: D) -> Result<Option<NaiveDate>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Toml(toml::value::Datetime),
        Text(String),
    }
    let text = match Raw::deserialize(deserializer)? {
        Raw::Toml(datetime) => datetime.to_string(),
        Raw::Text(text) => text,
    };
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
        .map(Some)
        .map_err(|e| serde::de::Error::custom(format!("date `{text}`: {e}")))
}

impl ScenarioMeta {
    pub fn read(dir: &Path) -> Result<Self, DataError> {
        let path = dir.join(SCENARIO_META_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| DataError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| DataError::format(path.display().to_string(), e.to_string()))
    }
}

/// Loads every scenario subdirectory of `dir` (sorted by name) onto daily
/// grids with the given step.
pub fn load_scenario_dir(dir: &Path, step_minutes: u32) -> Result<ScenarioSet, DataError> {
    let entries = fs::read_dir(dir).map_err(|e| DataError::io(dir, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|entry| entry.path())
        .filter(|path| path.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(DataError::Validation(format!(
            "{}: no scenario subdirectories found",
            dir.display()
        )));
    }

    let mut loaded = Vec::with_capacity(dirs.len());
    for scenario_dir in &dirs {
        let meta = ScenarioMeta::read(scenario_dir)?;
        loaded.push((load_one(scenario_dir, &meta, step_minutes)?, meta.probability));
    }

    let given: f64 = loaded.iter().filter_map(|(_, p)| *p).sum();
    let missing = loaded.iter().filter(|(_, p)| p.is_none()).count();
    let share = if missing > 0 {
        (1.0 - given) / missing as f64
    } else {
        0.0
    };
    Ok(ScenarioSet::new(
        loaded
            .into_iter()
            .map(|(scenario, p)| scenario.with_probability(p.unwrap_or(share)))
            .collect(),
    ))
}

fn load_one(dir: &Path, meta: &ScenarioMeta, step_minutes: u32) -> Result<Scenario, DataError> {
    let file = |name: &str| dir.join(name);
    let date = match meta.date {
        Some(date) => date,
        None => first_date(&file("train_demand.csv"))?,
    };
    let grid = TimeGrid::daily(date, step_minutes)?;
    let id = meta.id.clone().unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });

    let train_demand = ingest_profile(&file("train_demand.csv"), ProfileKind::TrainDemand, &grid)?;
    let rb_available = ingest_profile(&file("rb_available.csv"), ProfileKind::RbAvailable, &grid)?;
    let radiation = ingest_profile(&file("radiation.csv"), ProfileKind::Radiation, &grid)?;
    let buy_price = ingest_profile(&file("price.csv"), ProfileKind::Price, &grid)?;
    let sell_path = file("sell_price.csv");
    let sell_price = if sell_path.exists() {
        ingest_profile(&sell_path, ProfileKind::Price, &grid)?
    } else {
        buy_price.clone()
    };
    Scenario::new(id, 0.0, train_demand, rb_available, radiation, buy_price, sell_price)
}

fn first_date(path: &Path) -> Result<NaiveDate, DataError> {
    let file = fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let source = path.display().to_string();
    for line in BufReader::new(file).lines().skip(1) {
        let line = line.map_err(|e| DataError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let stamp = line.split(',').next().unwrap_or_default();
        return parse_timestamp(stamp)
            .map(|t| t.date())
            .ok_or_else(|| DataError::format(source, format!("bad timestamp `{stamp}`")));
    }
    Err(DataError::format(source, "no data rows"))
}
