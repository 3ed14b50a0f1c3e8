//! `timestamp,value` CSV ingestion with resampling onto a [`TimeGrid`].
//!
//! The second header cell may carry a unit tag, e.g. `value[EUR/MWh]`; without
//! one the kind's internal unit is assumed. A sample stamped `τ` stands for the
//! interval `[τ, τ + resolution)`.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use super::{DataError, Profile, ProfileKind, TimeGrid, Unit};

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M",
];

/// Parses an ISO-8601 timestamp. A fixed UTC offset is accepted and dropped:
/// the wall-clock time is kept.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Ok(stamped) = DateTime::parse_from_rfc3339(raw) {
        return Some(stamped.naive_local());
    }
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|format| NaiveDateTime::parse_from_str(raw, format).ok())
}

pub fn ingest_profile(path: &Path, kind: ProfileKind, grid: &TimeGrid) -> Result<Profile, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    ingest_reader(file, &path.display().to_string(), kind, grid)
}

pub fn ingest_reader<R: Read>(
    reader: R,
    source_name: &str,
    kind: ProfileKind,
    grid: &TimeGrid,
) -> Result<Profile, DataError> {
    let (unit, samples) = read_series(reader, source_name)?;
    let unit = unit.unwrap_or(kind.canonical_unit());
    if !kind.accepts(unit) {
        return Err(DataError::format(
            source_name,
            format!("unit {unit} cannot describe a {kind} profile"),
        ));
    }
    if !kind.allows_negative() {
        if let Some((stamp, value)) = samples.iter().find(|(_, v)| *v < 0.0) {
            return Err(DataError::Validation(format!(
                "{source_name}: negative {kind} value {value} at {stamp}"
            )));
        }
    }
    let samples: Vec<(NaiveDateTime, f64)> = samples
        .into_iter()
        .map(|(stamp, value)| (stamp, unit.convert(value)))
        .collect();
    let values = resample(&samples, source_name, kind, grid)?;
    Profile::new(kind, *grid, values)
}

type Series = (Option<Unit>, Vec<(NaiveDateTime, f64)>);

fn read_series<R: Read>(reader: R, source_name: &str) -> Result<Series, DataError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| DataError::format(source_name, e.to_string()))?
        .clone();
    if header.len() != 2 || header.get(0) != Some("timestamp") {
        return Err(DataError::format(
            source_name,
            format!("expected header `timestamp,value`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let unit = parse_value_header(header.get(1).unwrap_or_default(), source_name)?;

    let mut samples = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| DataError::format(source_name, e.to_string()))?;
        let row = line + 2;
        let stamp = parse_timestamp(&record[0]).ok_or_else(|| {
            DataError::format(source_name, format!("row {row}: bad timestamp `{}`", &record[0]))
        })?;
        let value: f64 = record[1].parse().map_err(|_| {
            DataError::format(source_name, format!("row {row}: bad value `{}`", &record[1]))
        })?;
        if !value.is_finite() {
            return Err(DataError::format(source_name, format!("row {row}: non-finite value")));
        }
        samples.push((stamp, value));
    }
    Ok((unit, samples))
}

/// `value`, `value[kW]` or `value [EUR/MWh]`; `None` unit means canonical.
fn parse_value_header(cell: &str, source_name: &str) -> Result<Option<Unit>, DataError> {
    let Some(rest) = cell.strip_prefix("value") else {
        return Err(DataError::format(
            source_name,
            format!("expected header `timestamp,value`, found second column `{cell}`"),
        ));
    };
    let rest = rest.trim();
    if rest.is_empty() {
        return Ok(None);
    }
    let tag = rest
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| DataError::format(source_name, format!("malformed unit tag in `{cell}`")))?;
    Unit::parse(tag)
        .map(Some)
        .ok_or_else(|| DataError::format(source_name, format!("unrecognized unit `{tag}`")))
}

/// Maps samples onto `grid`.
///
/// The source resolution is the smallest spacing between consecutive stamps and
/// must divide, or be a multiple of, the grid step. Finer data is averaged
/// (power, radiation) or read at the step's own stamp (prices); coarser data is
/// held constant across the steps it covers. Samples outside the grid window
/// are ignored.
fn resample(
    samples: &[(NaiveDateTime, f64)],
    source_name: &str,
    kind: ProfileKind,
    grid: &TimeGrid,
) -> Result<Vec<f64>, DataError> {
    let step = i64::from(grid.step_minutes());
    let span = grid.span_minutes();

    let mut offsets = Vec::with_capacity(samples.len());
    for (stamp, value) in samples {
        let delta = *stamp - grid.start();
        if delta.num_seconds() % 60 != 0 {
            return Err(DataError::format(source_name, format!("timestamp {stamp} is not on a whole minute")));
        }
        offsets.push((delta.num_minutes(), *value));
    }
    if let Some(w) = offsets.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(DataError::format(
            source_name,
            format!("timestamps not strictly increasing at {}", grid.start() + chrono::Duration::minutes(w[1].0)),
        ));
    }
    let resolution = offsets
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .min()
        .unwrap_or(step);
    if step % resolution != 0 && resolution % step != 0 {
        return Err(DataError::format(
            source_name,
            format!("source resolution {resolution} min is incompatible with the {step} min grid"),
        ));
    }

    let slot_count = ((span + resolution - 1) / resolution) as usize;
    let mut slots: Vec<Option<f64>> = vec![None; slot_count];
    for &(offset, value) in &offsets {
        if offset.rem_euclid(resolution) != 0 {
            return Err(DataError::format(
                source_name,
                format!(
                    "timestamp {} is not aligned to the {resolution} min resolution",
                    grid.start() + chrono::Duration::minutes(offset)
                ),
            ));
        }
        if (0..span).contains(&offset) {
            slots[(offset / resolution) as usize] = Some(value);
        }
    }

    let gaps = missing_ranges(&slots, resolution, grid);
    if !gaps.is_empty() {
        return Err(DataError::Gap {
            source_name: source_name.to_string(),
            ranges: gaps,
        });
    }
    let slots: Vec<f64> = slots.into_iter().map(|v| v.unwrap_or_default()).collect();

    let values = if resolution <= step {
        let per_step = (step / resolution) as usize;
        slots
            .chunks(per_step)
            .map(|chunk| {
                if kind.is_averaged() {
                    chunk.iter().sum::<f64>() / per_step as f64
                } else {
                    chunk[0]
                }
            })
            .collect()
    } else {
        let steps_per_slot = (resolution / step) as usize;
        (0..grid.steps()).map(|t| slots[t / steps_per_slot]).collect()
    };
    Ok(values)
}

fn missing_ranges(
    slots: &[Option<f64>],
    resolution: i64,
    grid: &TimeGrid,
) -> Vec<(NaiveDateTime, NaiveDateTime)> {
    let at = |slot: usize| grid.start() + chrono::Duration::minutes(slot as i64 * resolution);
    let mut ranges = Vec::new();
    let mut open: Option<usize> = None;
    for (i, slot) in slots.iter().enumerate() {
        match (slot, open) {
            (None, None) => open = Some(i),
            (Some(_), Some(from)) => {
                ranges.push((at(from), at(i)));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(from) = open {
        ranges.push((at(from), grid.end().min(at(slots.len()))));
    }
    ranges
}
