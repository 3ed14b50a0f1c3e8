use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use super::DataError;

pub const MINUTES_PER_DAY: u32 = 24 * 60;

/// Uniform discretization of the optimization horizon.
///
/// The step length is held in whole minutes so that alignment checks are exact;
/// [`TimeGrid::dt_hours`] gives the Δt used in every energy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeGrid {
    start: NaiveDateTime,
    steps: usize,
    step_minutes: u32,
}

impl TimeGrid {
    pub fn new(start: NaiveDateTime, steps: usize, step_minutes: u32) -> Result<Self, DataError> {
        if steps == 0 {
            return Err(DataError::Validation("time grid needs at least one step".into()));
        }
        if step_minutes == 0 {
            return Err(DataError::Validation("time grid step must be positive".into()));
        }
        Ok(Self {
            start,
            steps,
            step_minutes,
        })
    }

    /// A grid spanning exactly one day from midnight of `date`.
    pub fn daily(date: NaiveDate, step_minutes: u32) -> Result<Self, DataError> {
        if step_minutes == 0 || MINUTES_PER_DAY % step_minutes != 0 {
            return Err(DataError::Validation(format!(
                "step of {step_minutes} min does not divide a day"
            )));
        }
        Self::new(
            date.and_time(NaiveTime::MIN),
            (MINUTES_PER_DAY / step_minutes) as usize,
            step_minutes,
        )
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    pub fn dt_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }

    pub fn span_minutes(&self) -> i64 {
        self.steps as i64 * i64::from(self.step_minutes)
    }

    pub fn end(&self) -> NaiveDateTime {
        self.start + Duration::minutes(self.span_minutes())
    }

    pub fn step_start(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(index as i64 * i64::from(self.step_minutes))
    }

    /// Whether the grid covers exactly 24 hours.
    pub fn is_daily(&self) -> bool {
        self.span_minutes() == i64::from(MINUTES_PER_DAY)
    }

    /// Minutes past midnight at which the grid starts.
    pub fn start_minute_of_day(&self) -> u32 {
        self.start.time().num_seconds_from_midnight() / 60
    }

    /// Two grids are compatible when they discretize the same part of a day the
    /// same way; their calendar dates may differ (one scenario per day).
    pub fn is_compatible(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps
            && self.step_minutes == other.step_minutes
            && self.start.time() == other.start.time()
    }

    /// The same discretization moved to another date.
    pub fn on_date(&self, date: NaiveDate) -> TimeGrid {
        TimeGrid {
            start: date.and_time(self.start.time()),
            ..*self
        }
    }
}
