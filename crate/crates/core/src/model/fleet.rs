use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::{NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{parse_timestamp, DataError, TimeGrid, MINUTES_PER_DAY};

/// Fleet-wide values the fleet CSV does not carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvDefaults {
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Battery level at the start of the day as a fraction of capacity.
    pub initial_soc_fraction: f64,
}

impl Default for EvDefaults {
    fn default() -> Self {
        Self {
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            initial_soc_fraction: 1.0,
        }
    }
}

/// A stay at the station, in minutes after midnight: `[arrival, departure)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dwell {
    pub arrival_min: u32,
    pub departure_min: u32,
}

/// One electric bus and its station dwells for the day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bus {
    pub id: String,
    pub battery_capacity_kwh: f64,
    pub nominal_charge_kw: f64,
    pub route_consumption_kwh_per_min: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    pub initial_soc_kwh: f64,
    dwells: Vec<Dwell>,
}

impl Bus {
    /// Builds a bus, sorting its dwells and rejecting empty or overlapping ones.
    pub fn new(
        id: impl Into<String>,
        battery_capacity_kwh: f64,
        nominal_charge_kw: f64,
        route_consumption_kwh_per_min: f64,
        mut dwells: Vec<Dwell>,
        defaults: &EvDefaults,
    ) -> Result<Self, DataError> {
        let id = id.into();
        let fail = |msg: String| Err(DataError::Validation(format!("vehicle {id}: {msg}")));
        if !(battery_capacity_kwh.is_finite() && battery_capacity_kwh > 0.0) {
            return fail(format!("capacity {battery_capacity_kwh} kWh must be positive"));
        }
        if !(nominal_charge_kw.is_finite() && nominal_charge_kw >= 0.0) {
            return fail(format!("charging power {nominal_charge_kw} kW must be non-negative"));
        }
        if !(route_consumption_kwh_per_min.is_finite() && route_consumption_kwh_per_min >= 0.0) {
            return fail(format!(
                "route consumption {route_consumption_kwh_per_min} kWh/min must be non-negative"
            ));
        }
        for eta in [defaults.charge_efficiency, defaults.discharge_efficiency] {
            if !(eta > 0.0 && eta <= 1.0) {
                return fail(format!("efficiency {eta} outside (0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&defaults.initial_soc_fraction) {
            return fail(format!(
                "initial state of charge fraction {} outside [0, 1]",
                defaults.initial_soc_fraction
            ));
        }
        dwells.sort();
        for dwell in &dwells {
            if dwell.arrival_min >= dwell.departure_min {
                return fail(format!(
                    "dwell arriving {} departs {} (arrival must precede departure)",
                    clock(dwell.arrival_min),
                    clock(dwell.departure_min)
                ));
            }
            if dwell.departure_min > MINUTES_PER_DAY {
                return fail(format!("dwell departs after 24:00 ({})", dwell.departure_min));
            }
        }
        if let Some(pair) = dwells.windows(2).find(|w| w[1].arrival_min < w[0].departure_min) {
            return fail(format!(
                "overlapping dwells [{}, {}) and [{}, {})",
                clock(pair[0].arrival_min),
                clock(pair[0].departure_min),
                clock(pair[1].arrival_min),
                clock(pair[1].departure_min)
            ));
        }
        Ok(Self {
            id,
            battery_capacity_kwh,
            nominal_charge_kw,
            route_consumption_kwh_per_min,
            charge_efficiency: defaults.charge_efficiency,
            discharge_efficiency: defaults.discharge_efficiency,
            initial_soc_kwh: defaults.initial_soc_fraction * battery_capacity_kwh,
            dwells,
        })
    }

    pub fn dwells(&self) -> &[Dwell] {
        &self.dwells
    }

    /// Dwells as step ranges on `grid`, rounded outward (arrival down,
    /// departure up) and merged where rounding makes them touch.
    pub fn dwell_steps(&self, grid: &TimeGrid) -> Vec<Range<usize>> {
        let origin = i64::from(grid.start_minute_of_day());
        let step = i64::from(grid.step_minutes());
        let steps = grid.steps() as i64;
        let mut ranges: Vec<Range<usize>> = Vec::new();
        for dwell in &self.dwells {
            let from = (i64::from(dwell.arrival_min) - origin).div_euclid(step).clamp(0, steps);
            let to = (i64::from(dwell.departure_min) - origin + step - 1)
                .div_euclid(step)
                .clamp(0, steps);
            if from >= to {
                continue;
            }
            let range = from as usize..to as usize;
            match ranges.last_mut() {
                Some(last) if range.start <= last.end => last.end = last.end.max(range.end),
                _ => ranges.push(range),
            }
        }
        ranges
    }
}

/// The buses charging at the station.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FleetSchedule {
    buses: Vec<Bus>,
}

impl FleetSchedule {
    pub fn new(buses: Vec<Bus>) -> Result<Self, DataError> {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = buses.iter().find(|b| !seen.insert(b.id.as_str())) {
            return Err(DataError::Validation(format!("vehicle {} listed twice", dup.id)));
        }
        Ok(Self { buses })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn from_csv(path: &Path, defaults: &EvDefaults) -> Result<Self, DataError> {
        let file = File::open(path).map_err(|e| DataError::io(path, e))?;
        Self::from_reader(file, &path.display().to_string(), defaults)
    }

    /// Reads `vehicle_id,capacity_kwh,charge_kw,consumption_kwh_per_min,arrival,departure`,
    /// one row per dwell. Times are `HH:MM[:SS]` (with `24:00` allowed) or full
    /// timestamps, of which only the time of day is used.
    pub fn from_reader<R: Read>(reader: R, source_name: &str, defaults: &EvDefaults) -> Result<Self, DataError> {
        #[derive(Deserialize)]
        struct Row {
            vehicle_id: String,
            capacity_kwh: f64,
            charge_kw: f64,
            consumption_kwh_per_min: f64,
            arrival: String,
            departure: String,
        }

        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        // vehicle id -> (capacity, charge, consumption, dwells), in first-seen order
        let mut order = Vec::new();
        let mut vehicles: BTreeMap<String, (f64, f64, f64, Vec<Dwell>)> = BTreeMap::new();
        for (i, row) in csv.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| DataError::format(source_name, format!("row {line}: {e}")))?;
            let arrival = parse_clock(&row.arrival, false)
                .ok_or_else(|| DataError::format(source_name, format!("row {line}: bad arrival `{}`", row.arrival)))?;
            let departure = parse_clock(&row.departure, true).ok_or_else(|| {
                DataError::format(source_name, format!("row {line}: bad departure `{}`", row.departure))
            })?;
            let dwell = Dwell {
                arrival_min: arrival,
                departure_min: departure,
            };
            match vehicles.get_mut(&row.vehicle_id) {
                Some(entry) => {
                    if (entry.0, entry.1, entry.2) != (row.capacity_kwh, row.charge_kw, row.consumption_kwh_per_min) {
                        return Err(DataError::format(
                            source_name,
                            format!("row {line}: vehicle {} changes its parameters between rows", row.vehicle_id),
                        ));
                    }
                    entry.3.push(dwell);
                }
                None => {
                    order.push(row.vehicle_id.clone());
                    vehicles.insert(
                        row.vehicle_id,
                        (row.capacity_kwh, row.charge_kw, row.consumption_kwh_per_min, vec![dwell]),
                    );
                }
            }
        }
        let buses = order
            .into_iter()
            .map(|id| {
                let (capacity, charge, consumption, dwells) = vehicles.remove(&id).unwrap_or_default();
                Bus::new(id, capacity, charge, consumption, dwells, defaults)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(buses)
    }
}

/// Minutes after midnight; seconds round down for arrivals and up for departures.
fn parse_clock(raw: &str, round_up: bool) -> Option<u32> {
    let raw = raw.trim();
    if raw == "24:00" || raw == "24:00:00" {
        return Some(MINUTES_PER_DAY);
    }
    let time = NaiveTime::parse_from_str(raw, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(raw, "%H:%M"))
        .ok()
        .or_else(|| parse_timestamp(raw).map(|stamp| stamp.time()))?;
    let seconds = time.num_seconds_from_midnight();
    Some(if round_up { seconds.div_ceil(60) } else { seconds / 60 })
}

fn clock(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    const HEADER: &str = "vehicle_id,capacity_kwh,charge_kw,consumption_kwh_per_min,arrival,departure\n";

    fn grid(step: u32) -> TimeGrid {
        TimeGrid::daily(NaiveDate::from_ymd_opt(2021, 6, 21).unwrap(), step).unwrap()
    }

    #[test]
    fn reads_rows_per_dwell() {
        let text = format!(
            "{HEADER}bus1,280,300,0.87,08:00,08:15\nbus2,280,300,0.87,09:00,09:20\nbus1,280,300,0.87,10:05,10:20\n"
        );
        let fleet = FleetSchedule::from_reader(text.as_bytes(), "fleet.csv", &EvDefaults::default()).unwrap();
        assert_eq!(fleet.buses().len(), 2);
        assert_eq!(fleet.buses()[0].id, "bus1");
        assert_eq!(fleet.buses()[0].dwells().len(), 2);
        assert_eq!(fleet.buses()[0].initial_soc_kwh, 280.0);
    }

    #[test]
    fn overlapping_dwells_are_rejected() {
        let text = format!("{HEADER}bus1,280,300,0.87,08:00,09:00\nbus1,280,300,0.87,08:30,09:30\n");
        let err = FleetSchedule::from_reader(text.as_bytes(), "fleet.csv", &EvDefaults::default()).unwrap_err();
        assert!(err.to_string().contains("overlapping"), "{err}");
    }

    #[test]
    fn departure_must_follow_arrival() {
        let text = format!("{HEADER}bus1,280,300,0.87,09:00,09:00\n");
        assert!(FleetSchedule::from_reader(text.as_bytes(), "fleet.csv", &EvDefaults::default()).is_err());
    }

    #[test]
    fn inconsistent_vehicle_parameters_are_rejected() {
        let text = format!("{HEADER}bus1,280,300,0.87,08:00,08:15\nbus1,300,300,0.87,10:00,10:15\n");
        assert!(FleetSchedule::from_reader(text.as_bytes(), "fleet.csv", &EvDefaults::default()).is_err());
    }

    #[test]
    fn dwells_round_outward_to_the_grid() {
        let bus = Bus::new(
            "b",
            280.0,
            300.0,
            0.87,
            vec![Dwell {
                arrival_min: 8 * 60 + 5,
                departure_min: 8 * 60 + 20,
            }],
            &EvDefaults::default(),
        )
        .unwrap();
        // 08:05 -> step 32 (08:00), 08:20 -> step 34 (08:30)
        assert_eq!(bus.dwell_steps(&grid(15)), vec![32..34]);
        assert_eq!(bus.dwell_steps(&grid(1)), vec![485..500]);
    }

    #[test]
    fn rounding_merges_touching_dwells() {
        let dwells = vec![
            Dwell {
                arrival_min: 480,
                departure_min: 485,
            },
            Dwell {
                arrival_min: 490,
                departure_min: 500,
            },
        ];
        let bus = Bus::new("b", 280.0, 300.0, 0.87, dwells, &EvDefaults::default()).unwrap();
        assert_eq!(bus.dwell_steps(&grid(15)), vec![32..34]);
    }

    #[test]
    fn clock_parsing() {
        assert_eq!(parse_clock("08:15", false), Some(495));
        assert_eq!(parse_clock("24:00", true), Some(1440));
        assert_eq!(parse_clock("08:15:30", false), Some(495));
        assert_eq!(parse_clock("08:15:30", true), Some(496));
        assert_eq!(parse_clock("2021-06-21T08:15:00", false), Some(495));
        assert_eq!(parse_clock("noon", false), None);
    }
}
