//! Station charging demand of the bus fleet.
//!
//! Each bus charges at its nominal power whenever it is at the station below
//! full capacity and drains at its route consumption rate between dwells. The
//! station demand at a step is the sum over the plugged-in set: buses dwelling
//! at that step whose battery is strictly below capacity.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::Serialize;

use crate::model::{Bus, FleetSchedule, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    AtStation,
    EnRoute,
    /// Before the first arrival or after the last departure of the day.
    OutOfService,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VehicleState {
    pub soc_kwh: f64,
    pub location: Location,
}

impl VehicleState {
    pub fn is_plugged_in(&self, bus: &Bus) -> bool {
        self.location == Location::AtStation && self.soc_kwh < bus.battery_capacity_kwh
    }
}

/// State after one step, and the power the bus drew from the station during it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: VehicleState,
    pub charge_kw: f64,
}

/// Advances one bus by one step of `dt_hours`.
///
/// A bus that reaches full capacity inside the step draws only the power
/// needed for the remaining energy.
pub fn step_vehicle(state: VehicleState, bus: &Bus, dt_hours: f64) -> StepOutcome {
    let capacity = bus.battery_capacity_kwh;
    match state.location {
        Location::AtStation if state.soc_kwh < capacity => {
            let gain = bus.charge_efficiency * bus.nominal_charge_kw * dt_hours;
            let (soc_kwh, charge_kw) = if state.soc_kwh + gain >= capacity {
                let remaining = capacity - state.soc_kwh;
                (capacity, remaining / (bus.charge_efficiency * dt_hours))
            } else {
                (state.soc_kwh + gain, bus.nominal_charge_kw)
            };
            StepOutcome {
                state: VehicleState { soc_kwh, ..state },
                charge_kw,
            }
        }
        Location::EnRoute => {
            let used = bus.discharge_efficiency * bus.route_consumption_kwh_per_min * dt_hours * 60.0;
            StepOutcome {
                state: VehicleState {
                    soc_kwh: (state.soc_kwh - used).max(0.0),
                    ..state
                },
                charge_kw: 0.0,
            }
        }
        _ => StepOutcome { state, charge_kw: 0.0 },
    }
}

/// Ids of the buses in the plugged-in set; `states` must already be at the step.
pub fn plugged_in_set<'a>(fleet: &'a FleetSchedule, states: &[VehicleState]) -> BTreeSet<&'a str> {
    fleet
        .buses()
        .iter()
        .zip(states)
        .filter(|(bus, state)| state.is_plugged_in(bus))
        .map(|(bus, _)| bus.id.as_str())
        .collect()
}

pub(crate) fn location_at(dwells: &[Range<usize>], t: usize) -> Location {
    if dwells.iter().any(|d| d.contains(&t)) {
        return Location::AtStation;
    }
    match (dwells.first(), dwells.last()) {
        (Some(first), Some(last)) if first.start <= t && t < last.end => Location::EnRoute,
        _ => Location::OutOfService,
    }
}

/// Station EV charging demand in kW per step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvDemandProfile {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl EvDemandProfile {
    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            values: vec![0.0; grid.steps()],
            grid,
        }
    }

    /// A demand series given directly, e.g. for small hand-built instances.
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Option<Self> {
        (values.len() == grid.steps() && values.iter().all(|v| v.is_finite() && *v >= 0.0))
            .then_some(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Full result of a fleet simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetTrace {
    pub demand: EvDemandProfile,
    /// Battery level per bus, `steps + 1` entries each (start of every step, then end of day).
    pub soc_kwh: Vec<Vec<f64>>,
    /// Plugged-in set sizes per step.
    pub plugged_in: Vec<usize>,
}

pub fn simulate_fleet(fleet: &FleetSchedule, grid: &TimeGrid) -> FleetTrace {
    let dt = grid.dt_hours();
    let dwells: Vec<Vec<Range<usize>>> = fleet.buses().iter().map(|b| b.dwell_steps(grid)).collect();
    let mut states: Vec<VehicleState> = fleet
        .buses()
        .iter()
        .map(|bus| VehicleState {
            soc_kwh: bus.initial_soc_kwh,
            location: Location::OutOfService,
        })
        .collect();
    let mut soc_kwh: Vec<Vec<f64>> = states.iter().map(|s| vec![s.soc_kwh]).collect();
    let mut values = vec![0.0; grid.steps()];
    let mut plugged_in = vec![0; grid.steps()];

    for t in 0..grid.steps() {
        for (state, bus_dwells) in states.iter_mut().zip(&dwells) {
            state.location = location_at(bus_dwells, t);
        }
        plugged_in[t] = plugged_in_set(fleet, &states).len();
        for (i, bus) in fleet.buses().iter().enumerate() {
            let outcome = step_vehicle(states[i], bus, dt);
            values[t] += outcome.charge_kw;
            states[i] = outcome.state;
            soc_kwh[i].push(outcome.state.soc_kwh);
        }
    }
    FleetTrace {
        demand: EvDemandProfile { grid: *grid, values },
        soc_kwh,
        plugged_in,
    }
}

pub fn ev_demand_profile(fleet: &FleetSchedule, grid: &TimeGrid) -> EvDemandProfile {
    simulate_fleet(fleet, grid).demand
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::model::{Dwell, EvDefaults};

    fn grid() -> TimeGrid {
        TimeGrid::daily(NaiveDate::from_ymd_opt(2021, 6, 21).unwrap(), 15).unwrap()
    }

    fn bus(id: &str, dwells: &[(u32, u32)], initial_fraction: f64) -> Bus {
        Bus::new(
            id,
            280.0,
            300.0,
            0.87,
            dwells
                .iter()
                .map(|&(a, d)| Dwell {
                    arrival_min: a,
                    departure_min: d,
                })
                .collect(),
            &EvDefaults {
                initial_soc_fraction: initial_fraction,
                ..EvDefaults::default()
            },
        )
        .unwrap()
    }

    fn at_station(soc_kwh: f64) -> VehicleState {
        VehicleState {
            soc_kwh,
            location: Location::AtStation,
        }
    }

    #[test]
    fn charging_step() {
        let b = bus("b", &[(480, 495)], 1.0);
        let out = step_vehicle(at_station(100.0), &b, 0.25);
        assert_eq!(out.state.soc_kwh, 175.0);
        assert_eq!(out.charge_kw, 300.0);
    }

    #[test]
    fn charging_clamps_at_capacity() {
        let b = bus("b", &[(480, 495)], 1.0);
        let out = step_vehicle(at_station(279.0), &b, 0.25);
        assert_eq!(out.state.soc_kwh, 280.0);
        // one kWh in a quarter hour
        assert_eq!(out.charge_kw, 4.0);
    }

    #[test]
    fn route_consumption() {
        let b = bus("b", &[(480, 495)], 1.0);
        let state = VehicleState {
            soc_kwh: 200.0,
            location: Location::EnRoute,
        };
        let out = step_vehicle(state, &b, 0.25);
        assert!((200.0 - out.state.soc_kwh - 13.05).abs() < 1e-12);
        assert_eq!(out.charge_kw, 0.0);
        let nearly_empty = VehicleState {
            soc_kwh: 5.0,
            location: Location::EnRoute,
        };
        assert_eq!(step_vehicle(nearly_empty, &b, 0.25).state.soc_kwh, 0.0);
    }

    #[test]
    fn out_of_service_is_idle() {
        let b = bus("b", &[(480, 495)], 1.0);
        let state = VehicleState {
            soc_kwh: 50.0,
            location: Location::OutOfService,
        };
        let out = step_vehicle(state, &b, 0.25);
        assert_eq!(out.state, state);
        assert_eq!(out.charge_kw, 0.0);
    }

    #[test]
    fn plugged_in_boundaries() {
        let fleet = FleetSchedule::new(vec![bus("b", &[(480, 495)], 0.5)]).unwrap();
        let g = grid();
        let dwells = fleet.buses()[0].dwell_steps(&g);
        let state_at = |t| VehicleState {
            soc_kwh: 140.0,
            location: location_at(&dwells, t),
        };
        // 08:00 is step 32, departure 08:15 is step 33
        assert!(plugged_in_set(&fleet, &[state_at(32)]).contains("b"));
        assert!(plugged_in_set(&fleet, &[state_at(33)]).is_empty());
        let full = VehicleState {
            soc_kwh: 280.0,
            location: Location::AtStation,
        };
        assert!(plugged_in_set(&fleet, &[full]).is_empty());
    }

    #[test]
    fn empty_fleet_has_no_demand() {
        let demand = ev_demand_profile(&FleetSchedule::empty(), &grid());
        assert!(demand.values().iter().all(|v| *v == 0.0));
        assert_eq!(demand.values().len(), 96);
    }

    #[test]
    fn overlapping_buses_add_up() {
        let fleet = FleetSchedule::new(vec![
            bus("a", &[(480, 510)], 0.1),
            bus("b", &[(495, 540)], 0.1),
        ])
        .unwrap();
        let demand = ev_demand_profile(&fleet, &grid());
        assert_eq!(demand.values()[32], 300.0);
        assert_eq!(demand.values()[33], 600.0);
        assert_eq!(demand.values()[34], 300.0);
        assert_eq!(demand.values()[35], 300.0);
        assert_eq!(demand.values()[36], 0.0);
    }

    #[test]
    fn full_bus_draws_nothing() {
        let fleet = FleetSchedule::new(vec![bus("a", &[(480, 540)], 1.0)]).unwrap();
        let demand = ev_demand_profile(&fleet, &grid());
        assert!(demand.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn soc_carries_across_dwells() {
        // full at 08:00, drives 08:15-09:15 (52.2 kWh), recharges at 09:15
        let fleet = FleetSchedule::new(vec![bus("a", &[(480, 495), (555, 600)], 1.0)]).unwrap();
        let trace = simulate_fleet(&fleet, &grid());
        let demand = trace.demand.values();
        assert_eq!(demand[32], 0.0);
        assert!((demand[37] - 208.8).abs() < 1e-9);
        assert_eq!(demand[38], 0.0);
        assert!(trace.soc_kwh[0].iter().all(|s| (0.0..=280.0).contains(s)));
        assert_eq!(*trace.soc_kwh[0].last().unwrap(), 280.0);
    }
}
