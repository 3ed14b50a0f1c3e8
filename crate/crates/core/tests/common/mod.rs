//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use station_ems::model::{Bus, FleetSchedule, TimeGrid};

/// Demand and battery trace of one bus, computed on its own.
pub fn single_bus(bus: &Bus, grid: &TimeGrid) -> (Vec<f64>, Vec<f64>) {
    let origin = grid.start_minute_of_day() as i64;
    let step = grid.step_minutes() as i64;
    let dt = grid.dt_hours();
    let window = |t: usize| (origin + t as i64 * step, origin + (t as i64 + 1) * step);
    let overlaps = |t: usize| {
        let (from, to) = window(t);
        bus.dwells()
            .iter()
            .any(|d| (d.arrival_min as i64) < to && (d.departure_min as i64) > from)
    };
    let first = (0..grid.steps()).find(|&t| overlaps(t));
    let last = (0..grid.steps()).rev().find(|&t| overlaps(t));

    let mut soc = bus.initial_soc_kwh;
    let mut demand = Vec::with_capacity(grid.steps());
    let mut trace = vec![soc];
    for t in 0..grid.steps() {
        let mut draw = 0.0;
        if overlaps(t) {
            if soc < bus.battery_capacity_kwh {
                let gain = bus.charge_efficiency * bus.nominal_charge_kw * dt;
                if soc + gain >= bus.battery_capacity_kwh {
                    draw = (bus.battery_capacity_kwh - soc) / (bus.charge_efficiency * dt);
                    soc = bus.battery_capacity_kwh;
                } else {
                    draw = bus.nominal_charge_kw;
                    soc += gain;
                }
            }
        } else if matches!((first, last), (Some(a), Some(b)) if a < t && t < b) {
            let used = bus.discharge_efficiency * bus.route_consumption_kwh_per_min * dt * 60.0;
            soc = (soc - used).max(0.0);
        }
        demand.push(draw);
        trace.push(soc);
    }
    (demand, trace)
}

/// Station demand summed bus by bus from [`single_bus`].
pub fn fleet_demand(fleet: &FleetSchedule, grid: &TimeGrid) -> Vec<f64> {
    let mut total = vec![0.0; grid.steps()];
    for bus in fleet.buses() {
        let (demand, _) = single_bus(bus, grid);
        for (sum, d) in total.iter_mut().zip(&demand) {
            *sum += d;
        }
    }
    total
}

/// `|a - b| <= tol * max(1, |a|, |b|)`
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
