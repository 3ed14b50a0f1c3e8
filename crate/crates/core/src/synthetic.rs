//! Deterministic synthetic data: the bundled example days and fleet, random
//! daily scenarios, and tiny random instances for oracle checks.
//!
//! Shapes are loosely modelled on a suburban station: a morning and an
//! evening rush in train demand, braking energy following train activity,
//! a bell-shaped radiation curve and hourly day-ahead prices with morning and
//! evening peaks.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::TinyInstance;
use crate::model::{
    Bus, DataError, Dwell, EssParams, EvDefaults, FleetSchedule, GridParams, MilpSection, Profile, ProfileKind,
    PvParams, Scenario, ScenarioSet, StationConfig, TimeGrid, SCENARIO_META_FILE,
};
use crate::milp::DischargeConvention;

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((h - centre) / width).powi(2)).exp()
}

/// Knobs of one synthetic day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayShape {
    pub base_kw: f64,
    pub morning_peak_kw: f64,
    pub evening_peak_kw: f64,
    /// Braking energy available as a fraction of train activity above base.
    pub braking_share: f64,
    pub radiation_peak_wm2: f64,
    pub sunrise_h: f64,
    pub sunset_h: f64,
    /// €/kWh
    pub price_base: f64,
    pub price_morning: f64,
    pub price_evening: f64,
    pub price_midday_dip: f64,
    pub price_night_dip: f64,
}

impl DayShape {
    pub fn summer() -> Self {
        Self {
            base_kw: 450.0,
            morning_peak_kw: 900.0,
            evening_peak_kw: 750.0,
            braking_share: 0.35,
            radiation_peak_wm2: 950.0,
            sunrise_h: 5.5,
            sunset_h: 21.0,
            price_base: 0.11,
            price_morning: 0.06,
            price_evening: 0.09,
            price_midday_dip: 0.04,
            price_night_dip: 0.04,
        }
    }

    /// Same demand as [`DayShape::summer`] with roughly half the peak PV output.
    pub fn autumn() -> Self {
        Self {
            radiation_peak_wm2: 475.0,
            sunrise_h: 7.5,
            sunset_h: 18.0,
            price_base: 0.13,
            price_midday_dip: 0.01,
            ..Self::summer()
        }
    }

    fn random(rng: &mut impl Rng) -> Self {
        let summer = Self::summer();
        let sunrise_h = rng.gen_range(5.0..8.0);
        Self {
            base_kw: summer.base_kw * rng.gen_range(0.7..1.3),
            morning_peak_kw: summer.morning_peak_kw * rng.gen_range(0.6..1.4),
            evening_peak_kw: summer.evening_peak_kw * rng.gen_range(0.6..1.4),
            braking_share: rng.gen_range(0.15..0.45),
            radiation_peak_wm2: rng.gen_range(150.0..1050.0),
            sunrise_h,
            sunset_h: rng.gen_range(sunrise_h + 9.0..22.0),
            price_base: rng.gen_range(0.06..0.16),
            price_morning: rng.gen_range(0.0..0.08),
            price_evening: rng.gen_range(0.0..0.12),
            price_midday_dip: rng.gen_range(0.0..0.05),
            price_night_dip: rng.gen_range(0.0..0.05),
        }
    }

    fn train_demand(&self, h: f64) -> f64 {
        let service = if (5.0..23.5).contains(&h) { 1.0 } else { 0.0 };
        150.0
            + service * (self.base_kw + self.morning_peak_kw * bump(h, 8.0, 1.0) + self.evening_peak_kw * bump(h, 17.5, 1.3))
    }

    fn braking(&self, h: f64) -> f64 {
        (self.train_demand(h) - 150.0) * self.braking_share * (0.8 + 0.2 * (h * 1.7).sin())
    }

    fn radiation(&self, h: f64) -> f64 {
        if h <= self.sunrise_h || h >= self.sunset_h {
            return 0.0;
        }
        let x = (h - self.sunrise_h) / (self.sunset_h - self.sunrise_h);
        self.radiation_peak_wm2 * (std::f64::consts::PI * x).sin().powf(1.5)
    }

    fn price(&self, h: f64) -> f64 {
        // hourly day-ahead price, evaluated at the middle of the hour
        let h = h.floor() + 0.5;
        let p = self.price_base + self.price_morning * bump(h, 8.5, 1.2) + self.price_evening * bump(h, 20.5, 1.2)
            - self.price_midday_dip * bump(h, 13.0, 2.0)
            - self.price_night_dip * bump(h, 3.5, 1.5);
        (p.max(0.0) * 1e4).round() / 1e4
    }
}

fn sample(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let step_h = grid.dt_hours();
    (0..grid.steps())
        .map(|t| f((grid.start_minute_of_day() as f64 / 60.0 + (t as f64 + 0.5) * step_h) % 24.0))
        .collect()
}

/// One day on a daily grid with the given step.
pub fn synthetic_day(id: &str, date: NaiveDate, step_minutes: u32, shape: &DayShape) -> Result<Scenario, DataError> {
    let grid = TimeGrid::daily(date, step_minutes)?;
    let price = Profile::new(ProfileKind::Price, grid, sample(&grid, |h| shape.price(h)))?;
    Scenario::new(
        id,
        1.0,
        Profile::new(ProfileKind::TrainDemand, grid, sample(&grid, |h| shape.train_demand(h)))?,
        Profile::new(ProfileKind::RbAvailable, grid, sample(&grid, |h| shape.braking(h)))?,
        Profile::new(ProfileKind::Radiation, grid, sample(&grid, |h| shape.radiation(h)))?,
        price.clone(),
        price,
    )
}

pub fn summer_day(step_minutes: u32) -> Scenario {
    let date = NaiveDate::from_ymd_opt(2021, 6, 21).expect("valid date");
    synthetic_day("summer", date, step_minutes, &DayShape::summer()).expect("summer shape is valid")
}

pub fn autumn_day(step_minutes: u32) -> Scenario {
    let date = NaiveDate::from_ymd_opt(2021, 10, 20).expect("valid date");
    synthetic_day("autumn", date, step_minutes, &DayShape::autumn()).expect("autumn shape is valid")
}

/// The bundled two-day example, equally likely.
pub fn example_scenarios(step_minutes: u32) -> ScenarioSet {
    ScenarioSet::equiprobable(vec![summer_day(step_minutes), autumn_day(step_minutes)])
}

/// A random day with multiplicative noise on every profile.
pub fn random_day(rng: &mut impl Rng, id: &str, date: NaiveDate, step_minutes: u32) -> Scenario {
    let shape = DayShape::random(rng);
    let base = synthetic_day(id, date, step_minutes, &shape).expect("random shape is valid");
    let grid = *base.grid();
    let mut noisy = |p: &Profile, spread: f64| {
        let values = p
            .values()
            .iter()
            .map(|v| v * rng.gen_range(1.0 - spread..1.0 + spread))
            .collect();
        Profile::new(p.kind(), grid, values).expect("noise keeps values non-negative")
    };
    let train = noisy(base.train_demand(), 0.1);
    let braking = noisy(base.rb_available(), 0.3);
    let radiation = noisy(base.radiation(), 0.2);
    Scenario::new(
        id,
        1.0,
        train,
        braking,
        radiation,
        base.buy_price().clone(),
        base.sell_price().clone(),
    )
    .expect("profiles share a grid")
}

/// `count` random equiprobable days from `seed`.
pub fn random_scenario_set(seed: u64, count: usize, step_minutes: u32) -> ScenarioSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date");
    let days = (0..count)
        .map(|i| {
            let date = first + chrono::Duration::days((i % 365) as i64);
            random_day(&mut rng, &format!("day{i:03}"), date, step_minutes)
        })
        .collect();
    ScenarioSet::equiprobable(days)
}

/// Eight buses (280 kWh, 300 kW chargers, 0.87 kWh/min on route), each
/// calling at the station every two hours for 20 minutes.
pub fn example_fleet() -> FleetSchedule {
    let defaults = EvDefaults::default();
    let buses = (0..8)
        .map(|i| {
            let first = 5 * 60 + 30 + 15 * i;
            let dwells = (0..)
                .map(|k| first + 120 * k)
                .take_while(|a| a + 20 <= 23 * 60)
                .map(|a| Dwell {
                    arrival_min: a,
                    departure_min: a + 20,
                })
                .collect();
            Bus::new(format!("bus{:02}", i + 1), 280.0, 300.0, 0.87, dwells, &defaults).expect("valid dwells")
        })
        .collect();
    FleetSchedule::new(buses).expect("unique ids")
}

/// A random fleet of up to `max_buses` buses with non-overlapping dwells.
pub fn random_fleet(rng: &mut impl Rng, max_buses: usize) -> FleetSchedule {
    let count = rng.gen_range(1..=max_buses.max(1));
    let buses = (0..count)
        .map(|i| {
            let mut dwells = Vec::new();
            let mut clock: u32 = rng.gen_range(0..360);
            while clock < 1380 {
                let length = rng.gen_range(5..90);
                let departure = (clock + length).min(1440);
                dwells.push(Dwell {
                    arrival_min: clock,
                    departure_min: departure,
                });
                clock = departure + rng.gen_range(1..240);
            }
            let defaults = EvDefaults {
                charge_efficiency: rng.gen_range(0.85..=1.0),
                discharge_efficiency: rng.gen_range(0.85..=1.0),
                initial_soc_fraction: rng.gen_range(0.0..=1.0),
            };
            Bus::new(
                format!("v{i}"),
                rng.gen_range(100.0..400.0),
                rng.gen_range(50.0..450.0),
                rng.gen_range(0.3..1.5),
                dwells,
                &defaults,
            )
            .expect("generated dwells are valid")
        })
        .collect();
    FleetSchedule::new(buses).expect("unique ids")
}

/// Station configuration used by the bundled example.
pub fn example_config() -> StationConfig {
    StationConfig {
        fleet: Some("fleet.csv".into()),
        ..StationConfig::default()
    }
}

/// A random single-scenario instance with `steps` steps of 15 minutes.
pub fn random_tiny_instance(rng: &mut impl Rng, steps: usize) -> TinyInstance {
    let mut series = |lo: f64, hi: f64| (0..steps).map(|_| rng.gen_range(lo..hi)).collect::<Vec<f64>>();
    let train_demand = series(0.0, 1500.0);
    let rb_available = series(0.0, 600.0);
    let radiation = series(0.0, 1200.0);
    let buy_price = series(0.0, 0.3);
    let sell_price = series(0.0, 0.3);
    let ev_demand = series(0.0, 600.0);
    // exercise the zero-braking and equal-efficiency special cases too
    let rb_available = rb_available
        .into_iter()
        .map(|v| if rng.gen_bool(0.3) { 0.0 } else { v })
        .collect();
    let sell_price = if rng.gen_bool(0.3) { buy_price.clone() } else { sell_price };
    let eta_charge = rng.gen_range(0.8..=1.0);
    let eta_discharge = if rng.gen_bool(0.4) { eta_charge } else { rng.gen_range(0.8..=1.0) };
    let capacity_kwh = rng.gen_range(100.0..1500.0);
    let soc_min_fraction = rng.gen_range(0.0..0.3);
    let soc_max_fraction = rng.gen_range(0.7..=1.0);
    TinyInstance {
        step_minutes: 15,
        start: NaiveDate::from_ymd_opt(2021, 6, 21)
            .and_then(|d| d.and_hms_opt(rng.gen_range(0..20), 0, 0))
            .expect("valid time"),
        ess_enabled: rng.gen_bool(0.75),
        pv_enabled: rng.gen_bool(0.75),
        sell_price: Some(sell_price),
        ev_demand: Some(ev_demand),
        train_demand,
        rb_available,
        radiation,
        buy_price,
        ess: EssParams {
            capacity_kwh,
            p_charge_max_kw: rng.gen_range(50.0..1500.0),
            p_discharge_max_kw: rng.gen_range(50.0..1500.0),
            eta_charge,
            eta_discharge,
            self_discharge: rng.gen_range(0.0..0.05),
            soc0_fraction: rng.gen_range(soc_min_fraction..=soc_max_fraction),
            soc_min_fraction,
            soc_max_fraction,
        },
        grid: GridParams {
            p_buy_max_kw: rng.gen_range(500.0..3000.0),
            p_sell_max_kw: rng.gen_range(0.0..3000.0),
        },
        pv: PvParams::with_rating(rng.gen_range(0.0..800.0)),
        milp: MilpSection {
            discharge_convention: if rng.gen_bool(0.5) {
                DischargeConvention::AsPaper
            } else {
                DischargeConvention::Divide
            },
            enforce_terminal_soc: rng.gen_bool(0.3),
        },
    }
}

/// Writes one scenario as a scenario directory entry.
pub fn write_scenario(scenario: &Scenario, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let files = [
        ("train_demand.csv", scenario.train_demand()),
        ("rb_available.csv", scenario.rb_available()),
        ("radiation.csv", scenario.radiation()),
        ("price.csv", scenario.buy_price()),
    ];
    for (name, profile) in files {
        fs::write(dir.join(name), profile_csv(profile))?;
    }
    if scenario.sell_price() != scenario.buy_price() {
        fs::write(dir.join("sell_price.csv"), profile_csv(scenario.sell_price()))?;
    }
    let meta = format!(
        "id = \"{}\"\nprobability = {}\ndate = {}\n",
        scenario.id(),
        scenario.probability(),
        scenario.grid().start().date()
    );
    fs::write(dir.join(SCENARIO_META_FILE), meta)
}

fn profile_csv(profile: &Profile) -> String {
    let mut out = String::from("timestamp,value\n");
    for (t, v) in profile.values().iter().enumerate() {
        let _ = writeln!(out, "{},{v}", profile.grid().step_start(t).format("%Y-%m-%dT%H:%M:%S"));
    }
    out
}

pub fn fleet_csv(fleet: &FleetSchedule) -> String {
    let mut out = String::from("vehicle_id,capacity_kwh,charge_kw,consumption_kwh_per_min,arrival,departure\n");
    for bus in fleet.buses() {
        for d in bus.dwells() {
            let _ = writeln!(
                out,
                "{},{},{},{},{:02}:{:02},{:02}:{:02}",
                bus.id,
                bus.battery_capacity_kwh,
                bus.nominal_charge_kw,
                bus.route_consumption_kwh_per_min,
                d.arrival_min / 60,
                d.arrival_min % 60,
                d.departure_min / 60,
                d.departure_min % 60
            );
        }
    }
    out
}

/// Writes the bundled example: `station.toml`, `fleet.csv`, a `scenarios/`
/// directory with the summer and autumn days, and `tiny.toml`.
pub fn write_example_dataset(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let config = toml::to_string(&example_config()).map_err(io::Error::other)?;
    fs::write(dir.join("station.toml"), config)?;
    fs::write(dir.join("fleet.csv"), fleet_csv(&example_fleet()))?;
    for (i, scenario) in example_scenarios(60).iter().enumerate() {
        let name = format!("{:02}_{}", i + 1, scenario.id());
        write_scenario(scenario, &dir.join("scenarios").join(name))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tiny = random_tiny_instance(&mut rng, 3);
    tiny.ess_enabled = true;
    tiny.pv_enabled = true;
    fs::write(dir.join("tiny.toml"), tiny.to_toml())
}
