use std::fmt::Write as _;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use proptest::prelude::*;

use station_ems::model::{ingest_reader, ProfileKind, TimeGrid};

fn midnight() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 6, 21).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn csv(values: &[f64], resolution_min: i64, header: &str) -> String {
    let mut out = format!("timestamp,{header}\n");
    for (i, v) in values.iter().enumerate() {
        let stamp = midnight() + Duration::minutes(i as i64 * resolution_min);
        let _ = writeln!(out, "{},{v}", stamp.format("%Y-%m-%dT%H:%M:%S"));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resampling_conserves_energy(
        source in prop::sample::select(vec![1i64, 5, 15, 30, 60]),
        target in prop::sample::select(vec![15u32, 30, 60]),
        seed in prop::collection::vec(0.0f64..5000.0, 1..50),
    ) {
        let count = (1440 / source) as usize;
        let values: Vec<f64> = (0..count).map(|i| seed[i % seed.len()] * (1.0 + (i % 7) as f64 / 10.0)).collect();
        let grid = TimeGrid::daily(midnight().date(), target).unwrap();
        let profile = ingest_reader(csv(&values, source, "value").as_bytes(), "mem", ProfileKind::TrainDemand, &grid).unwrap();
        let energy_in: f64 = values.iter().sum::<f64>() * source as f64 / 60.0;
        let energy_out: f64 = profile.values().iter().sum::<f64>() * grid.dt_hours();
        prop_assert!((energy_in - energy_out).abs() <= 1e-9 * energy_in.abs().max(1.0),
            "{energy_in} vs {energy_out}");
    }

    #[test]
    fn ingestion_is_deterministic(values in prop::collection::vec(0.0f64..300.0, 96)) {
        let grid = TimeGrid::daily(midnight().date(), 15).unwrap();
        let text = csv(&values, 15, "value[EUR/MWh]");
        let a = ingest_reader(text.as_bytes(), "a", ProfileKind::Price, &grid).unwrap();
        let b = ingest_reader(text.as_bytes(), "a", ProfileKind::Price, &grid).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for (got, raw) in a.values().iter().zip(&values) {
            prop_assert!((got - raw / 1000.0).abs() <= 1e-15);
        }
    }
}
