use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{DataError, Profile, ProfileKind, TimeGrid};

const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One day's exogenous data with its probability weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    id: String,
    probability: f64,
    train_demand: Profile,
    rb_available: Profile,
    radiation: Profile,
    buy_price: Profile,
    sell_price: Profile,
}

impl Scenario {
    /// Checks that each profile has the right kind and that all five share one
    /// grid. The probability is checked at the set level by
    /// [`ScenarioSet::validate`].
    pub fn new(
        id: impl Into<String>,
        probability: f64,
        train_demand: Profile,
        rb_available: Profile,
        radiation: Profile,
        buy_price: Profile,
        sell_price: Profile,
    ) -> Result<Self, DataError> {
        let id = id.into();
        let expected = [
            (&train_demand, ProfileKind::TrainDemand, "train_demand"),
            (&rb_available, ProfileKind::RbAvailable, "rb_available"),
            (&radiation, ProfileKind::Radiation, "radiation"),
            (&buy_price, ProfileKind::Price, "buy_price"),
            (&sell_price, ProfileKind::Price, "sell_price"),
        ];
        for (profile, kind, name) in expected {
            if profile.kind() != kind {
                return Err(DataError::Validation(format!(
                    "scenario {id}: {name} holds a {} profile",
                    profile.kind()
                )));
            }
            if profile.grid() != train_demand.grid() {
                return Err(DataError::Validation(format!(
                    "scenario {id}: {name} is on a different time grid"
                )));
            }
        }
        Ok(Self {
            id,
            probability,
            train_demand,
            rb_available,
            radiation,
            buy_price,
            sell_price,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn with_probability(mut self, probability: f64) -> Self {
        self.probability = probability;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        self.train_demand.grid()
    }

    pub fn train_demand(&self) -> &Profile {
        &self.train_demand
    }

    pub fn rb_available(&self) -> &Profile {
        &self.rb_available
    }

    pub fn radiation(&self) -> &Profile {
        &self.radiation
    }

    pub fn buy_price(&self) -> &Profile {
        &self.buy_price
    }

    pub fn sell_price(&self) -> &Profile {
        &self.sell_price
    }
}

/// Ordered collection of scenarios solved together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        Self { scenarios }
    }

    /// Scenarios with probabilities reassigned to `1 / len`.
    pub fn equiprobable(scenarios: Vec<Scenario>) -> Self {
        let p = 1.0 / scenarios.len().max(1) as f64;
        Self::new(scenarios.into_iter().map(|s| s.with_probability(p)).collect())
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scenario> {
        self.scenarios.iter()
    }

    /// Grid of the first scenario; all others must be compatible with it.
    pub fn grid(&self) -> Option<&TimeGrid> {
        self.scenarios.first().map(Scenario::grid)
    }

    pub fn probability_sum(&self) -> f64 {
        self.scenarios.iter().map(Scenario::probability).sum()
    }

    /// Largest train demand over every step of every scenario.
    pub fn peak_train_demand(&self) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.train_demand().peak())
            .fold(0.0, f64::max)
    }

    /// Collects every invariant violation; an empty report means the set is usable.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let Some(reference) = self.grid() else {
            violations.push(Violation::Empty);
            return ValidationReport { violations };
        };

        let mut seen = HashSet::new();
        for scenario in &self.scenarios {
            let p = scenario.probability();
            if !(p > 0.0 && p <= 1.0) {
                violations.push(Violation::ProbabilityRange {
                    id: scenario.id().to_string(),
                    probability: p,
                });
            }
            if !scenario.grid().is_compatible(reference) {
                violations.push(Violation::GridMismatch {
                    id: scenario.id().to_string(),
                    expected: *reference,
                    found: *scenario.grid(),
                });
            }
            if !seen.insert(scenario.id()) {
                violations.push(Violation::DuplicateId(scenario.id().to_string()));
            }
        }
        let sum = self.probability_sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            violations.push(Violation::ProbabilitySum(sum));
        }
        ValidationReport { violations }
    }
}

impl<'a> IntoIterator for &'a ScenarioSet {
    type Item = &'a Scenario;
    type IntoIter = std::slice::Iter<'a, Scenario>;

    fn into_iter(self) -> Self::IntoIter {
        self.scenarios.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    ProbabilitySum(f64),
    ProbabilityRange { id: String, probability: f64 },
    GridMismatch { id: String, expected: TimeGrid, found: TimeGrid },
    DuplicateId(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "scenario set is empty"),
            Violation::ProbabilitySum(sum) => write!(f, "scenario probabilities sum to {sum}, not 1"),
            Violation::ProbabilityRange { id, probability } => {
                write!(f, "scenario {id}: probability {probability} outside (0, 1]")
            }
            Violation::GridMismatch { id, expected, found } => write!(
                f,
                "scenario {id}: grid of {} x {} min from {} does not match {} x {} min from {}",
                found.steps(),
                found.step_minutes(),
                found.start().time(),
                expected.steps(),
                expected.step_minutes(),
                expected.start().time()
            ),
            Violation::DuplicateId(id) => write!(f, "scenario id {id} appears more than once"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    fn scenario(id: &str, p: f64, grid: TimeGrid) -> Scenario {
        let flat = |kind, v| Profile::constant(kind, grid, v).unwrap();
        Scenario::new(
            id,
            p,
            flat(ProfileKind::TrainDemand, 500.0),
            flat(ProfileKind::RbAvailable, 0.0),
            flat(ProfileKind::Radiation, 0.0),
            flat(ProfileKind::Price, 0.1),
            flat(ProfileKind::Price, 0.1),
        )
        .unwrap()
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, d).unwrap()
    }

    #[test]
    fn two_hundred_equal_scenarios_are_valid() {
        let grid = TimeGrid::daily(day(1), 15).unwrap();
        let set = ScenarioSet::equiprobable(
            (0..200)
                .map(|i| scenario(&format!("s{i:03}"), 0.0, grid))
                .collect(),
        );
        let report = set.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn probabilities_over_one_are_flagged() {
        let grid = TimeGrid::daily(day(1), 15).unwrap();
        let set = ScenarioSet::new(vec![scenario("a", 0.6, grid), scenario("b", 0.6, grid)]);
        let report = set.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::ProbabilitySum(s) if (s - 1.2).abs() < 1e-12));
    }

    #[test]
    fn mismatched_grids_are_flagged() {
        let a = TimeGrid::daily(day(1), 15).unwrap();
        let b = TimeGrid::daily(day(2), 60).unwrap();
        let set = ScenarioSet::new(vec![scenario("a", 0.5, a), scenario("b", 0.5, b)]);
        let report = set.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::GridMismatch { id, .. } if id == "b")));
    }

    #[test]
    fn different_dates_share_a_grid() {
        let a = TimeGrid::daily(day(1), 15).unwrap();
        let b = TimeGrid::daily(day(2), 15).unwrap();
        let set = ScenarioSet::new(vec![scenario("a", 0.5, a), scenario("b", 0.5, b)]);
        assert!(set.validate().is_valid());
    }

    #[test]
    fn empty_and_duplicate_sets() {
        assert_eq!(ScenarioSet::new(vec![]).validate().violations, vec![Violation::Empty]);
        let grid = TimeGrid::daily(day(1), 15).unwrap();
        let set = ScenarioSet::new(vec![scenario("a", 0.5, grid), scenario("a", 0.5, grid)]);
        assert!(set
            .validate()
            .violations
            .contains(&Violation::DuplicateId("a".into())));
    }

    #[test]
    fn profiles_within_a_scenario_must_share_a_grid() {
        let a = TimeGrid::daily(day(1), 15).unwrap();
        let b = TimeGrid::daily(day(2), 15).unwrap();
        let flat = |kind, grid| Profile::constant(kind, grid, 1.0).unwrap();
        let result = Scenario::new(
            "x",
            1.0,
            flat(ProfileKind::TrainDemand, a),
            flat(ProfileKind::RbAvailable, a),
            flat(ProfileKind::Radiation, b),
            flat(ProfileKind::Price, a),
            flat(ProfileKind::Price, a),
        );
        assert!(result.is_err());
    }
}
