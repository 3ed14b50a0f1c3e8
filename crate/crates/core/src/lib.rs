//! Day-ahead energy management for a railway station with a stationary
//! battery fed by regenerative braking, rooftop PV and an electric bus depot.
//!
//! The pipeline: ingest scenario profiles ([`model`]), turn radiation into PV
//! output ([`pv`]) and bus timetables into charging demand ([`ev`]), then
//! solve one mixed-integer model per scenario ([`milp`]) and compare asset
//! configurations ([`engine`]).

pub mod engine;
pub mod instance;
pub mod ev;
pub mod milp;
pub mod model;
pub mod pv;
pub mod synthetic;

pub use ev::{ev_demand_profile, simulate_fleet, EvDemandProfile, FleetTrace};
pub use milp::{
    brute_force_oracle, build_problem, emit_milp, solve, solve_joint, validate_solution, BackendKind, CaseFlags,
    DecisionSchedule, DischargeConvention, EmsProblem, EmsSolution, ModelOptions, SolveOptions, SolverStatus,
};
pub use model::{
    load_scenario_dir, Bus, DataError, EssParams, FleetSchedule, GridParams, Profile, ProfileKind, PvParams, Scenario,
    ScenarioSet, Station, StationConfig, TimeGrid,
};
pub use pv::{pv_power, pv_profile, PvPowerProfile};
