//! Seeded, virtual-time scenario simulation.

mod engine;
mod expect;
mod scenario;

pub use engine::run;
pub use expect::{check_expectations, ExpectationResult, RunSummary, StatusCounts, PASS_FRACTION};
pub use scenario::{load_scenario, Actor, EgoParams, EgoSample, Expectation, Outage, Scenario, SensorModel, Waypoint};
