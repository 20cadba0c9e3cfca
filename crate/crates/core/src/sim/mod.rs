//! Deterministic whole-building simulation.

mod engine;
mod metrics;
mod scenario;

use thiserror::Error;

use crate::agents::AgentError;
use crate::pronouncer::PronounceError;
use crate::thermal::ThermalError;

pub use engine::{run, run_baseline, run_with, RunOutput, MAX_POWER_W};
pub use metrics::{compare, read_trace_csv, write_trace_csv, Metrics, SavingsReport, TraceRow};
pub use scenario::{
    load_scenario, outdoor_at, validate_scenario, PronouncerSettings, Room, Scenario, SimConfig,
    WeatherPoint,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("io error: {0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    InvalidScenario(Vec<String>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("baseline consumed no energy; savings percentage is undefined")]
    ZeroBaseline,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Pronounce(#[from] PronounceError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}
