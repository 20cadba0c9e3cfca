//! Run accounting: energy, comfort, and the savings comparison.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Totals of one simulation run. Comfort deviation integrates
/// `|room temperature - active setpoint|` over occupied time only, in
/// degree-hours.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub heating_energy_kwh: f64,
    pub comfort_deviation_degree_hours: f64,
    pub advice_count: u64,
    pub shortfalls: u64,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Schema(e.to_string()))
    }
}

/// One per-room line of the simulation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: u64,
    pub room: String,
    /// Room temperature at the start of the tick, °C.
    pub temp: f64,
    /// Setpoint the control loop regulates toward during the tick, °C.
    pub setpoint: f64,
    /// Power delivered during the tick, W.
    pub power: f64,
    pub occupants: u32,
    pub override_active: u8,
}

/// Write the trace as CSV with a header row.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], writer: W) -> Result<(), SimError> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)
            .map_err(|e| SimError::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| SimError::Io(e.to_string()))?;
    Ok(())
}

/// Read a trace back; used by audits and tests.
pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRow>, SimError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(|e| SimError::Schema(e.to_string())))
        .collect()
}

/// Energy-savings comparison of an agent-controlled run against a
/// constant-setpoint baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    /// `100 * (1 - agent / baseline)` heating energy.
    pub percent_energy_saved: f64,
    /// Agent comfort deviation minus baseline comfort deviation,
    /// degree-hours (negative is better for the agent).
    pub comfort_delta_degree_hours: f64,
}

impl SavingsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{}",
            self.percent_energy_saved, self.comfort_delta_degree_hours
        )
    }
}

/// Compare runs; the baseline must have consumed energy for the
/// percentage to be defined.
pub fn compare(agent: &Metrics, baseline: &Metrics) -> Result<SavingsReport, SimError> {
    if baseline.heating_energy_kwh <= 0.0 {
        return Err(SimError::ZeroBaseline);
    }
    Ok(SavingsReport {
        percent_energy_saved: 100.0
            * (1.0 - agent.heating_energy_kwh / baseline.heating_energy_kwh),
        comfort_delta_degree_hours: agent.comfort_deviation_degree_hours
            - baseline.comfort_deviation_degree_hours,
    })
}
