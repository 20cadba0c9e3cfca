//! Room, comfort, and device agent behavior.
//!
//! Personal comfort agents negotiate a shared setpoint, the room agent
//! plans preheating and builds decision queries from the physics, and
//! manual overrides always beat agent output.

pub mod heating;
mod preheat;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use heating::{
    build_heating_query, default_outside_bins, forecast_prior, generate_cpt, heating_template,
    HeatingContext, OutsideBin, HEATING_ACTIONS, HEATING_TEMPLATE_ID, RADIATOR_W, RESULT_OUTCOMES,
};
pub use preheat::{plan_preheat, PreheatPlan};

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("cannot negotiate over an empty set of comfort profiles")]
    EmptyProfiles,
    #[error("meeting `{meeting}` starts at {start} which is not after planning time {now}")]
    MeetingInPast {
        meeting: String,
        start: u64,
        now: u64,
    },
    #[error("invalid heating context: {0}")]
    InvalidContext(String),
}

/// One person's temperature preference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortProfile {
    pub person: String,
    pub preferred_c: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// A planned attendee and how likely they are to actually show up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attendee {
    pub person: String,
    pub show_up_probability: f64,
}

/// One calendar booking for a room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarEntry {
    pub meeting: String,
    pub room: String,
    pub start_s: u64,
    pub duration_s: u64,
    pub attendees: Vec<Attendee>,
}

impl CalendarEntry {
    pub fn end_s(&self) -> u64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadgeEventKind {
    Enter,
    Leave,
}

/// A badge reader observation: someone entered or left a room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadgeEvent {
    pub time_s: u64,
    pub person: String,
    pub room: String,
    pub kind: BadgeEventKind,
}

/// Manual override of a room's control, active from `time_s` to
/// `expiry_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideEvent {
    pub time_s: u64,
    pub room: String,
    pub command: OverrideCommand,
    pub expiry_s: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverrideCommand {
    ForcePower { force_power_w: f64 },
    ForceSetpoint { force_setpoint_c: f64 },
}

/// What drives a room's radiators for one control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlCommand {
    /// Fixed delivered power in watts.
    Power(f64),
    /// Thermostat toward a setpoint.
    Setpoint(f64),
}

/// Weighted-mean setpoint over the participants' preferences, which
/// minimizes the weighted sum of squared deviations. Rounded to 0.1 °C,
/// halves up. Weights must be positive (scenario validation enforces it).
pub fn negotiate_setpoint(profiles: &[&ComfortProfile]) -> Result<f64, AgentError> {
    if profiles.is_empty() {
        return Err(AgentError::EmptyProfiles);
    }
    let weight_sum: f64 = profiles.iter().map(|p| p.weight).sum();
    debug_assert!(weight_sum > 0.0, "comfort weights must be positive");
    let mean = profiles
        .iter()
        .map(|p| p.weight * p.preferred_c)
        .sum::<f64>()
        / weight_sum;
    Ok((mean * 10.0).round() / 10.0)
}

/// Expected head count of a meeting: the sum of show-up probabilities.
pub fn expected_attendance(entry: &CalendarEntry) -> f64 {
    entry.attendees.iter().map(|a| a.show_up_probability).sum()
}

/// Outcome of re-negotiating a running meeting's setpoint with whoever is
/// actually present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Renegotiation {
    Setpoint(f64),
    /// Nobody is there; the room reverts to its setback temperature.
    Vacate,
}

/// Re-negotiate with the profiles of the people present. An empty room (or
/// one with no represented occupants) vacates.
pub fn renegotiate(present: &[String], profiles: &[ComfortProfile]) -> Renegotiation {
    let present_set: BTreeSet<&str> = present.iter().map(String::as_str).collect();
    let participating: Vec<&ComfortProfile> = profiles
        .iter()
        .filter(|p| present_set.contains(p.person.as_str()))
        .collect();
    match negotiate_setpoint(&participating) {
        Ok(setpoint) => Renegotiation::Setpoint(setpoint),
        Err(_) => Renegotiation::Vacate,
    }
}

/// Apply a single override: between its start and expiry the override's
/// command replaces the agent command, afterwards the agent resumes.
pub fn apply_override(agent: ControlCommand, event: &OverrideEvent, now: u64) -> ControlCommand {
    if now >= event.time_s && now < event.expiry_s {
        match event.command {
            OverrideCommand::ForcePower { force_power_w } => ControlCommand::Power(force_power_w),
            OverrideCommand::ForceSetpoint { force_setpoint_c } => {
                ControlCommand::Setpoint(force_setpoint_c)
            }
        }
    } else {
        agent
    }
}

/// Resolve a set of overrides against an agent command. Among overrides
/// active at `now`, the one with the latest start wins; equal starts fall
/// back to trace order. Returns the effective command and whether an
/// override is governing.
pub fn effective_control(
    agent: ControlCommand,
    overrides: &[&OverrideEvent],
    now: u64,
) -> (ControlCommand, bool) {
    let mut winner: Option<&OverrideEvent> = None;
    for event in overrides {
        if now >= event.time_s && now < event.expiry_s {
            match winner {
                Some(current) if current.time_s > event.time_s => {}
                _ => winner = Some(event),
            }
        }
    }
    match winner {
        Some(event) => (apply_override(agent, event, now), true),
        None => (agent, false),
    }
}
