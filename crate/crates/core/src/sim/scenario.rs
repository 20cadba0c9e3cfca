//! Scenario and configuration files.
//!
//! A scenario is a self-contained JSON description of one simulation:
//! rooms with their thermal constants, the meeting calendar, comfort
//! profiles, badge and override traces, the outdoor temperature trace, a
//! seed, and the horizon. `docs/formats.md` documents the schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{
    default_outside_bins, BadgeEvent, CalendarEntry, ComfortProfile, OutsideBin, OverrideEvent,
};
use crate::thermal::{ThermalParams, MAX_TEMP_C, MIN_TEMP_C};

use super::SimError;

/// One simulated room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: String,
    #[serde(flatten)]
    pub params: ThermalParams,
    pub initial_temp_c: f64,
}

/// One point of the piecewise-linear outdoor temperature trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherPoint {
    pub time_s: u64,
    pub temp_c: f64,
}

/// A complete simulation input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub calendar: Vec<CalendarEntry>,
    #[serde(default)]
    pub profiles: Vec<ComfortProfile>,
    #[serde(default)]
    pub badges: Vec<BadgeEvent>,
    #[serde(default)]
    pub overrides: Vec<OverrideEvent>,
    pub weather: Vec<WeatherPoint>,
    pub seed: u64,
    pub horizon: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn room(&self, id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    pub fn profile(&self, person: &str) -> Option<&ComfortProfile> {
        self.profiles.iter().find(|p| p.person == person)
    }
}

/// Outdoor temperature at `t`, linearly interpolated between trace points
/// and clamped to the first/last value outside the trace.
pub fn outdoor_at(weather: &[WeatherPoint], t: u64) -> f64 {
    debug_assert!(!weather.is_empty());
    let first = &weather[0];
    if t <= first.time_s {
        return first.temp_c;
    }
    for pair in weather.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if t <= b.time_s {
            let span = (b.time_s - a.time_s) as f64;
            let frac = (t - a.time_s) as f64 / span;
            return a.temp_c + frac * (b.temp_c - a.temp_c);
        }
    }
    weather.last().expect("non-empty trace").temp_c
}

/// Load a scenario file and validate it.
pub fn load_scenario(path: &Path) -> Result<Scenario, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    let scenario = Scenario::from_json(&text)?;
    let problems = validate_scenario(&scenario);
    if !problems.is_empty() {
        return Err(SimError::InvalidScenario(problems));
    }
    Ok(scenario)
}

/// Every consistency rule a scenario must satisfy, reported together.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut out = Vec::new();

    if s.rooms.is_empty() {
        out.push("rooms: at least one room is required".into());
    }
    for (i, room) in s.rooms.iter().enumerate() {
        if room.id.is_empty() {
            out.push(format!("rooms[{i}]: empty id"));
        }
        if s.rooms.iter().filter(|r| r.id == room.id).count() > 1 {
            out.push(format!("rooms[{i}]: duplicate id `{}`", room.id));
        }
        if let Err(e) = room.params.validate() {
            out.push(format!("rooms[{i}] `{}`: {e}", room.id));
        }
        if !room.initial_temp_c.is_finite()
            || room.initial_temp_c < MIN_TEMP_C
            || room.initial_temp_c > MAX_TEMP_C
        {
            out.push(format!(
                "rooms[{i}] `{}`: initial temperature out of physical bounds",
                room.id
            ));
        }
    }

    for (i, profile) in s.profiles.iter().enumerate() {
        if s.profiles
            .iter()
            .filter(|p| p.person == profile.person)
            .count()
            > 1
        {
            out.push(format!(
                "profiles[{i}]: duplicate person `{}`",
                profile.person
            ));
        }
        if !(10.0..=35.0).contains(&profile.preferred_c) {
            out.push(format!(
                "profiles[{i}] `{}`: preferred temperature outside [10, 35] °C",
                profile.person
            ));
        }
        if profile.weight <= 0.0 || !profile.weight.is_finite() {
            out.push(format!(
                "profiles[{i}] `{}`: weight must be positive",
                profile.person
            ));
        }
    }

    for (i, entry) in s.calendar.iter().enumerate() {
        if entry.duration_s == 0 {
            out.push(format!("calendar[{i}] `{}`: zero duration", entry.meeting));
        }
        if s.room(&entry.room).is_none() {
            out.push(format!(
                "calendar[{i}] `{}`: unknown room `{}`",
                entry.meeting, entry.room
            ));
        }
        if entry.attendees.is_empty() {
            out.push(format!("calendar[{i}] `{}`: no attendees", entry.meeting));
        }
        for a in &entry.attendees {
            if !(0.0..=1.0).contains(&a.show_up_probability) {
                out.push(format!(
                    "calendar[{i}] `{}`: attendance probability {} outside [0, 1]",
                    entry.meeting, a.show_up_probability
                ));
            }
            if s.profile(&a.person).is_none() {
                out.push(format!(
                    "calendar[{i}] `{}`: attendee `{}` has no comfort profile",
                    entry.meeting, a.person
                ));
            }
        }
    }
    // Meetings in one room must not overlap.
    for room in &s.rooms {
        let mut own: Vec<&CalendarEntry> =
            s.calendar.iter().filter(|e| e.room == room.id).collect();
        own.sort_by_key(|e| e.start_s);
        for pair in own.windows(2) {
            if pair[0].end_s() > pair[1].start_s {
                out.push(format!(
                    "calendar: meetings `{}` and `{}` overlap in room `{}`",
                    pair[0].meeting, pair[1].meeting, room.id
                ));
            }
        }
    }

    let mut last_badge = 0u64;
    for (i, event) in s.badges.iter().enumerate() {
        if event.time_s < last_badge {
            out.push(format!("badges[{i}]: trace not chronological"));
        }
        last_badge = event.time_s;
        if s.room(&event.room).is_none() {
            out.push(format!("badges[{i}]: unknown room `{}`", event.room));
        }
        if s.profile(&event.person).is_none() {
            out.push(format!("badges[{i}]: unknown person `{}`", event.person));
        }
    }

    let mut last_override = 0u64;
    for (i, event) in s.overrides.iter().enumerate() {
        if event.time_s < last_override {
            out.push(format!("overrides[{i}]: trace not chronological"));
        }
        last_override = event.time_s;
        if s.room(&event.room).is_none() {
            out.push(format!("overrides[{i}]: unknown room `{}`", event.room));
        }
        if event.expiry_s <= event.time_s {
            out.push(format!("overrides[{i}]: expiry must be after start"));
        }
    }

    if s.weather.is_empty() {
        out.push("weather: at least one point is required".into());
    }
    for pair in s.weather.windows(2) {
        if pair[1].time_s <= pair[0].time_s {
            out.push("weather: trace times must be strictly increasing".into());
            break;
        }
    }
    for (i, p) in s.weather.iter().enumerate() {
        if !p.temp_c.is_finite() {
            out.push(format!("weather[{i}]: temperature must be finite"));
        }
    }

    out
}

/// Simulation-wide knobs. All fields have defaults, so `{}` is a valid
/// configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Tick length, seconds.
    pub dt: u64,
    /// Unoccupied-room setpoint, °C.
    pub setback: f64,
    /// Seconds after meeting start when attendance is re-checked.
    pub renegotiation_delay: u64,
    /// Master switch for preheating (off = heating starts at occupancy).
    pub preheat: bool,
    /// Safety margin subtracted from the planned preheat start, seconds.
    pub preheat_margin: u64,
    /// Cap on how early before a meeting the agents act, seconds.
    pub max_lead: u64,
    pub pronouncer: PronouncerSettings,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 60,
            setback: 16.0,
            renegotiation_delay: 300,
            preheat: true,
            preheat_margin: 600,
            max_lead: 14_400,
            pronouncer: PronouncerSettings::default(),
        }
    }
}

/// Calibration of the heating decision queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PronouncerSettings {
    /// Monte Carlo samples per CPT row.
    pub cpt_samples: usize,
    /// Utility cost per kWh.
    pub energy_weight: f64,
    /// Utility penalty for ending above the desired band.
    pub penalty_higher: f64,
    /// Utility penalty for ending below the desired band.
    pub penalty_lower: f64,
    /// Conductance added by the ventilate action, W/K.
    pub vent_conductance_w_per_k: f64,
    /// Half-width of the desired outcome band, °C.
    pub desired_band_c: f64,
    /// Minimum expected attendance for a meeting to be worth preheating.
    pub attendance_gate: f64,
    /// Width of the forecast kernel that turns the current outdoor
    /// reading into a bin prior; 0 keeps the configured priors.
    pub forecast_spread_c: f64,
    pub outside_bins: Vec<OutsideBin>,
}

impl Default for PronouncerSettings {
    fn default() -> Self {
        Self {
            cpt_samples: 1000,
            energy_weight: 1.0,
            penalty_higher: 15.0,
            penalty_lower: 25.0,
            vent_conductance_w_per_k: 50.0,
            desired_band_c: 0.5,
            attendance_gate: 0.5,
            forecast_spread_c: 4.0,
            outside_bins: default_outside_bins(),
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: SimConfig =
            serde_json::from_str(text).map_err(|e| SimError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.dt == 0 {
            return Err(SimError::InvalidConfig("dt must be positive".into()));
        }
        if !self.setback.is_finite() {
            return Err(SimError::InvalidConfig("setback must be finite".into()));
        }
        if self.pronouncer.cpt_samples == 0 {
            return Err(SimError::InvalidConfig(
                "cpt_samples must be at least 1".into(),
            ));
        }
        if !(0.0..=f64::MAX).contains(&self.pronouncer.attendance_gate) {
            return Err(SimError::InvalidConfig(
                "attendance_gate must be non-negative".into(),
            ));
        }
        Ok(())
    }
}
