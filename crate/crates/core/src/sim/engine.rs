//! The deterministic simulation loop.
//!
//! Time advances in fixed `dt` ticks. Within a tick the order is always:
//! weather update, badge events, agent decisions, overrides, physics step.
//! Every data structure iterates in a fixed order and the only randomness
//! is the scenario seed feeding CPT generation, so identical inputs
//! reproduce identical traces byte for byte.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::agents::{
    build_heating_query, effective_control, expected_attendance, forecast_prior, heating_template,
    negotiate_setpoint, plan_preheat, renegotiate, BadgeEventKind, ControlCommand, HeatingContext,
    PreheatPlan, Renegotiation, RADIATOR_W,
};
use crate::pronouncer::Pronouncer;
use crate::thermal::{step, time_to_target, HeatInput, RoomThermalState};

use super::metrics::{Metrics, TraceRow};
use super::scenario::{outdoor_at, Scenario, SimConfig};
use super::SimError;

/// Combined radiator capacity of a room, W.
pub const MAX_POWER_W: f64 = 2.0 * RADIATOR_W;

/// Metrics plus the full per-tick trace of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug)]
struct MeetingRun {
    calendar_idx: usize,
    room_idx: usize,
    /// Setpoint negotiated from the planned attendees.
    setpoint: f64,
    /// Whether expected attendance clears the preheat gate.
    gated_in: bool,
    query_time: u64,
    queried: bool,
    advice_action: Option<String>,
    /// Latched preheat schedule, set when its window opens.
    active_plan: Option<PreheatPlan>,
    renegotiated: bool,
    vacated: bool,
}

/// Run the agent-controlled simulation with a private pronouncer.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<RunOutput, SimError> {
    let pronouncer = Arc::new(Pronouncer::new());
    pronouncer.register_template(heating_template())?;
    run_with(scenario, config, &pronouncer)
}

/// Run the agent-controlled simulation against a shared pronouncer that
/// already has the heating template registered.
pub fn run_with(
    scenario: &Scenario,
    config: &SimConfig,
    pronouncer: &Pronouncer,
) -> Result<RunOutput, SimError> {
    Engine::new(scenario, config)?.run(Mode::Agents(pronouncer))
}

/// Run the constant-setpoint baseline: a bang-bang thermostat at full
/// power holds `constant_setpoint` in every room at all times, with no
/// agents involved — calendar and overrides are ignored. Badges still
/// drive the occupancy used by the comfort metric.
pub fn run_baseline(
    scenario: &Scenario,
    config: &SimConfig,
    constant_setpoint: f64,
) -> Result<RunOutput, SimError> {
    Engine::new(scenario, config)?.run(Mode::Baseline(constant_setpoint))
}

enum Mode<'a> {
    Agents(&'a Pronouncer),
    Baseline(f64),
}

struct Engine<'a> {
    scenario: &'a Scenario,
    config: &'a SimConfig,
    temps: Vec<f64>,
    meetings: Vec<MeetingRun>,
    /// person -> room currently badged into.
    presence: BTreeMap<String, String>,
    next_badge: usize,
    metrics: Metrics,
    trace: Vec<TraceRow>,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, config: &'a SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let problems = super::scenario::validate_scenario(scenario);
        if !problems.is_empty() {
            return Err(SimError::InvalidScenario(problems));
        }
        let mut meetings = Vec::with_capacity(scenario.calendar.len());
        for (calendar_idx, entry) in scenario.calendar.iter().enumerate() {
            let room_idx = scenario
                .rooms
                .iter()
                .position(|r| r.id == entry.room)
                .expect("validated scenario");
            let attendee_profiles: Vec<_> = entry
                .attendees
                .iter()
                .filter_map(|a| scenario.profile(&a.person))
                .collect();
            let setpoint = negotiate_setpoint(&attendee_profiles)?;
            let gated_in = expected_attendance(entry) >= config.pronouncer.attendance_gate;
            let query_time = query_time(scenario, config, entry, setpoint);
            meetings.push(MeetingRun {
                calendar_idx,
                room_idx,
                setpoint,
                gated_in,
                query_time,
                queried: false,
                advice_action: None,
                active_plan: None,
                renegotiated: false,
                vacated: false,
            });
        }
        Ok(Self {
            scenario,
            config,
            temps: scenario.rooms.iter().map(|r| r.initial_temp_c).collect(),
            meetings,
            presence: BTreeMap::new(),
            next_badge: 0,
            metrics: Metrics::default(),
            trace: Vec::new(),
        })
    }

    fn run(mut self, mode: Mode<'_>) -> Result<RunOutput, SimError> {
        let dt = self.config.dt;
        let mut t = 0u64;
        while t < self.scenario.horizon {
            let t_out = outdoor_at(&self.scenario.weather, t);
            self.apply_badges(t, dt);
            if let Mode::Agents(pronouncer) = &mode {
                self.agent_decisions(t, t_out, pronouncer)?;
            }
            self.tick_rooms(t, dt, t_out, &mode)?;
            t += dt;
        }
        Ok(RunOutput {
            metrics: self.metrics,
            trace: self.trace,
        })
    }

    fn apply_badges(&mut self, t: u64, dt: u64) {
        while self.next_badge < self.scenario.badges.len() {
            let event = &self.scenario.badges[self.next_badge];
            if event.time_s >= t + dt {
                break;
            }
            // Events timestamped before the first tick still apply to it.
            match event.kind {
                BadgeEventKind::Enter => {
                    self.presence
                        .insert(event.person.clone(), event.room.clone());
                }
                BadgeEventKind::Leave => {
                    if self.presence.get(&event.person) == Some(&event.room) {
                        self.presence.remove(&event.person);
                    }
                }
            }
            self.next_badge += 1;
        }
    }

    fn occupants(&self, room_id: &str) -> u32 {
        self.presence
            .values()
            .filter(|r| r.as_str() == room_id)
            .count() as u32
    }

    fn present_in(&self, room_id: &str) -> Vec<String> {
        self.presence
            .iter()
            .filter(|(_, room)| room.as_str() == room_id)
            .map(|(person, _)| person.clone())
            .collect()
    }

    fn agent_decisions(
        &mut self,
        t: u64,
        t_out: f64,
        pronouncer: &Pronouncer,
    ) -> Result<(), SimError> {
        for m in 0..self.meetings.len() {
            let entry = &self.scenario.calendar[self.meetings[m].calendar_idx];
            let start = entry.start_s;
            let end = entry.end_s();

            // Heating query and preheat plan, once, at the lead time.
            if !self.meetings[m].queried
                && self.meetings[m].gated_in
                && self.config.preheat
                && t >= self.meetings[m].query_time
                && t < start
            {
                let meeting = &self.meetings[m];
                let room_idx = meeting.room_idx;
                let settings = &self.config.pronouncer;
                let mut ctx = HeatingContext::new(
                    self.scenario.rooms[room_idx].params,
                    self.temps[room_idx],
                    meeting.setpoint,
                    (start - t) as f64,
                );
                ctx.energy_weight = settings.energy_weight;
                ctx.penalty_higher = settings.penalty_higher;
                ctx.penalty_lower = settings.penalty_lower;
                ctx.vent_conductance_w_per_k = settings.vent_conductance_w_per_k;
                ctx.desired_band_c = settings.desired_band_c;
                ctx.outside_bins = settings.outside_bins.clone();
                let prior = forecast_prior(
                    &ctx.outside_bins,
                    t_out - meeting.setpoint,
                    settings.forecast_spread_c,
                );
                for (bin, p) in ctx.outside_bins.iter_mut().zip(prior) {
                    bin.prior = p;
                }
                let query = build_heating_query(
                    &ctx,
                    settings.cpt_samples,
                    self.scenario.seed,
                    &entry.room,
                )?;
                let advice = pronouncer.pronounce(&query)?;
                self.metrics.advice_count += 1;

                let meeting = &mut self.meetings[m];
                meeting.advice_action = Some(advice.action);
                meeting.queried = true;
            }

            // Preheat scheduling: once heating is advised, re-plan from the
            // current room state every idle tick and latch the plan when
            // its start (minus the safety margin) arrives. Re-planning
            // matters for back-to-back meetings, where the temperature at
            // query time is transiently high.
            if self.meetings[m].queried
                && self.meetings[m].active_plan.is_none()
                && t < start
                && matches!(
                    self.meetings[m].advice_action.as_deref(),
                    Some("one_radiator") | Some("both_radiators")
                )
            {
                let meeting = &self.meetings[m];
                let ctx = HeatingContext::new(
                    self.scenario.rooms[meeting.room_idx].params,
                    self.temps[meeting.room_idx],
                    meeting.setpoint,
                    (start - t) as f64,
                );
                let plan = plan_preheat(entry, &ctx, meeting.setpoint, t_out, t)?;
                if (t as f64) >= plan.start_s - self.config.preheat_margin as f64 {
                    if plan.shortfall {
                        self.metrics.shortfalls += 1;
                    }
                    self.meetings[m].active_plan = Some(plan);
                }
            }

            // Attendance re-check shortly after the meeting starts.
            if !self.meetings[m].renegotiated
                && t >= start + self.config.renegotiation_delay
                && t < end
            {
                let present = self.present_in(&entry.room);
                let meeting = &mut self.meetings[m];
                match renegotiate(&present, &self.scenario.profiles) {
                    Renegotiation::Setpoint(sp) => meeting.setpoint = sp,
                    Renegotiation::Vacate => meeting.vacated = true,
                }
                meeting.renegotiated = true;
            }
        }
        Ok(())
    }

    /// The control target and power mode for one room at one tick.
    fn agent_control(&self, room_idx: usize, t: u64, temp: f64) -> (f64, f64, f64) {
        // Occupied meeting wins: thermostat at the negotiated setpoint.
        for meeting in &self.meetings {
            if meeting.room_idx != room_idx || meeting.vacated {
                continue;
            }
            let entry = &self.scenario.calendar[meeting.calendar_idx];
            let engaged = meeting.gated_in || meeting.renegotiated;
            if engaged && t >= entry.start_s && t < entry.end_s() {
                let power = if temp < meeting.setpoint {
                    MAX_POWER_W
                } else {
                    0.0
                };
                return (meeting.setpoint, power, 0.0);
            }
        }
        // Preheat window: thermostat at the meeting setpoint with the
        // planned power level, starting a margin early. When windows of
        // two upcoming meetings overlap, the one starting soonest governs.
        let mut upcoming: Vec<&MeetingRun> = self
            .meetings
            .iter()
            .filter(|m| {
                m.room_idx == room_idx && t < self.scenario.calendar[m.calendar_idx].start_s
            })
            .collect();
        upcoming.sort_by_key(|m| self.scenario.calendar[m.calendar_idx].start_s);
        for meeting in upcoming {
            if let Some(plan) = &meeting.active_plan {
                if plan.duration_s > 0.0 {
                    let power = if temp < meeting.setpoint {
                        plan.power_w
                    } else {
                        0.0
                    };
                    return (meeting.setpoint, power, 0.0);
                }
            }
            // A ventilate advice cools an overly warm room toward the
            // upcoming setpoint before the meeting.
            if meeting.advice_action.as_deref() == Some("ventilate")
                && t >= meeting.query_time
                && temp > meeting.setpoint + self.config.pronouncer.desired_band_c
            {
                return (
                    meeting.setpoint,
                    0.0,
                    self.config.pronouncer.vent_conductance_w_per_k,
                );
            }
        }
        // Idle: hold the setback temperature.
        let power = if temp < self.config.setback {
            MAX_POWER_W
        } else {
            0.0
        };
        (self.config.setback, power, 0.0)
    }

    fn tick_rooms(&mut self, t: u64, dt: u64, t_out: f64, mode: &Mode<'_>) -> Result<(), SimError> {
        for room_idx in 0..self.scenario.rooms.len() {
            let room = &self.scenario.rooms[room_idx];
            let temp = self.temps[room_idx];

            let (mut setpoint, mut power, mut vent) = match mode {
                Mode::Baseline(constant) => {
                    let power = if temp < *constant { MAX_POWER_W } else { 0.0 };
                    (*constant, power, 0.0)
                }
                Mode::Agents(_) => self.agent_control(room_idx, t, temp),
            };

            let mut override_active = false;
            if matches!(mode, Mode::Agents(_)) {
                let room_overrides: Vec<_> = self
                    .scenario
                    .overrides
                    .iter()
                    .filter(|o| o.room == room.id)
                    .collect();
                let (effective, active) =
                    effective_control(ControlCommand::Setpoint(setpoint), &room_overrides, t);
                if active {
                    override_active = true;
                    vent = 0.0;
                    match effective {
                        ControlCommand::Power(p) => power = p,
                        ControlCommand::Setpoint(sp) => {
                            setpoint = sp;
                            power = if temp < sp { MAX_POWER_W } else { 0.0 };
                        }
                    }
                }
            }

            let occupants = self.occupants(&room.id);
            self.trace.push(TraceRow {
                time: t,
                room: room.id.clone(),
                temp,
                setpoint,
                power,
                occupants,
                override_active: override_active as u8,
            });

            self.metrics.heating_energy_kwh += power * dt as f64 / crate::thermal::J_PER_KWH;
            if occupants > 0 {
                self.metrics.comfort_deviation_degree_hours +=
                    (temp - setpoint).abs() * dt as f64 / 3600.0;
            }

            let input = HeatInput {
                power_w: power,
                vent_conductance_w_per_k: vent,
            };
            let next = step(
                RoomThermalState::new(temp),
                &room.params,
                &input,
                t_out,
                dt as f64,
            )?;
            self.temps[room_idx] = next.state.temperature_c;
        }
        Ok(())
    }
}

/// When the agents act for a meeting: early enough to preheat from the
/// setback temperature at one radiator plus a margin, but never more than
/// `max_lead` ahead.
fn query_time(
    scenario: &Scenario,
    config: &SimConfig,
    entry: &crate::agents::CalendarEntry,
    setpoint: f64,
) -> u64 {
    let room = scenario.room(&entry.room).expect("validated scenario");
    let t_out = outdoor_at(&scenario.weather, entry.start_s);
    let lead = match time_to_target(
        &room.params,
        config.setback,
        setpoint,
        &HeatInput::heating(RADIATOR_W),
        t_out,
    ) {
        Some(seconds) => ((seconds.ceil() as u64) + config.preheat_margin).min(config.max_lead),
        None => config.max_lead,
    };
    entry.start_s.saturating_sub(lead)
}
