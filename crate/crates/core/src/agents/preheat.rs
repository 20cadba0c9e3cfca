//! Preheat planning: when to switch the radiators on, and at what level,
//! so a room reaches its setpoint by meeting start using as little energy
//! as possible.

use crate::thermal::{time_to_target, HeatInput};

use super::heating::{HeatingContext, RADIATOR_W};
use super::{AgentError, CalendarEntry};

/// A scheduled preheat: run `power_w` from `start_s` until the meeting
/// begins. `shortfall` marks plans that cannot reach the setpoint in the
/// available time even at full power.
#[derive(Debug, Clone, PartialEq)]
pub struct PreheatPlan {
    pub start_s: f64,
    pub power_w: f64,
    pub duration_s: f64,
    pub shortfall: bool,
}

impl PreheatPlan {
    pub fn energy_kwh(&self) -> f64 {
        crate::thermal::energy_of_schedule(&[(self.power_w, self.duration_s)])
    }
}

/// Plan the preheat for a meeting.
///
/// Candidate power levels are one or both radiators. A level is feasible
/// when it reaches the setpoint within the time left before the meeting;
/// among feasible levels the one whose preheat consumes the least energy
/// wins (slow heating loses more to the walls than it saves in power, so
/// this is usually the stronger level started later). If the room is
/// already at or above the setpoint the plan is empty; if no level can
/// make it in time, the plan runs both radiators from now and flags the
/// shortfall.
pub fn plan_preheat(
    entry: &CalendarEntry,
    ctx: &HeatingContext,
    setpoint_c: f64,
    t_out_estimate_c: f64,
    now_s: u64,
) -> Result<PreheatPlan, AgentError> {
    if entry.start_s <= now_s {
        return Err(AgentError::MeetingInPast {
            meeting: entry.meeting.clone(),
            start: entry.start_s,
            now: now_s,
        });
    }
    let start = entry.start_s as f64;
    let available = (entry.start_s - now_s) as f64;

    if ctx.current_temp_c >= setpoint_c {
        return Ok(PreheatPlan {
            start_s: start,
            power_w: 0.0,
            duration_s: 0.0,
            shortfall: false,
        });
    }

    let levels = [RADIATOR_W, 2.0 * RADIATOR_W];
    let mut best: Option<PreheatPlan> = None;
    for power in levels {
        let input = HeatInput::heating(power);
        let Some(needed) = time_to_target(
            &ctx.params,
            ctx.current_temp_c,
            setpoint_c,
            &input,
            t_out_estimate_c,
        ) else {
            continue;
        };
        if needed > available {
            continue;
        }
        let plan = PreheatPlan {
            start_s: start - needed,
            power_w: power,
            duration_s: needed,
            shortfall: false,
        };
        let better = match &best {
            None => true,
            Some(current) => plan.energy_kwh() < current.energy_kwh(),
        };
        if better {
            best = Some(plan);
        }
    }

    Ok(best.unwrap_or(PreheatPlan {
        start_s: now_s as f64,
        power_w: 2.0 * RADIATOR_W,
        duration_s: available,
        shortfall: true,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Attendee;
    use crate::thermal::{analytic_temp, step, RoomThermalState, ThermalParams};

    fn entry(start_s: u64) -> CalendarEntry {
        CalendarEntry {
            meeting: "m".into(),
            room: "r".into(),
            start_s,
            duration_s: 7200,
            attendees: vec![Attendee {
                person: "a".into(),
                show_up_probability: 1.0,
            }],
        }
    }

    fn ctx(current: f64) -> HeatingContext {
        HeatingContext::new(ThermalParams::default(), current, 22.0, 3.0 * 3600.0)
    }

    #[test]
    fn already_warm_means_an_empty_plan() {
        let plan = plan_preheat(&entry(100_000), &ctx(22.0), 22.0, 10.0, 50_000).unwrap();
        assert_eq!(plan.duration_s, 0.0);
        assert_eq!(plan.power_w, 0.0);
        assert!(!plan.shortfall);
        assert_eq!(plan.start_s, 100_000.0);
    }

    #[test]
    fn start_time_comes_from_the_closed_form_and_stepping_agrees() {
        // From 16 °C toward 22 °C with 10 °C outdoors, one radiator cannot
        // reach the setpoint (equilibrium 20 °C), so both are planned.
        let context = ctx(16.0);
        let plan = plan_preheat(&entry(100_000), &context, 22.0, 10.0, 50_000).unwrap();
        assert_eq!(plan.power_w, 2000.0);
        assert!(!plan.shortfall);
        assert!((plan.duration_s - 11192.3157587).abs() < 1e-3);
        assert!((plan.start_s - (100_000.0 - plan.duration_s)).abs() < 1e-9);

        // Stepping oracle: following the plan reaches the setpoint at the
        // meeting start within a step of tolerance.
        let input = HeatInput::heating(plan.power_w);
        let mut temp = 16.0;
        let dt = 1.0;
        let steps = plan.duration_s.round() as usize;
        for _ in 0..steps {
            temp = step(
                RoomThermalState::new(temp),
                &context.params,
                &input,
                10.0,
                dt,
            )
            .unwrap()
            .state
            .temperature_c;
        }
        assert!((temp - 22.0).abs() < 0.01, "reached {temp}");
    }

    #[test]
    fn unreachable_setpoint_plans_full_power_from_now() {
        // 35 °C is above the 30 °C equilibrium of both radiators.
        let plan = plan_preheat(&entry(100_000), &ctx(16.0), 35.0, 10.0, 50_000).unwrap();
        assert!(plan.shortfall);
        assert_eq!(plan.power_w, 2000.0);
        assert_eq!(plan.start_s, 50_000.0);
        assert_eq!(plan.duration_s, 50_000.0);
    }

    #[test]
    fn too_little_time_is_also_a_shortfall() {
        // Both radiators need ~11192 s for 16 -> 22; give them 600.
        let plan = plan_preheat(&entry(100_000), &ctx(16.0), 22.0, 10.0, 99_400).unwrap();
        assert!(plan.shortfall);
        assert_eq!(plan.start_s, 99_400.0);
    }

    #[test]
    fn meetings_in_the_past_are_rejected() {
        let err = plan_preheat(&entry(100), &ctx(16.0), 22.0, 10.0, 100).unwrap_err();
        assert!(matches!(err, AgentError::MeetingInPast { .. }));
    }

    #[test]
    fn chosen_level_minimizes_energy_over_the_power_set() {
        // Mild target both levels can reach: verify the planner's pick is
        // the energy minimum by exhaustive comparison.
        let context = ctx(16.0);
        let setpoint = 19.0;
        let plan = plan_preheat(&entry(100_000), &context, setpoint, 10.0, 20_000).unwrap();
        assert!(!plan.shortfall);
        let mut energies = Vec::new();
        for power in [1000.0, 2000.0] {
            let input = HeatInput::heating(power);
            if let Some(t) = time_to_target(&context.params, 16.0, setpoint, &input, 10.0) {
                if t <= 80_000.0 {
                    energies.push((power, power * t / 3.6e6));
                }
            }
        }
        assert_eq!(energies.len(), 2);
        let min = energies
            .iter()
            .map(|(_, e)| *e)
            .fold(f64::INFINITY, f64::min);
        assert!((plan.energy_kwh() - min).abs() < 1e-9);
        // Sanity: the plan still reaches the setpoint exactly on time.
        let reached = analytic_temp(
            &context.params,
            16.0,
            &HeatInput::heating(plan.power_w),
            10.0,
            plan.duration_s,
        );
        assert!((reached - setpoint).abs() < 1e-6);
    }

    #[test]
    fn never_scheduled_after_meeting_start() {
        for (current, setpoint, now) in [
            (16.0, 22.0, 50_000u64),
            (18.0, 19.0, 90_000),
            (21.9, 22.0, 99_000),
        ] {
            let plan = plan_preheat(&entry(100_000), &ctx(current), setpoint, 10.0, now).unwrap();
            assert!(plan.start_s <= 100_000.0);
            assert!(plan.start_s + plan.duration_s <= 100_000.0 + 1e-9);
        }
    }
}
