//! First-order lumped RC thermal model of a single room.
//!
//! The room is one thermal mass with capacitance `C` behind a loss
//! resistance `R` to the outdoors. With radiator power `P` and an optional
//! extra ventilation conductance `G` the temperature obeys
//!
//! ```text
//! C * dT/dt = P - (T - T_out) * (1/R + G)
//! ```
//!
//! Both the forward-Euler discretization ([`step`]) and the closed-form
//! solution ([`analytic_temp`]) are provided so either can audit the other.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clamp for simulated room temperature, °C.
pub const MIN_TEMP_C: f64 = -50.0;
/// Upper clamp for simulated room temperature, °C.
pub const MAX_TEMP_C: f64 = 60.0;

/// Joules per kilowatt-hour.
pub const J_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Error, PartialEq)]
pub enum ThermalError {
    #[error(
        "thermal parameters must be finite and positive (R={resistance} K/W, C={capacitance} J/K)"
    )]
    BadParams { resistance: f64, capacitance: f64 },
    #[error("heat input must be finite and non-negative (P={power} W, G={vent_conductance} W/K)")]
    BadInput { power: f64, vent_conductance: f64 },
    #[error("step of {dt} s violates the stability guard (max {limit} s for these parameters)")]
    UnstableStep { dt: f64, limit: f64 },
}

/// Loss resistance and heat capacity of one room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Thermal resistance to the outdoors, K/W.
    pub resistance_k_per_w: f64,
    /// Thermal capacitance of the room contents, J/K.
    pub capacitance_j_per_k: f64,
}

impl ThermalParams {
    pub fn new(resistance_k_per_w: f64, capacitance_j_per_k: f64) -> Result<Self, ThermalError> {
        let p = Self {
            resistance_k_per_w,
            capacitance_j_per_k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.resistance_k_per_w) || !ok(self.capacitance_j_per_k) {
            return Err(ThermalError::BadParams {
                resistance: self.resistance_k_per_w,
                capacitance: self.capacitance_j_per_k,
            });
        }
        Ok(())
    }
}

impl Default for ThermalParams {
    /// Bundled room constants used by the example scenarios and template
    /// defaults. These are configuration placeholders, not measurements;
    /// see `docs/configuration.md`.
    fn default() -> Self {
        Self {
            resistance_k_per_w: 1.0e-2,
            capacitance_j_per_k: 2.0e6,
        }
    }
}

/// Current temperature of a room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomThermalState {
    pub temperature_c: f64,
}

impl RoomThermalState {
    pub fn new(temperature_c: f64) -> Self {
        Self { temperature_c }
    }
}

/// Heat delivered to (or vented out of) the room.
///
/// Ventilation is modeled as extra conductance to the outdoors rather than
/// negative power, so it can never cool the room below `t_out`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatInput {
    /// Radiator power, W (>= 0).
    pub power_w: f64,
    /// Added loss conductance from ventilation, W/K (>= 0).
    pub vent_conductance_w_per_k: f64,
}

impl HeatInput {
    pub fn heating(power_w: f64) -> Self {
        Self {
            power_w,
            vent_conductance_w_per_k: 0.0,
        }
    }

    pub fn off() -> Self {
        Self::heating(0.0)
    }

    pub fn venting(vent_conductance_w_per_k: f64) -> Self {
        Self {
            power_w: 0.0,
            vent_conductance_w_per_k,
        }
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.power_w) || !ok(self.vent_conductance_w_per_k) {
            return Err(ThermalError::BadInput {
                power: self.power_w,
                vent_conductance: self.vent_conductance_w_per_k,
            });
        }
        Ok(())
    }
}

/// Result of one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: RoomThermalState,
    /// True when the physical bounds clamp fired.
    pub clamped: bool,
}

/// Total conductance to the outdoors, W/K.
pub fn effective_conductance(params: &ThermalParams, input: &HeatInput) -> f64 {
    1.0 / params.resistance_k_per_w + input.vent_conductance_w_per_k
}

/// Time constant `tau = C / k` for the effective conductance, seconds.
pub fn time_constant(params: &ThermalParams, input: &HeatInput) -> f64 {
    params.capacitance_j_per_k / effective_conductance(params, input)
}

/// Steady-state temperature the room converges to under constant input, °C.
pub fn equilibrium_temp(params: &ThermalParams, input: &HeatInput, t_out: f64) -> f64 {
    t_out + input.power_w / effective_conductance(params, input)
}

/// One forward-Euler step of `dt` seconds.
///
/// Requires `dt <= C * R / 10`; larger steps are rejected rather than
/// integrated inaccurately. The result is clamped to the physical bounds
/// `[MIN_TEMP_C, MAX_TEMP_C]` with `clamped` set when that fires.
pub fn step(
    state: RoomThermalState,
    params: &ThermalParams,
    input: &HeatInput,
    t_out: f64,
    dt: f64,
) -> Result<Step, ThermalError> {
    params.validate()?;
    input.validate()?;
    let limit = params.capacitance_j_per_k * params.resistance_k_per_w / 10.0;
    if dt.is_nan() || dt <= 0.0 || dt > limit {
        return Err(ThermalError::UnstableStep { dt, limit });
    }
    let k = effective_conductance(params, input);
    let flow = input.power_w - (state.temperature_c - t_out) * k;
    let raw = state.temperature_c + dt / params.capacitance_j_per_k * flow;
    let clamped_value = raw.clamp(MIN_TEMP_C, MAX_TEMP_C);
    Ok(Step {
        state: RoomThermalState::new(clamped_value),
        clamped: clamped_value != raw,
    })
}

/// One exact step of `dt` seconds using the closed-form solution.
///
/// Used to cross-check [`step`]; not subject to the stability guard.
pub fn step_exact(
    state: RoomThermalState,
    params: &ThermalParams,
    input: &HeatInput,
    t_out: f64,
    dt: f64,
) -> RoomThermalState {
    RoomThermalState::new(analytic_temp(params, state.temperature_c, input, t_out, dt))
}

/// Closed-form temperature after `t` seconds of constant input:
/// `T(t) = T_inf + (t0 - T_inf) * exp(-t / tau)`.
pub fn analytic_temp(
    params: &ThermalParams,
    t0: f64,
    input: &HeatInput,
    t_out: f64,
    t: f64,
) -> f64 {
    let t_inf = equilibrium_temp(params, input, t_out);
    let tau = time_constant(params, input);
    t_inf + (t0 - t_inf) * (-t / tau).exp()
}

/// Seconds until the room first reaches `target` under constant input, or
/// `None` when the target is not reachable (at or beyond the equilibrium
/// temperature, or on the wrong side of it).
pub fn time_to_target(
    params: &ThermalParams,
    t0: f64,
    target: f64,
    input: &HeatInput,
    t_out: f64,
) -> Option<f64> {
    if target == t0 {
        return Some(0.0);
    }
    let t_inf = equilibrium_temp(params, input, t_out);
    let toward = t_inf - t0;
    let gap = target - t0;
    // Reachable only strictly between t0 and the asymptote.
    if toward == 0.0 || gap.signum() != toward.signum() || gap.abs() >= toward.abs() {
        return None;
    }
    let tau = time_constant(params, input);
    Some(tau * ((t0 - t_inf) / (target - t_inf)).ln())
}

/// Energy of a `(power W, duration s)` schedule in kWh.
pub fn energy_of_schedule(schedule: &[(f64, f64)]) -> f64 {
    schedule.iter().map(|(p, d)| p * d).sum::<f64>() / J_PER_KWH
}
