//! Safety checks that turn a desired action into the applied action.
//!
//! The chain runs in a fixed order: fold the joint PD into a torque, damp
//! over-speed joints, push joints outside their limits back with a PD, clip
//! to the torque limit. Clipping last makes `|τ| <= max_torque` hold for
//! every input. Collisions are not checked.
//!
//! The numbers in [`SafetyConfig::default`] are simulation defaults, not
//! measured hardware limits.

use serde::{Deserialize, Serialize};

use crate::types::{JointVector, PdGains, TriFingerAction, TriFingerObservation, NUM_JOINTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SafetyConfig {
    /// N·m per joint.
    pub max_torque: f64,
    /// rad/s; damping engages above this speed.
    pub max_velocity: f64,
    /// N·m·s/rad; zero disables the velocity check.
    pub velocity_damping_gain: f64,
    pub position_lower: [f64; NUM_JOINTS],
    pub position_upper: [f64; NUM_JOINTS],
    /// Gains of the PD that pushes a joint back into its range.
    pub limit_pd: PdGains,
    /// Gains used for actions that carry a position target without gains.
    pub default_position_gains: PdGains,
    /// Seconds without a command after which the motors are switched off.
    pub driver_timeout: f64,
}

const LOWER: [f64; 3] = [-1.6, -1.6, -2.7];
const UPPER: [f64; 3] = [1.6, 1.6, 2.7];

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            max_torque: 0.36,
            max_velocity: 10.0,
            velocity_damping_gain: 0.05,
            position_lower: std::array::from_fn(|i| LOWER[i % 3]),
            position_upper: std::array::from_fn(|i| UPPER[i % 3]),
            limit_pd: PdGains { kp: 2.0, kd: 0.05 },
            default_position_gains: PdGains::default(),
            driver_timeout: 0.1,
        }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.max_torque > 0.0) {
            return Err(format!("max_torque must be positive, got {}", self.max_torque));
        }
        if !(self.max_velocity >= 0.0) || !(self.velocity_damping_gain >= 0.0) {
            return Err("max_velocity and velocity_damping_gain must be non-negative".into());
        }
        for j in 0..NUM_JOINTS {
            if !(self.position_lower[j] < self.position_upper[j]) {
                return Err(format!("position limits of joint {j} are not ordered"));
            }
        }
        if !(self.driver_timeout > 0.0) {
            return Err("driver_timeout must be positive".into());
        }
        Ok(())
    }
}

/// Clamps every component to `[-max_torque, max_torque]`. A NaN component
/// becomes zero.
pub fn clip_torque(tau: &JointVector, cfg: &SafetyConfig) -> JointVector {
    tau.map(|x| if x.is_nan() { 0.0 } else { x.clamp(-cfg.max_torque, cfg.max_torque) })
}

/// Simulated joint damping for joints faster than `max_velocity`.
///
/// On such a joint the torque along the direction of motion is capped at
/// `-velocity_damping_gain * |v|`, so the joint is always braked with at
/// least the damping torque and never driven further. The cap form keeps the
/// whole chain idempotent. Slower joints pass unchanged, as does everything
/// when the gain is zero.
pub fn velocity_damping(
    tau: &JointVector,
    obs: &TriFingerObservation,
    cfg: &SafetyConfig,
) -> JointVector {
    if cfg.velocity_damping_gain == 0.0 {
        return *tau;
    }
    JointVector::from_fn(|j, _| {
        let v = obs.velocity[j];
        let damping = -cfg.velocity_damping_gain * v;
        if v > cfg.max_velocity {
            tau[j].min(damping)
        } else if v < -cfg.max_velocity {
            tau[j].max(damping)
        } else {
            tau[j]
        }
    })
}

/// Replaces the torque of joints outside their position range by a PD
/// toward the nearest limit.
pub fn position_limit_pd(
    tau: &JointVector,
    obs: &TriFingerObservation,
    cfg: &SafetyConfig,
) -> JointVector {
    JointVector::from_fn(|j, _| {
        let q = obs.position[j];
        let limit = if q > cfg.position_upper[j] {
            cfg.position_upper[j]
        } else if q < cfg.position_lower[j] {
            cfg.position_lower[j]
        } else {
            return tau[j];
        };
        cfg.limit_pd.kp * (limit - q) - cfg.limit_pd.kd * obs.velocity[j]
    })
}

/// Full desired-to-applied transformation. The result is a pure torque
/// action since the position feedback has been folded in.
pub fn safety_chain(
    action: &TriFingerAction,
    obs: &TriFingerObservation,
    cfg: &SafetyConfig,
) -> TriFingerAction {
    let tau = action.effective_torque(obs, &cfg.default_position_gains);
    let tau = velocity_damping(&tau, obs, cfg);
    let tau = position_limit_pd(&tau, obs, cfg);
    TriFingerAction::from_torque(clip_torque(&tau, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WatchdogState {
    Alive,
    ShutDown,
}

/// Motor-board timeout: trips when the gap since the last command strictly
/// exceeds `driver_timeout`.
pub fn driver_watchdog(last_command_time: f64, now: f64, cfg: &SafetyConfig) -> WatchdogState {
    if now - last_command_time > cfg.driver_timeout {
        WatchdogState::ShutDown
    } else {
        WatchdogState::Alive
    }
}
