//! Joint-level simulation of the three-finger robot behind the driver
//! contract.
//!
//! Each joint is an independent inertia with viscous friction, driven by the
//! applied torque, optional gravity from point masses at the link midpoints
//! and optional external fingertip forces. Integration is semi-implicit
//! Euler: velocity first, then position with the new velocity.

use std::sync::{Arc, Mutex};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SimClock};
use crate::kinematics::TriFingerGeometry;
use crate::robot::{
    Backend, BackendConfig, BackendExit, ControlMode, DriverError, RobotData, RobotDriver, RobotError, RobotFrontend,
};
use crate::timeseries::TimeIndex;
use crate::safety::{driver_watchdog, safety_chain, SafetyConfig, WatchdogState};
use crate::types::{JointVector, TriFingerAction, TriFingerObservation, NUM_FINGERS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// kg·m² per joint.
    pub joint_inertia: f64,
    /// N·m·s/rad per joint.
    pub joint_viscous_damping: f64,
    pub gravity_enabled: bool,
    /// Point masses at the upper and lower link midpoints, kg.
    pub link_masses: [f64; 2],
    /// World gravity, m/s².
    pub gravity: [f64; 3],
    /// Integration step, s.
    pub delta: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            joint_inertia: 0.004,
            joint_viscous_damping: 0.01,
            gravity_enabled: true,
            link_masses: [0.02, 0.02],
            gravity: [0.0, 0.0, -9.81],
            delta: 1e-3,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.joint_inertia > 0.0) {
            return Err("joint_inertia must be positive".into());
        }
        if !(self.delta > 0.0) {
            return Err("sim delta must be positive".into());
        }
        if !(self.joint_viscous_damping >= 0.0) || self.link_masses.iter().any(|m| !(*m >= 0.0)) {
            return Err("damping and link masses must be non-negative".into());
        }
        Ok(())
    }

    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimJointState {
    pub q: JointVector,
    pub qdot: JointVector,
    pub last_torque: JointVector,
}

/// Forces (world frame, N) acting on each fingertip from the environment.
/// Shared with the experiment harness, which writes them before appending
/// the action they belong to.
pub type ExternalTipForces = Arc<Mutex<[Vector3<f64>; NUM_FINGERS]>>;

struct Watchdog {
    clock: Arc<dyn Clock>,
    last_command: f64,
}

pub struct SimDriver {
    geometry: TriFingerGeometry,
    params: SimParams,
    safety: SafetyConfig,
    state: SimJointState,
    external: ExternalTipForces,
    watchdog: Option<Watchdog>,
    /// Clock moved to `t * delta` at the start of cycle `t`, and the count.
    ticking: Option<(Arc<SimClock>, usize)>,
    motors_off: bool,
    notice: Option<String>,
}

impl SimDriver {
    pub fn new(
        geometry: TriFingerGeometry,
        params: SimParams,
        safety: SafetyConfig,
        initial_q: JointVector,
    ) -> Self {
        Self {
            geometry,
            params,
            safety,
            state: SimJointState { q: initial_q, ..Default::default() },
            external: Arc::new(Mutex::new([Vector3::zeros(); NUM_FINGERS])),
            watchdog: None,
            ticking: None,
            motors_off: false,
            notice: None,
        }
    }

    /// Enables the motor-board timeout, measured on `clock`.
    pub fn with_watchdog(mut self, clock: Arc<dyn Clock>) -> Self {
        let last_command = clock.now();
        self.watchdog = Some(Watchdog { clock, last_command });
        self
    }

    /// Makes the driver the time source: `clock` jumps to `t * delta` when
    /// action `t` is applied. For back-ends that do not pace on the clock.
    pub fn with_ticking(mut self, clock: Arc<SimClock>) -> Self {
        self.ticking = Some((clock, 0));
        self
    }

    pub fn external_forces(&self) -> ExternalTipForces {
        self.external.clone()
    }

    pub fn state(&self) -> &SimJointState {
        &self.state
    }

    pub fn motors_off(&self) -> bool {
        self.motors_off
    }

    pub fn gravity_torque(&self) -> JointVector {
        let mut g = JointVector::zeros();
        if !self.params.gravity_enabled {
            return g;
        }
        let masses = (self.params.link_masses[0], self.params.link_masses[1]);
        let gravity = self.params.gravity_vector();
        for (f, finger) in self.geometry.fingers.iter().enumerate() {
            let q = self.state.q.fixed_rows::<3>(3 * f).into_owned();
            g.fixed_rows_mut::<3>(3 * f)
                .copy_from(&finger.gravity_torque(&q, masses, &gravity));
        }
        g
    }

    fn external_torque(&self) -> JointVector {
        let forces = *self.external.lock().unwrap_or_else(|e| e.into_inner());
        let mut tau = JointVector::zeros();
        for (f, finger) in self.geometry.fingers.iter().enumerate() {
            if forces[f] == Vector3::zeros() {
                continue;
            }
            let q = self.state.q.fixed_rows::<3>(3 * f).into_owned();
            tau.fixed_rows_mut::<3>(3 * f)
                .copy_from(&(finger.jacobian(&q).transpose() * forces[f]));
        }
        tau
    }

    /// Advances the joints by one step under `torque`.
    pub fn integrate(&mut self, torque: &JointVector) {
        let p = &self.params;
        let net = torque + self.external_torque()
            - self.state.qdot * p.joint_viscous_damping
            - self.gravity_torque();
        self.state.qdot += net * (p.delta / p.joint_inertia);
        self.state.q += self.state.qdot * p.delta;
        self.state.last_torque = *torque;
    }

    fn check_watchdog(&mut self) {
        let Some(wd) = self.watchdog.as_mut() else {
            return;
        };
        let now = wd.clock.now();
        if !self.motors_off
            && driver_watchdog(wd.last_command, now, &self.safety) == WatchdogState::ShutDown
        {
            self.motors_off = true;
        }
        wd.last_command = now;
    }
}

impl RobotDriver for SimDriver {
    type Action = TriFingerAction;
    type Observation = TriFingerObservation;

    fn get_latest_observation(&mut self) -> TriFingerObservation {
        TriFingerObservation {
            position: self.state.q,
            velocity: self.state.qdot,
            torque: self.state.last_torque,
        }
    }

    fn apply_action(&mut self, desired: &TriFingerAction) -> Result<TriFingerAction, DriverError> {
        if let Some((clock, cycle)) = self.ticking.as_mut() {
            clock.set_cycle(*cycle, self.params.delta);
            *cycle += 1;
        }
        self.check_watchdog();
        let applied = if self.motors_off {
            self.notice = Some("motor board timed out; motors off, coasting".into());
            TriFingerAction::default()
        } else {
            let obs = self.get_latest_observation();
            safety_chain(desired, &obs, &self.safety)
        };
        self.integrate(&applied.torque);
        if !self.state.q.iter().chain(self.state.qdot.iter()).all(|x| x.is_finite()) {
            return Err(DriverError("simulation diverged".into()));
        }
        Ok(applied)
    }

    fn take_notice(&mut self) -> Option<String> {
        self.notice.take()
    }

    fn shutdown(&mut self) {
        self.motors_off = true;
    }
}

/// Front-end plus a back-end over a [`SimDriver`] on a simulated clock.
///
/// In real-time mode each append moves the clock to the deadline of the new
/// action; in non-real-time mode the driver moves it as actions are applied.
/// Either way cycle `t` happens at `t * delta` and runs are deterministic.
pub struct SimRobot {
    pub frontend: RobotFrontend<TriFingerAction, TriFingerObservation>,
    pub clock: Arc<SimClock>,
    pub external: ExternalTipForces,
    /// State before the first action.
    pub initial_observation: TriFingerObservation,
    backend: Backend,
    delta: f64,
    lock_step: bool,
}

impl SimRobot {
    pub fn start(
        geometry: TriFingerGeometry,
        params: SimParams,
        safety: SafetyConfig,
        backend: BackendConfig,
        initial_q: JointVector,
    ) -> Self {
        let clock = Arc::new(SimClock::new());
        let lock_step = backend.mode == ControlMode::RealTime;
        let mut driver = SimDriver::new(geometry, params, safety, initial_q).with_watchdog(clock.clone());
        if !lock_step {
            driver = driver.with_ticking(clock.clone());
        }
        let initial_observation = driver.get_latest_observation();
        let external = driver.external_forces();
        let data = Arc::new(RobotData::new(backend.history_length, clock.clone()));
        let delta = backend.delta;
        let handle = Backend::spawn(driver, data.clone(), backend, clock.clone());
        Self { frontend: RobotFrontend::new(data), clock, external, initial_observation, backend: handle, delta, lock_step }
    }

    /// Appends `a`; in real-time mode also moves the clock to its deadline.
    pub fn append_desired_action(&self, a: TriFingerAction) -> Result<TimeIndex, RobotError> {
        let t = self.frontend.append_desired_action(a)?;
        if self.lock_step {
            self.clock.set_cycle(t, self.delta);
        }
        Ok(t)
    }

    pub fn get_observation(&self, t: TimeIndex) -> Result<TriFingerObservation, RobotError> {
        self.frontend.get_observation(t)
    }

    pub fn set_external_forces(&self, forces: [Vector3<f64>; NUM_FINGERS]) {
        *self.external.lock().unwrap_or_else(|e| e.into_inner()) = forces;
    }

    /// Stops the back-end after the appended actions were applied.
    pub fn stop(self) -> BackendExit {
        self.backend.stop()
    }
}
