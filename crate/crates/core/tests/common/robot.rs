//! Scripted user loops over the simulated robot.

use trifinger_core::kinematics::TriFingerGeometry;
use trifinger_core::robot::{BackendConfig, ControlMode, LateActionPolicy, StatusRecord};
use trifinger_core::safety::SafetyConfig;
use trifinger_core::sim::{SimParams, SimRobot};
use trifinger_core::types::{JointVector, TriFingerAction, TriFingerObservation};

pub fn start_q() -> JointVector {
    JointVector::from_fn(|i, _| [0.1, 0.5, -1.0][i % 3])
}

pub fn start(backend: BackendConfig) -> SimRobot {
    let backend = BackendConfig { history_length: backend.history_length.max(20_000), ..backend };
    SimRobot::start(TriFingerGeometry::default(), SimParams::default(), SafetyConfig::default(), backend, start_q())
}

/// Position target sweeping slowly around the start pose, with a small
/// feed-forward torque that depends on the last observation.
pub fn policy(t: usize, y: &TriFingerObservation) -> TriFingerAction {
    let s = t as f64 * 1e-3;
    let target = start_q() + JointVector::from_fn(|i, _| 0.2 * (s * (1.0 + 0.3 * i as f64)).sin());
    let mut a = TriFingerAction::from_position(target);
    a.torque = y.velocity * -0.01;
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histories {
    pub desired: Vec<TriFingerAction>,
    pub applied: Vec<TriFingerAction>,
    pub observations: Vec<TriFingerObservation>,
    pub status: Vec<StatusRecord>,
}

pub fn histories(robot: &SimRobot, n: usize) -> Histories {
    let f = &robot.frontend;
    Histories {
        desired: (0..n).map(|t| f.get_desired_action(t).unwrap()).collect(),
        applied: (0..n).map(|t| f.get_applied_action(t).unwrap()).collect(),
        observations: (0..n).map(|t| f.get_observation(t).unwrap()).collect(),
        status: (0..n).map(|t| f.get_status(t).unwrap()).collect(),
    }
}

/// The canonical user loop: append, wait for the matching observation,
/// compute the next action from it.
pub fn example_loop(mode: ControlMode, cycles: usize) -> Histories {
    let robot = start(BackendConfig { mode, ..BackendConfig::default() });
    let mut a = policy(0, &robot.initial_observation);
    for t in 0..cycles {
        let i = robot.append_desired_action(a).unwrap();
        assert_eq!(i, t);
        let y = robot.get_observation(i).unwrap();
        a = policy(t + 1, &y);
    }
    let h = histories(&robot, cycles);
    robot.stop();
    h
}

/// Torque-only action tagged by `t`, small enough to pass the safety chain
/// unchanged.
pub fn tagged(t: usize) -> TriFingerAction {
    TriFingerAction::from_torque(JointVector::from_fn(|i, _| 1e-4 * (t as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 }))
}

pub struct Stall {
    pub robot: SimRobot,
    /// Index of the first cycle without a user action.
    pub first_missed: usize,
}

/// Real-time run: `before` actions in lock-step, then the clock moves
/// `stalled` periods past the last deadline without a new action.
pub fn stall(policy: LateActionPolicy, max_missed: u32, before: usize, stalled: usize) -> Stall {
    assert!(before >= 1);
    let cfg = BackendConfig {
        mode: ControlMode::RealTime,
        max_missed_actions: max_missed,
        late_action_policy: policy,
        ..BackendConfig::default()
    };
    let delta = cfg.delta;
    let robot = start(cfg);
    for t in 0..before {
        robot.append_desired_action(tagged(t)).unwrap();
        robot.get_observation(t).unwrap();
    }
    robot.clock.set_cycle(before - 1 + stalled, delta);
    Stall { robot, first_missed: before }
}
