//! Step/reset environments on top of a robot front-end.
//!
//! Because an action appended at `t` only takes effect after the observation
//! `y_t` was taken, `y_t` alone is not a Markov state. The three mappings
//! offered here handle that differently:
//!
//! * [`step_augmented`]: state `(y_t, a_t)`.
//! * [`step_augmented_reduced`]: the action is appended `k` times and the
//!   state is `(y, a)` with `y` taken at the first of the `k` indices.
//! * [`step_approximate`]: the action is appended `k` times and the state is
//!   the observation at the last index, ignoring the one-cycle lag.
//!
//! [`ReachEnv`] is the fingertip reaching task built on the approximate
//! mapping.

use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kinematics::{IkParams, TriFingerGeometry};
use crate::robot::logger::format_float;
use crate::robot::{BackendConfig, BackendExit, RobotError, RobotFrontend};
use crate::safety::SafetyConfig;
use crate::sim::{SimParams, SimRobot};
use crate::timeseries::TimeIndex;
use crate::types::{JointVector, TriFingerAction, TriFingerObservation, NUM_FINGERS};

/// What the step functions need from a robot.
pub trait RobotInterface<A, O> {
    fn append_desired_action(&self, a: A) -> Result<TimeIndex, RobotError>;
    fn get_observation(&self, t: TimeIndex) -> Result<O, RobotError>;
}

impl<A: Clone, O: Clone> RobotInterface<A, O> for RobotFrontend<A, O> {
    fn append_desired_action(&self, a: A) -> Result<TimeIndex, RobotError> {
        RobotFrontend::append_desired_action(self, a)
    }

    fn get_observation(&self, t: TimeIndex) -> Result<O, RobotError> {
        RobotFrontend::get_observation(self, t)
    }
}

impl RobotInterface<TriFingerAction, TriFingerObservation> for SimRobot {
    fn append_desired_action(&self, a: TriFingerAction) -> Result<TimeIndex, RobotError> {
        SimRobot::append_desired_action(self, a)
    }

    fn get_observation(&self, t: TimeIndex) -> Result<TriFingerObservation, RobotError> {
        SimRobot::get_observation(self, t)
    }
}

/// State `s_{t+1} = (y_t, a_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState<A, O> {
    pub observation: O,
    pub action: A,
}

/// Indices touched by one environment step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepIndices {
    pub first: TimeIndex,
    pub last: TimeIndex,
    /// Index the returned observation belongs to.
    pub observation: TimeIndex,
}

fn append_k<A: Clone, O, R: RobotInterface<A, O> + ?Sized>(
    robot: &R,
    a: &A,
    k: usize,
) -> Result<(TimeIndex, TimeIndex), RobotError> {
    assert!(k >= 1, "rate reduction factor must be at least 1");
    let first = robot.append_desired_action(a.clone())?;
    let mut last = first;
    for _ in 1..k {
        last = robot.append_desired_action(a.clone())?;
    }
    Ok((first, last))
}

pub fn step_augmented<A: Clone, O, R: RobotInterface<A, O> + ?Sized>(
    robot: &R,
    a: A,
) -> Result<(AugmentedState<A, O>, StepIndices), RobotError> {
    step_augmented_reduced(robot, a, 1)
}

/// Appends `a` `k` times; the observation is the one at the first index.
pub fn step_augmented_reduced<A: Clone, O, R: RobotInterface<A, O> + ?Sized>(
    robot: &R,
    a: A,
    k: usize,
) -> Result<(AugmentedState<A, O>, StepIndices), RobotError> {
    let (first, last) = append_k(robot, &a, k)?;
    let observation = robot.get_observation(first)?;
    Ok((AugmentedState { observation, action: a }, StepIndices { first, last, observation: first }))
}

/// Appends `a` `k` times; the state is the observation at the last index.
pub fn step_approximate<A: Clone, O, R: RobotInterface<A, O> + ?Sized>(
    robot: &R,
    a: A,
    k: usize,
) -> Result<(O, StepIndices), RobotError> {
    let (first, last) = append_k(robot, &a, k)?;
    let observation = robot.get_observation(last)?;
    Ok((observation, StepIndices { first, last, observation: last }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub state: S,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    pub indices: Option<StepIndices>,
    /// Set when the robot shut down; the episode is over.
    pub shutdown: Option<String>,
    /// Per-finger tip-to-target distance at the end of a reaching episode.
    pub final_errors: Option<[f64; NUM_FINGERS]>,
}

fn terminated<S>(state: S, err: RobotError) -> StepResult<S> {
    let message = match err {
        RobotError::Shutdown(msg) => msg,
        other => other.to_string(),
    };
    StepResult { state, reward: 0.0, done: true, info: StepInfo { shutdown: Some(message), ..Default::default() } }
}

/// Environment with the augmented state, at full (`k = 1`) or reduced rate.
pub struct AugmentedEnv<A, O, R, F> {
    pub robot: R,
    pub k: usize,
    reward: F,
    last: Option<AugmentedState<A, O>>,
}

impl<A, O, R, F> AugmentedEnv<A, O, R, F>
where
    A: Clone,
    O: Clone,
    R: RobotInterface<A, O>,
    F: FnMut(&AugmentedState<A, O>) -> f64,
{
    pub fn new(robot: R, k: usize, reward: F) -> Self {
        assert!(k >= 1, "rate reduction factor must be at least 1");
        Self { robot, k, reward, last: None }
    }

    /// On shutdown the returned state repeats the last one (or carries the
    /// input action with `fallback` as observation on the first step).
    pub fn step(&mut self, a: A, fallback: O) -> StepResult<AugmentedState<A, O>> {
        match step_augmented_reduced(&self.robot, a.clone(), self.k) {
            Ok((state, indices)) => {
                let reward = (self.reward)(&state);
                self.last = Some(state.clone());
                StepResult { state, reward, done: false, info: StepInfo { indices: Some(indices), ..Default::default() } }
            }
            Err(e) => {
                let state = self.last.clone().unwrap_or(AugmentedState { observation: fallback, action: a });
                terminated(state, e)
            }
        }
    }
}

/// Environment whose state is the raw observation.
pub struct ApproximateEnv<R, F> {
    pub robot: R,
    pub k: usize,
    reward: F,
}

impl<R, F> ApproximateEnv<R, F> {
    pub fn new(robot: R, k: usize, reward: F) -> Self {
        assert!(k >= 1, "rate reduction factor must be at least 1");
        Self { robot, k, reward }
    }

    pub fn step<A, O>(&mut self, a: A, fallback: O) -> StepResult<O>
    where
        A: Clone,
        R: RobotInterface<A, O>,
        F: FnMut(&O, &A) -> f64,
    {
        match step_approximate(&self.robot, a.clone(), self.k) {
            Ok((obs, indices)) => {
                let reward = (self.reward)(&obs, &a);
                StepResult { state: obs, reward, done: false, info: StepInfo { indices: Some(indices), ..Default::default() } }
            }
            Err(e) => terminated(fallback, e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReachTaskSpec {
    /// s
    pub episode_length: f64,
    /// Robot cycles per environment step.
    pub k: usize,
    /// Center of the target box in each finger's base frame, m.
    pub target_center: [f64; 3],
    /// Half edge of the cubic target box, m.
    pub target_half_extent: f64,
}

impl Default for ReachTaskSpec {
    fn default() -> Self {
        Self { episode_length: 2.0, k: 10, target_center: [0.08, 0.0, -0.16], target_half_extent: 0.05 }
    }
}

impl ReachTaskSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.episode_length > 0.0) {
            return Err("episode_length must be positive".into());
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(self.target_half_extent >= 0.0) {
            return Err("target_half_extent must be non-negative".into());
        }
        Ok(())
    }

    /// Environment steps per episode, `episode_length / (k·delta)`. Fails
    /// unless that is a whole number.
    pub fn steps_per_episode(&self, delta: f64) -> Result<usize, String> {
        let exact = self.episode_length / (self.k as f64 * delta);
        let steps = exact.round();
        if steps < 1.0 || (exact - steps).abs() > 1e-9 * steps {
            return Err(format!(
                "episode_length {} is not a whole number of {}-cycle steps of {} s",
                self.episode_length, self.k, delta
            ));
        }
        Ok(steps as usize)
    }

    /// Checks that the whole target box of every finger lies in its
    /// workspace shell `[|l1 - l2|, l1 + l2]`.
    pub fn check_reachable(&self, geometry: &TriFingerGeometry) -> Result<(), String> {
        let c = Vector3::from(self.target_center);
        let h = self.target_half_extent;
        for f in &geometry.fingers {
            let (l1, l2) = f.link_lengths;
            let far = (c.abs() + Vector3::repeat(h)).norm();
            let near = (0..3).map(|i| (c[i].abs() - h).max(0.0)).map(|d| d * d).sum::<f64>().sqrt();
            if far > l1 + l2 || near < (l1 - l2).abs() {
                return Err("target box leaves the finger workspace".into());
            }
        }
        Ok(())
    }
}

/// Observation of the reaching task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachObservation {
    pub position: JointVector,
    pub velocity: JointVector,
    /// World-frame targets, one per finger.
    pub targets: [Vector3<f64>; NUM_FINGERS],
}

impl ReachObservation {
    pub const DIM: usize = 2 * crate::types::NUM_JOINTS + 3 * NUM_FINGERS;

    pub fn to_vec(&self) -> Vec<f64> {
        self.position
            .iter()
            .chain(self.velocity.iter())
            .chain(self.targets.iter().flat_map(|t| t.iter()))
            .copied()
            .collect()
    }
}

/// World fingertip positions for joint positions `q`.
pub fn fingertips(geometry: &TriFingerGeometry, q: &JointVector) -> [Vector3<f64>; NUM_FINGERS] {
    std::array::from_fn(|i| geometry.fingers[i].forward_kinematics(&q.fixed_rows::<3>(3 * i).into_owned()))
}

/// Per-finger tip-to-target distances.
pub fn tip_errors(geometry: &TriFingerGeometry, q: &JointVector, targets: &[Vector3<f64>; NUM_FINGERS]) -> [f64; NUM_FINGERS] {
    let tips = fingertips(geometry, q);
    std::array::from_fn(|i| (tips[i] - targets[i]).norm())
}

/// Negative sum of fingertip-to-target distances.
pub fn reach_reward(geometry: &TriFingerGeometry, q: &JointVector, targets: &[Vector3<f64>; NUM_FINGERS]) -> f64 {
    -tip_errors(geometry, q, targets).iter().sum::<f64>()
}

/// Joint configuration placing each fingertip on its target, found by IK
/// from `q_start`.
pub fn ik_configuration(
    geometry: &TriFingerGeometry,
    targets: &[Vector3<f64>; NUM_FINGERS],
    q_start: &JointVector,
    params: &IkParams,
) -> JointVector {
    let mut q = JointVector::zeros();
    for (i, finger) in geometry.fingers.iter().enumerate() {
        let sol = finger.inverse_kinematics(&targets[i], &q_start.fixed_rows::<3>(3 * i).into_owned(), params);
        q.fixed_rows_mut::<3>(3 * i).copy_from(&sol.q);
    }
    q
}

/// Starting guess for IK: upper link level, elbow bent 0.5 rad, tip in
/// front of and below the shoulder.
pub fn ik_seed() -> JointVector {
    JointVector::from_fn(|i, _| [0.0, 0.0, 0.5][i % 3])
}

/// Everything needed to build the simulated robot of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSetup {
    pub geometry: TriFingerGeometry,
    pub sim: SimParams,
    pub safety: SafetyConfig,
    pub backend: BackendConfig,
}

impl RobotSetup {
    pub fn start(&self, initial_q: JointVector) -> SimRobot {
        SimRobot::start(self.geometry, self.sim.clone(), self.safety.clone(), self.backend.clone(), initial_q)
    }
}

/// Fingertip reaching: every finger should bring its tip to a random target.
/// Actions are desired joint positions tracked by the driver's joint PD.
pub struct ReachEnv {
    pub setup: RobotSetup,
    pub spec: ReachTaskSpec,
    pub ik: IkParams,
    rng: ChaCha8Rng,
    robot: Option<SimRobot>,
    targets: [Vector3<f64>; NUM_FINGERS],
    home: JointVector,
    steps: usize,
    steps_per_episode: usize,
    last: Option<ReachObservation>,
}

impl ReachEnv {
    pub fn new(setup: RobotSetup, spec: ReachTaskSpec, ik: IkParams, seed: u64) -> Result<Self, String> {
        spec.validate()?;
        spec.check_reachable(&setup.geometry)?;
        let steps_per_episode = spec.steps_per_episode(setup.backend.delta)?;
        let center = Vector3::from(spec.target_center);
        let home_tips = std::array::from_fn(|i| setup.geometry.fingers[i].base * nalgebra::Point3::from(center)).map(|p| p.coords);
        let home = ik_configuration(&setup.geometry, &home_tips, &ik_seed(), &ik);
        if tip_errors(&setup.geometry, &home, &home_tips).iter().any(|e| *e > 1e-4) {
            return Err("IK does not reach the target box center".into());
        }
        if (0..crate::types::NUM_JOINTS)
            .any(|j| home[j] < setup.safety.position_lower[j] || home[j] > setup.safety.position_upper[j])
        {
            return Err("home configuration violates the joint limits".into());
        }
        Ok(Self {
            setup,
            spec,
            ik,
            rng: ChaCha8Rng::seed_from_u64(seed),
            robot: None,
            targets: home_tips,
            home,
            steps: 0,
            steps_per_episode,
            last: None,
        })
    }

    pub fn steps_per_episode(&self) -> usize {
        self.steps_per_episode
    }

    pub fn targets(&self) -> &[Vector3<f64>; NUM_FINGERS] {
        &self.targets
    }

    /// Joint configuration every episode starts from.
    pub fn home(&self) -> &JointVector {
        &self.home
    }

    fn sample_targets(&mut self) -> [Vector3<f64>; NUM_FINGERS] {
        let h = self.spec.target_half_extent;
        let center = Vector3::from(self.spec.target_center);
        let mut targets = [Vector3::zeros(); NUM_FINGERS];
        for (i, target) in targets.iter_mut().enumerate() {
            let offset = Vector3::from_fn(|_, _| if h > 0.0 { self.rng.random_range(-h..=h) } else { 0.0 });
            *target = (self.setup.geometry.fingers[i].base * nalgebra::Point3::from(center + offset)).coords;
        }
        targets
    }

    /// Ends the running episode, if any, and starts a new one.
    pub fn reset(&mut self) -> ReachObservation {
        self.close();
        self.targets = self.sample_targets();
        let robot = self.setup.start(self.home);
        let obs = ReachObservation {
            position: robot.initial_observation.position,
            velocity: robot.initial_observation.velocity,
            targets: self.targets,
        };
        self.robot = Some(robot);
        self.steps = 0;
        self.last = Some(obs);
        obs
    }

    /// Applies the desired joint configuration for `k` cycles.
    pub fn step(&mut self, desired_q: JointVector) -> StepResult<ReachObservation> {
        let robot = self.robot.as_ref().expect("reset() must be called before step()");
        let last = self.last.expect("episode started");
        if self.steps >= self.steps_per_episode {
            return StepResult { state: last, reward: 0.0, done: true, info: StepInfo::default() };
        }
        let action = TriFingerAction::from_position(desired_q);
        let (y, indices) = match step_approximate(robot, action, self.spec.k) {
            Ok(r) => r,
            Err(e) => return terminated(last, e),
        };
        self.steps += 1;
        let state = ReachObservation { position: y.position, velocity: y.velocity, targets: self.targets };
        self.last = Some(state);
        let errors = tip_errors(&self.setup.geometry, &y.position, &self.targets);
        let done = self.steps == self.steps_per_episode;
        StepResult {
            state,
            reward: -errors.iter().sum::<f64>(),
            done,
            info: StepInfo { indices: Some(indices), shutdown: None, final_errors: done.then_some(errors) },
        }
    }

    /// Stops the back-end of the current episode.
    pub fn close(&mut self) -> Option<BackendExit> {
        self.robot.take().map(SimRobot::stop)
    }

    /// Completed back-end cycles of the running episode.
    pub fn completed_cycles(&self) -> usize {
        self.robot.as_ref().map_or(0, |r| r.frontend.data().completed_cycles())
    }
}

impl Drop for ReachEnv {
    fn drop(&mut self) {
        self.close();
    }
}

/// The scripted policy: IK of the targets, warm-started at the current
/// joint positions.
pub fn scripted_reach_action(geometry: &TriFingerGeometry, obs: &ReachObservation, ik: &IkParams) -> JointVector {
    ik_configuration(geometry, &obs.targets, &obs.position, ik)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub mean_reward: f64,
    pub final_errors: [f64; NUM_FINGERS],
}

impl EpisodeSummary {
    pub fn mean_final_error(&self) -> f64 {
        self.final_errors.iter().sum::<f64>() / NUM_FINGERS as f64
    }
}

/// Runs one episode with the scripted IK policy.
pub fn run_scripted_episode(env: &mut ReachEnv, episode: usize) -> Result<EpisodeSummary, String> {
    let mut obs = env.reset();
    let mut total = 0.0;
    let mut n = 0usize;
    loop {
        let action = scripted_reach_action(&env.setup.geometry, &obs, &env.ik);
        let r = env.step(action);
        if let Some(msg) = r.info.shutdown {
            return Err(msg);
        }
        total += r.reward;
        n += 1;
        obs = r.state;
        if r.done {
            let final_errors = r.info.final_errors.expect("final step reports errors");
            return Ok(EpisodeSummary { episode, mean_reward: total / n as f64, final_errors });
        }
    }
}

pub fn write_episode_summaries<W: Write>(writer: W, rows: &[EpisodeSummary]) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["episode", "mean_reward", "final_error_0", "final_error_1", "final_error_2", "mean_final_error"])?;
    for row in rows {
        let mut fields = vec![row.episode.to_string(), format_float(row.mean_reward)];
        fields.extend(row.final_errors.iter().map(|e| format_float(*e)));
        fields.push(format_float(row.mean_final_error()));
        csv.write_record(&fields)?;
    }
    csv.flush()?;
    Ok(())
}
