mod common;

use std::cell::RefCell;

use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use trifinger_core::config::RunConfig;
use trifinger_core::env::*;
use trifinger_core::robot::{BackendConfig, RobotError};
use trifinger_core::timeseries::TimeIndex;
use trifinger_core::types::{TriFingerAction, TriFingerObservation};

/// Robot whose observation at `t` is `t` itself; records every append.
#[derive(Default)]
struct Recorder {
    appended: RefCell<Vec<i64>>,
    fail_after: Option<usize>,
}

impl RobotInterface<i64, TimeIndex> for Recorder {
    fn append_desired_action(&self, a: i64) -> Result<TimeIndex, RobotError> {
        let mut log = self.appended.borrow_mut();
        if self.fail_after.is_some_and(|n| log.len() >= n) {
            return Err(RobotError::Shutdown("stopped".into()));
        }
        log.push(a);
        Ok(log.len() - 1)
    }

    fn get_observation(&self, t: TimeIndex) -> Result<TimeIndex, RobotError> {
        Ok(t)
    }
}

proptest! {
    #[test]
    fn every_step_appends_its_action_k_times(k in 1usize..12, actions in prop::collection::vec(any::<i64>(), 1..20)) {
        let robot = Recorder::default();
        let mut env = AugmentedEnv::new(robot, k, |_: &AugmentedState<i64, TimeIndex>| 0.0);
        for (n, a) in actions.iter().enumerate() {
            let r = env.step(*a, 0);
            let idx = r.info.indices.unwrap();
            prop_assert_eq!(r.state.action, *a);
            prop_assert_eq!(idx.first, n * k);
            prop_assert_eq!(idx.last, n * k + k - 1);
            prop_assert_eq!(r.state.observation, idx.first);
        }
        let expected: Vec<i64> = actions.iter().flat_map(|a| std::iter::repeat_n(*a, k)).collect();
        prop_assert_eq!(&*env.robot.appended.borrow(), &expected);
    }

    #[test]
    fn approximate_state_is_the_last_observation(k in 1usize..12, steps in 1usize..20) {
        let mut env = ApproximateEnv::new(Recorder::default(), k, |_: &TimeIndex, _: &i64| 0.0);
        for n in 0..steps {
            let r = env.step(n as i64, 0);
            prop_assert_eq!(r.state, n * k + k - 1);
            prop_assert_eq!(r.info.indices.unwrap().observation, r.state);
        }
        prop_assert_eq!(env.robot.appended.borrow().len(), steps * k);
    }
}

#[test]
fn shutdown_ends_the_episode_with_the_last_state() {
    let robot = Recorder { fail_after: Some(6), ..Default::default() };
    let mut env = AugmentedEnv::new(robot, 3, |s: &AugmentedState<i64, TimeIndex>| s.action as f64);
    assert_eq!(env.step(4, 0).reward, 4.0);
    assert!(!env.step(5, 0).done);
    let r = env.step(6, 0);
    assert!(r.done);
    assert_eq!(r.reward, 0.0);
    assert_eq!(r.state, AugmentedState { observation: 3, action: 5 });
    assert!(r.info.shutdown.unwrap().contains("stopped"));

    let mut first = AugmentedEnv::new(Recorder { fail_after: Some(0), ..Default::default() }, 1, |_: &AugmentedState<i64, TimeIndex>| 1.0);
    assert_eq!(first.step(9, 77).state, AugmentedState { observation: 77, action: 9 });

    let mut approx = ApproximateEnv::new(Recorder { fail_after: Some(2), ..Default::default() }, 2, |_: &TimeIndex, _: &i64| 1.0);
    assert!(!approx.step(1, 0).done);
    let r = approx.step(1, 42);
    assert!(r.done && r.state == 42 && r.info.shutdown.is_some());
}

#[test]
fn augmented_state_on_the_simulated_robot() {
    let robot = common::robot::start(BackendConfig::default());
    let k = 4;
    let mut env = AugmentedEnv::new(robot, k, |_: &AugmentedState<TriFingerAction, TriFingerObservation>| 0.0);
    for n in 0..50 {
        let a = common::robot::tagged(n);
        let r = env.step(a, TriFingerObservation::default());
        assert_eq!(r.state.action, a);
        let idx = r.info.indices.unwrap();
        assert_eq!((idx.first, idx.last), (n * k, n * k + k - 1));
        assert_eq!(r.state.observation, env.robot.get_observation(idx.first).unwrap());
        for t in idx.first..=idx.last {
            assert_eq!(env.robot.frontend.get_desired_action(t).unwrap(), a);
        }
    }
    assert_eq!(env.robot.frontend.data().desired_actions.newest_index(), Some(50 * k - 1));
}

#[test]
fn full_rate_augmented_and_approximate_see_the_same_observations() {
    let a = common::robot::start(BackendConfig::default());
    let b = common::robot::start(BackendConfig::default());
    let mut aug = AugmentedEnv::new(a, 1, |_: &AugmentedState<TriFingerAction, TriFingerObservation>| 0.0);
    let mut approx = ApproximateEnv::new(b, 1, |_: &TriFingerObservation, _: &TriFingerAction| 0.0);
    let mut y = aug.robot.initial_observation;
    for t in 0..300 {
        let action = common::robot::policy(t, &y);
        let ra = aug.step(action, y);
        let rb = approx.step(action, y);
        assert_eq!(ra.state.observation, rb.state);
        y = rb.state;
    }
}

fn reach_env(seed: u64) -> ReachEnv {
    let cfg = RunConfig::default();
    ReachEnv::new(cfg.robot_setup(), cfg.env.clone(), cfg.control.ik, seed).unwrap()
}

#[test]
fn reach_observation_has_27_entries() {
    assert_eq!(ReachObservation::DIM, 27);
    let mut env = reach_env(0);
    let obs = env.reset();
    assert_eq!(obs.to_vec().len(), 27);
    let r = env.step(*env.home());
    assert_eq!(r.state.to_vec().len(), 27);
    assert_eq!(&r.state.to_vec()[18..21], env.targets()[0].as_slice());
}

#[test]
fn targets_are_sampled_in_each_fingers_box() {
    let mut env = reach_env(3);
    let center = Vector3::from(env.spec.target_center);
    let h = env.spec.target_half_extent;
    for _ in 0..100 {
        env.reset();
        for (i, target) in env.targets().iter().enumerate() {
            let local = env.setup.geometry.fingers[i].base.inverse() * Point3::from(*target);
            assert!((local.coords - center).amax() <= h + 1e-12);
        }
    }
}

#[test]
fn episodes_end_after_the_configured_number_of_steps() {
    let mut env = reach_env(1);
    let steps = env.steps_per_episode();
    assert_eq!(steps, 200);
    let obs = env.reset();
    let action = scripted_reach_action(&env.setup.geometry, &obs, &env.ik);
    for n in 1..=steps {
        let r = env.step(action);
        assert_eq!(r.done, n == steps);
        let errors = tip_errors(&env.setup.geometry, &r.state.position, env.targets());
        assert_eq!(r.reward, -errors.iter().sum::<f64>());
        assert_eq!(r.info.final_errors.is_some(), n == steps);
    }
    assert_eq!(env.completed_cycles(), steps * env.spec.k);
    let after = env.step(action);
    assert!(after.done);
    assert_eq!(after.info.indices, None);
}

#[test]
fn reset_returns_to_home_at_rest() {
    let mut env = reach_env(2);
    let _ = run_scripted_episode(&mut env, 0).unwrap();
    let obs = env.reset();
    assert_eq!(obs.position, *env.home());
    assert!(obs.velocity.iter().all(|v| *v == 0.0));
}

#[test]
fn replaying_a_seed_reproduces_the_episodes() {
    let run = |seed| {
        let mut env = reach_env(seed);
        let mut trace = Vec::new();
        for _ in 0..2 {
            let mut obs = env.reset();
            loop {
                let r = env.step(scripted_reach_action(&env.setup.geometry, &obs, &env.ik));
                trace.push((r.state.to_vec(), r.reward));
                obs = r.state;
                if r.done {
                    break;
                }
            }
        }
        trace
    };
    let first = run(11);
    assert_eq!(first, run(11));
    assert_ne!(first, run(12));
}

#[test]
fn empty_summary_is_only_a_header() {
    let mut out = Vec::new();
    write_episode_summaries(&mut out, &[]).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "episode,mean_reward,final_error_0,final_error_1,final_error_2,mean_final_error\n");
}
