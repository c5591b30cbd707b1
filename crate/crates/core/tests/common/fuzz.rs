//! NaN-free extreme inputs for the safety chain.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trifinger_core::safety::{safety_chain, SafetyConfig};
use trifinger_core::types::{JointVector, TriFingerAction, TriFingerObservation, NUM_JOINTS};

fn extreme(rng: &mut ChaCha8Rng) -> f64 {
    let magnitude = match rng.random_range(0..8) {
        0 => 0.0,
        1 => f64::MAX,
        2 => f64::INFINITY,
        3 => f64::MIN_POSITIVE,
        4 => 10f64.powf(rng.random_range(-300.0..300.0)),
        _ => rng.random_range(0.0..5.0),
    };
    if rng.random() { magnitude } else { -magnitude }
}

fn vector(rng: &mut ChaCha8Rng) -> JointVector {
    JointVector::from_fn(|_, _| extreme(rng))
}

pub fn action(rng: &mut ChaCha8Rng) -> TriFingerAction {
    let mut a = TriFingerAction::from_torque(vector(rng));
    if rng.random() {
        a.position = Some(vector(rng));
        if rng.random() {
            a.position_kp = Some(vector(rng));
            a.position_kd = Some(vector(rng));
        }
    }
    a
}

pub fn observation(rng: &mut ChaCha8Rng) -> TriFingerObservation {
    // Half the samples stay near the working range so every branch of the
    // chain is exercised.
    if rng.random() {
        TriFingerObservation {
            position: JointVector::from_fn(|_, _| rng.random_range(-3.5..3.5)),
            velocity: JointVector::from_fn(|_, _| rng.random_range(-20.0..20.0)),
            torque: JointVector::zeros(),
        }
    } else {
        TriFingerObservation { position: vector(rng), velocity: vector(rng), torque: vector(rng) }
    }
}

/// The applied action is pure torque within the bound, and applying the
/// chain again changes nothing.
pub fn check_chain(a: &TriFingerAction, y: &TriFingerObservation, cfg: &SafetyConfig) -> Result<(), String> {
    let out = safety_chain(a, y, cfg);
    if out.position.is_some() || out.position_kp.is_some() || out.position_kd.is_some() {
        return Err("applied action is not pure torque".into());
    }
    if let Some(j) = (0..NUM_JOINTS).find(|&j| !(out.torque[j].abs() <= cfg.max_torque)) {
        return Err(format!("joint {j} torque {} exceeds the bound", out.torque[j]));
    }
    if safety_chain(&out, y, cfg) != out {
        return Err("chain is not idempotent".into());
    }
    Ok(())
}
