//! Forward kinematics by composing elementary rigid transforms.

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trifinger_core::kinematics::FingerGeometry;

pub fn tip(finger: &FingerGeometry, q: &Vector3<f64>) -> Vector3<f64> {
    let (l1, l2) = finger.link_lengths;
    let yaw = Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q[0]));
    let shoulder = Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::y_axis(), q[1]));
    let upper = Isometry3::translation(l1, 0.0, 0.0);
    let elbow = Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::y_axis(), q[2]));
    let lower = Isometry3::translation(0.0, 0.0, -l2);
    (finger.base * yaw * shoulder * upper * elbow * lower).translation.vector
}

/// Central-difference Jacobian of [`tip`].
pub fn numeric_jacobian(finger: &FingerGeometry, q: &Vector3<f64>, h: f64) -> nalgebra::Matrix3<f64> {
    let mut j = nalgebra::Matrix3::zeros();
    for k in 0..3 {
        let mut dq = Vector3::zeros();
        dq[k] = h;
        j.set_column(k, &((tip(finger, &(q + dq)) - tip(finger, &(q - dq))) / (2.0 * h)));
    }
    j
}

pub fn random_q(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Vector3<f64> {
    Vector3::from_fn(|i, _| rng.random_range(lower[i]..upper[i]))
}

/// Largest entry of `J - J_fd`, relative to the largest entry of `J_fd`.
pub fn jacobian_relative_error(finger: &FingerGeometry, q: &Vector3<f64>) -> f64 {
    let fd = numeric_jacobian(finger, q, 1e-6);
    (finger.jacobian(q) - fd).amax() / fd.amax().max(1e-12)
}

/// Largest `|τ·δq - F·(J δq)|` over `samples` random impedance commands,
/// with `F` the total tip force rebuilt from the composed-transform tip.
pub fn impedance_virtual_work_error(rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    let geometry = trifinger_core::kinematics::TriFingerGeometry::default();
    let gains = trifinger_core::control::TipGains::default();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let finger = &geometry.fingers[rng.random_range(0..3)];
        let q = random_q(rng, &[-1.6, -1.6, -2.7], &[1.6, 1.6, 2.7]);
        let qdot = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let force = Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0));
        let target = Vector3::from_fn(|_, _| rng.random_range(-0.2..0.2)) + Vector3::new(0.0, 0.0, 0.1);
        let target_vel = Vector3::from_fn(|_, _| rng.random_range(-0.5..0.5));
        let tau = trifinger_core::control::impedance_torques(finger, &q, &qdot, &force, &target, &target_vel, &gains);
        let j = finger.jacobian(&q);
        let total = force + (target - tip(finger, &q)) * gains.p + (target_vel - j * qdot) * gains.d;
        let dq = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        worst = worst.max((tau.dot(&dq) - total.dot(&(j * dq))).abs());
    }
    worst
}
