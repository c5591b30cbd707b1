//! Kinematics of a 3-DoF finger and the three-finger arrangement.
//!
//! Joint convention, in the finger's base frame (z up, x toward the
//! platform center):
//!
//! ```text
//!        base (shoulder)                 q0: yaw about base z
//!   z      o===== l1 =====o              q1: pitch about y at the shoulder
//!   ^      ^             ||              q2: pitch about y at the elbow
//!   |     yaw            l2
//!   +--> x               ||
//!                         * tip
//! ```
//!
//! At `q = 0` the upper link points along +x and the lower link hangs
//! straight down, so the tip sits at `(l1, 0, -l2)` in the base frame.
//! Positive pitch rotates about +y (tilting +x downward).

use std::f64::consts::PI;

use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::types::NUM_FINGERS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerGeometry {
    /// Upper and lower link lengths, m.
    pub link_lengths: (f64, f64),
    /// Pose of the shoulder frame in the world.
    pub base: Isometry3<f64>,
}

/// Result of [`FingerGeometry::inverse_kinematics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub q: Vector3<f64>,
    pub reached: bool,
    pub iterations: usize,
    /// Final tip position error, m.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IkParams {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IkParams {
    fn default() -> Self {
        Self { damping: 1e-3, tolerance: 1e-5, max_iterations: 200 }
    }
}

impl FingerGeometry {
    pub fn new(l1: f64, l2: f64, base: Isometry3<f64>) -> Self {
        assert!(l1 > 0.0 && l2 > 0.0, "link lengths must be positive");
        Self { link_lengths: (l1, l2), base }
    }

    /// World position of the yaw/pitch joint intersection.
    pub fn shoulder(&self) -> Vector3<f64> {
        self.base.translation.vector
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.0 + self.link_lengths.1
    }

    /// Point at distance `a` along the upper link plus `b` along the lower
    /// link, in the base frame.
    fn chain_point_local(q: &Vector3<f64>, a: f64, b: f64) -> Vector3<f64> {
        let (s0, c0) = q[0].sin_cos();
        let (s1, c1) = q[1].sin_cos();
        let (s12, c12) = (q[1] + q[2]).sin_cos();
        let radial = a * c1 - b * s12;
        Vector3::new(radial * c0, radial * s0, -a * s1 - b * c12)
    }

    fn chain_jacobian_local(q: &Vector3<f64>, a: f64, b: f64) -> Matrix3<f64> {
        let (s0, c0) = q[0].sin_cos();
        let (s1, c1) = q[1].sin_cos();
        let (s12, c12) = (q[1] + q[2]).sin_cos();
        let radial = a * c1 - b * s12;
        let dr1 = -a * s1 - b * c12;
        let dz1 = -a * c1 + b * s12;
        let dr2 = -b * c12;
        let dz2 = b * s12;
        Matrix3::new(
            -radial * s0, dr1 * c0, dr2 * c0,
            radial * c0, dr1 * s0, dr2 * s0,
            0.0, dz1, dz2,
        )
    }

    /// World-frame fingertip position.
    pub fn forward_kinematics(&self, q: &Vector3<f64>) -> Vector3<f64> {
        let (l1, l2) = self.link_lengths;
        self.world_point(Self::chain_point_local(q, l1, l2))
    }

    /// ∂tip/∂q in the world frame, m/rad.
    pub fn jacobian(&self, q: &Vector3<f64>) -> Matrix3<f64> {
        let (l1, l2) = self.link_lengths;
        self.base.rotation.to_rotation_matrix().matrix() * Self::chain_jacobian_local(q, l1, l2)
    }

    /// World positions of the two link midpoints.
    pub fn link_midpoints(&self, q: &Vector3<f64>) -> [Vector3<f64>; 2] {
        let (l1, l2) = self.link_lengths;
        [
            self.world_point(Self::chain_point_local(q, 0.5 * l1, 0.0)),
            self.world_point(Self::chain_point_local(q, l1, 0.5 * l2)),
        ]
    }

    fn world_point(&self, local: Vector3<f64>) -> Vector3<f64> {
        self.base.transform_point(&local.into()).coords
    }

    /// Potential energy of point masses at the link midpoints, J.
    pub fn potential_energy(&self, q: &Vector3<f64>, masses: (f64, f64), gravity: &Vector3<f64>) -> f64 {
        let [m1, m2] = self.link_midpoints(q);
        -(masses.0 * gravity.dot(&m1) + masses.1 * gravity.dot(&m2))
    }

    /// Gradient of [`potential_energy`](Self::potential_energy): the joint
    /// torque gravity exerts is its negative.
    pub fn gravity_torque(&self, q: &Vector3<f64>, masses: (f64, f64), gravity: &Vector3<f64>) -> Vector3<f64> {
        let (l1, l2) = self.link_lengths;
        let rot = self.base.rotation.to_rotation_matrix();
        let j1 = rot.matrix() * Self::chain_jacobian_local(q, 0.5 * l1, 0.0);
        let j2 = rot.matrix() * Self::chain_jacobian_local(q, l1, 0.5 * l2);
        -(j1.transpose() * gravity * masses.0 + j2.transpose() * gravity * masses.1)
    }

    /// Damped least-squares IK starting from `q0`.
    ///
    /// Returns the best configuration seen; `reached` is set once the tip
    /// error drops below the tolerance.
    pub fn inverse_kinematics(&self, target: &Vector3<f64>, q0: &Vector3<f64>, params: &IkParams) -> IkSolution {
        let lambda2 = params.damping * params.damping;
        let mut q = *q0;
        let mut best = IkSolution { q, reached: false, iterations: 0, residual: f64::INFINITY };
        for iteration in 0..=params.max_iterations {
            let err = target - self.forward_kinematics(&q);
            let residual = err.norm();
            if residual < best.residual {
                best = IkSolution { q, reached: false, iterations: iteration, residual };
            }
            if residual < params.tolerance {
                best.reached = true;
                return best;
            }
            if iteration == params.max_iterations {
                break;
            }
            let j = self.jacobian(&q);
            let jjt = j * j.transpose() + Matrix3::identity() * lambda2;
            let Some(step) = jjt.cholesky().map(|c| j.transpose() * c.solve(&err)) else {
                break;
            };
            q += step;
        }
        best
    }
}

/// Maps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI { PI } else { w }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Upper and lower link length, m.
    pub link_lengths: [f64; 2],
    /// Radius of the circle the three shoulders sit on, m.
    pub mount_radius: f64,
    /// Shoulder height above the table, m.
    pub mount_height: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { link_lengths: [0.16, 0.16], mount_radius: 0.15, mount_height: 0.30 }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.link_lengths[0] > 0.0 && self.link_lengths[1] > 0.0) {
            return Err("link lengths must be positive".into());
        }
        if !(self.mount_radius >= 0.0 && self.mount_height.is_finite()) {
            return Err("mount radius must be non-negative and height finite".into());
        }
        Ok(())
    }
}

/// Three identical fingers with shoulders at 0°, 120° and 240° on a circle,
/// each base frame's x-axis pointing at the circle center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriFingerGeometry {
    pub fingers: [FingerGeometry; NUM_FINGERS],
}

impl TriFingerGeometry {
    pub fn new(cfg: &GeometryConfig) -> Self {
        let [l1, l2] = cfg.link_lengths;
        let fingers = std::array::from_fn(|i| {
            let angle = 2.0 * PI * i as f64 / NUM_FINGERS as f64;
            let position = Vector3::new(
                cfg.mount_radius * angle.cos(),
                cfg.mount_radius * angle.sin(),
                cfg.mount_height,
            );
            let base = Isometry3::from_parts(
                Translation3::from(position),
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle + PI),
            );
            FingerGeometry::new(l1, l2, base)
        });
        Self { fingers }
    }

    /// Applies a rigid world transform to every finger base.
    pub fn transformed(&self, world: &Isometry3<f64>) -> Self {
        Self {
            fingers: self.fingers.map(|f| FingerGeometry { base: world * f.base, ..f }),
        }
    }
}

impl Default for TriFingerGeometry {
    fn default() -> Self {
        Self::new(&GeometryConfig::default())
    }
}
