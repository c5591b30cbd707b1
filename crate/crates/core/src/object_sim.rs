//! Rigid cube pushed by the fingertip forces, for closing the loop of the
//! grasp experiments.
//!
//! The fingertips are assumed to stay attached to their contact points, so
//! the forces acting on the cube are exactly the commanded contact forces.
//! The table is a floor at `z = edge/2` under the center of mass that
//! removes downward velocity on contact.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::control::ObjectState;
use crate::types::NUM_FINGERS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CubeParams {
    /// kg
    pub mass: f64,
    /// m
    pub edge: f64,
    /// Friction coefficient between fingertips and cube.
    pub mu: f64,
    /// m/s²
    pub gravity: [f64; 3],
}

impl Default for CubeParams {
    fn default() -> Self {
        Self { mass: 0.1, edge: 0.065, mu: 1.0, gravity: [0.0, 0.0, -9.81] }
    }
}

impl CubeParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass > 0.0 && self.edge > 0.0) {
            return Err("cube mass and edge must be positive".into());
        }
        if !(self.mu > 0.0) {
            return Err("cube friction coefficient must be positive".into());
        }
        Ok(())
    }

    /// Principal moments of a solid cube, `m e² / 6` about every axis.
    pub fn inertia(&self) -> Vector3<f64> {
        Vector3::repeat(self.mass * self.edge * self.edge / 6.0)
    }

    /// Contact points at the +x, +y and -y face centers, object frame.
    pub fn contact_locations(&self) -> [Vector3<f64>; NUM_FINGERS] {
        let h = self.edge / 2.0;
        [Vector3::new(h, 0.0, 0.0), Vector3::new(0.0, h, 0.0), Vector3::new(0.0, -h, 0.0)]
    }

    pub fn table_height(&self) -> f64 {
        self.edge / 2.0
    }

    /// Cube at rest on the table with its center above `(x, y)`.
    pub fn resting_state(&self, x: f64, y: f64) -> ObjectState {
        ObjectState::at_rest(Vector3::new(x, y, self.table_height()), self.mass)
    }
}

/// One semi-implicit Euler step: twist first, then pose with the new twist.
/// `tip_forces` are world-frame forces applied at the contact points.
pub fn object_step(
    state: &ObjectState,
    tip_forces: &[Vector3<f64>; NUM_FINGERS],
    params: &CubeParams,
    dt: f64,
) -> ObjectState {
    assert!(dt > 0.0, "time step must be positive");
    let rot = state.orientation.to_rotation_matrix();
    let mut force = Vector3::from(params.gravity) * state.mass;
    let mut moment = Vector3::zeros();
    for (r, f) in params.contact_locations().iter().zip(tip_forces) {
        force += f;
        moment += (rot * r).cross(f);
    }

    let inertia = rot.matrix() * Matrix3::from_diagonal(&params.inertia()) * rot.matrix().transpose();
    let inv_inertia = inertia.try_inverse().expect("inertia is positive definite");
    let omega = state.angular_velocity;
    let gyroscopic = omega.cross(&(inertia * omega));

    let mut next = *state;
    next.velocity += force * (dt / state.mass);
    next.angular_velocity += inv_inertia * (moment - gyroscopic) * dt;
    next.position += next.velocity * dt;
    let turned = UnitQuaternion::from_scaled_axis(next.angular_velocity * dt) * state.orientation;
    next.orientation = UnitQuaternion::new_normalize(turned.into_inner());

    let floor = params.table_height();
    if next.position.z < floor {
        next.position.z = floor;
        next.velocity.z = next.velocity.z.max(0.0);
    }
    next
}
