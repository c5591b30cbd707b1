//! Object-level grasp control at the robot rate.
//!
//! Each cycle: a PD law on the object pose gives the wrench at the center of
//! mass, the wrench is rotated into the object frame and split over the
//! contacts by the force QP, and every finger tracks its contact point with
//! an impedance law carrying its share of the force.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::grasp::{distribute_forces_with, Contact, ContactSet, GraspError, QpSolution, QpSolver};
use crate::kinematics::{FingerGeometry, TriFingerGeometry};
use crate::types::{JointVector, TriFingerAction, TriFingerObservation, NUM_FINGERS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    /// Center of mass in the world, m.
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    /// World frame, rad/s.
    pub angular_velocity: Vector3<f64>,
    /// kg
    pub mass: f64,
}

impl ObjectState {
    pub fn at_rest(position: Vector3<f64>, mass: f64) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            angular_velocity: Vector3::zeros(),
            mass,
        }
    }

    /// World position of an object-frame point.
    pub fn world_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * local
    }
}

/// Desired object pose and twist at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl TrajectorySample {
    pub fn hold(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, velocity: Vector3::zeros(), orientation, angular_velocity: Vector3::zeros() }
    }

    /// Desired world position and velocity of an object-frame point.
    pub fn point(&self, local: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let arm = self.orientation * local;
        (self.position + arm, self.velocity + self.angular_velocity.cross(&arm))
    }
}

pub trait ObjectTrajectory {
    fn sample(&self, t: f64) -> TrajectorySample;
}

/// Minimum-jerk vertical move by `height` over `duration`, then hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftTrajectory {
    pub start: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub height: f64,
    pub duration: f64,
}

pub fn lift_trajectory(start: Vector3<f64>, height: f64, duration: f64) -> LiftTrajectory {
    assert!(height > 0.0 && duration > 0.0, "lift height and duration must be positive");
    LiftTrajectory { start, orientation: UnitQuaternion::identity(), height, duration }
}

impl ObjectTrajectory for LiftTrajectory {
    fn sample(&self, t: f64) -> TrajectorySample {
        let s = (t / self.duration).clamp(0.0, 1.0);
        let pos = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let vel = 30.0 * s * s * (1.0 - s) * (1.0 - s) / self.duration;
        TrajectorySample {
            position: self.start + Vector3::z() * (self.height * pos),
            velocity: Vector3::z() * (self.height * vel),
            orientation: self.orientation,
            angular_velocity: Vector3::zeros(),
        }
    }
}

/// Constant-speed circle in the horizontal plane, passing through `start`
/// at `t = 0` and centered `radius` away along -x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleTrajectory {
    pub start: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub radius: f64,
    pub period: f64,
}

/// A zero radius gives a trajectory that holds `start`.
pub fn circle_trajectory(start: Vector3<f64>, radius: f64, period: f64) -> CircleTrajectory {
    assert!(radius >= 0.0 && period > 0.0, "circle radius must be non-negative and period positive");
    CircleTrajectory { start, orientation: UnitQuaternion::identity(), radius, period }
}

impl ObjectTrajectory for CircleTrajectory {
    fn sample(&self, t: f64) -> TrajectorySample {
        let w = 2.0 * std::f64::consts::PI / self.period;
        let (s, c) = (w * t).sin_cos();
        TrajectorySample {
            position: self.start + Vector3::new(self.radius * (c - 1.0), self.radius * s, 0.0),
            velocity: Vector3::new(-self.radius * w * s, self.radius * w * c, 0.0),
            orientation: self.orientation,
            angular_velocity: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WrenchGains {
    /// N/m
    pub p_lin: f64,
    /// N·s/m
    pub d_lin: f64,
    /// N·m/rad
    pub p_ang: f64,
    /// N·m·s/rad
    pub d_ang: f64,
    /// m/s²
    pub gravity: [f64; 3],
}

impl Default for WrenchGains {
    fn default() -> Self {
        Self { p_lin: 200.0, d_lin: 20.0, p_ang: 1.0, d_ang: 0.1, gravity: [0.0, 0.0, -9.81] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TipGains {
    /// N/m
    pub p: f64,
    /// N·s/m
    pub d: f64,
}

impl Default for TipGains {
    fn default() -> Self {
        Self { p: 50.0, d: 1.0 }
    }
}

/// Rotation error as a 3-vector: twice the vector part of
/// `desired * actual⁻¹`, taking the representative with non-negative scalar
/// part. Close to the axis-angle of the error for small errors.
pub fn orientation_error(desired: &UnitQuaternion<f64>, actual: &UnitQuaternion<f64>) -> Vector3<f64> {
    let e = (desired * actual.inverse()).into_inner();
    let sign = if e.w < 0.0 { -1.0 } else { 1.0 };
    e.imag() * (2.0 * sign)
}

/// World-frame force and moment at the center of mass.
pub fn com_wrench(
    state: &ObjectState,
    desired: &TrajectorySample,
    gains: &WrenchGains,
) -> (Vector3<f64>, Vector3<f64>) {
    let g = Vector3::from(gains.gravity);
    let force = (desired.position - state.position) * gains.p_lin
        + (desired.velocity - state.velocity) * gains.d_lin
        - g * state.mass;
    let moment = orientation_error(&desired.orientation, &state.orientation) * gains.p_ang
        + (desired.angular_velocity - state.angular_velocity) * gains.d_ang;
    (force, moment)
}

/// Joint torques `Jᵀ(F + P'δx + D'δẋ)` of one finger. `force` is the world
/// force the tip should exert.
pub fn impedance_torques(
    finger: &FingerGeometry,
    q: &Vector3<f64>,
    qdot: &Vector3<f64>,
    force: &Vector3<f64>,
    tip_position: &Vector3<f64>,
    tip_velocity: &Vector3<f64>,
    gains: &TipGains,
) -> Vector3<f64> {
    let j = finger.jacobian(q);
    let dx = tip_position - finger.forward_kinematics(q);
    let dv = tip_velocity - j * qdot;
    j.transpose() * (force + dx * gains.p + dv * gains.d)
}

/// Contacts at the centers of the +x, +y and -y faces of a cube, normals
/// pointing inward. Finger `i` takes contact `i`.
pub fn cube_face_contacts(edge: f64, mu: f64) -> Result<ContactSet, GraspError> {
    let h = edge / 2.0;
    ContactSet::new(
        vec![
            Contact::new(Vector3::new(h, 0.0, 0.0), -Vector3::x()),
            Contact::new(Vector3::new(0.0, h, 0.0), -Vector3::y()),
            Contact::new(Vector3::new(0.0, -h, 0.0), Vector3::y()),
        ],
        mu,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceSource {
    /// Fresh QP solution.
    Solved,
    /// QP infeasible; forces of the last feasible cycle reused.
    Held { stale_cycles: usize },
    /// QP infeasible for too long; zero torque commanded.
    Dropped,
}

#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub action: TriFingerAction,
    /// Desired wrench at the center of mass, world frame.
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
    /// Force each tip exerts on the object, world frame.
    pub tip_forces: [Vector3<f64>; NUM_FINGERS],
    pub source: ForceSource,
    /// Solver output of this cycle, absent only for invalid input.
    pub qp: Option<QpSolution>,
}

/// Cycles the last feasible forces are reused after the QP fails.
pub const MAX_HELD_CYCLES: usize = 50;

/// Grasp controller owning the QP warm-start state and the fallback forces.
pub struct GraspController {
    pub geometry: TriFingerGeometry,
    pub contacts: ContactSet,
    pub wrench_gains: WrenchGains,
    pub tip_gains: TipGains,
    solver: QpSolver,
    last_forces: Option<Vec<Vector3<f64>>>,
    stale: usize,
}

impl GraspController {
    pub fn new(geometry: TriFingerGeometry, contacts: ContactSet, wrench_gains: WrenchGains, tip_gains: TipGains) -> Self {
        assert_eq!(contacts.len(), NUM_FINGERS, "one contact per finger");
        Self {
            geometry,
            contacts,
            wrench_gains,
            tip_gains,
            solver: QpSolver::new(true),
            last_forces: None,
            stale: 0,
        }
    }

    /// One control cycle.
    pub fn control_step(
        &mut self,
        object: &ObjectState,
        desired: &TrajectorySample,
        obs: &TriFingerObservation,
    ) -> ControlOutput {
        let (force, moment) = com_wrench(object, desired, &self.wrench_gains);
        let to_object = object.orientation.inverse();
        let result = distribute_forces_with(&mut self.solver, &self.contacts, &(to_object * force), &(to_object * moment));
        let (local, source, qp) = match result {
            Ok((forces, sol)) => {
                self.stale = 0;
                self.last_forces = Some(forces.clone());
                (Some(forces), ForceSource::Solved, Some(sol))
            }
            Err(_) => {
                self.stale += 1;
                let qp = crate::grasp::GraspQp::for_wrench(&self.contacts, &(to_object * force), &(to_object * moment))
                    .ok()
                    .map(|p| crate::grasp::solve_qp(&p));
                match &self.last_forces {
                    Some(f) if self.stale <= MAX_HELD_CYCLES => {
                        (Some(f.clone()), ForceSource::Held { stale_cycles: self.stale }, qp)
                    }
                    _ => (None, ForceSource::Dropped, qp),
                }
            }
        };
        let Some(local) = local else {
            return ControlOutput {
                action: TriFingerAction::default(),
                force,
                moment,
                tip_forces: [Vector3::zeros(); NUM_FINGERS],
                source,
                qp,
            };
        };
        let tip_forces: [Vector3<f64>; NUM_FINGERS] = std::array::from_fn(|i| object.orientation * local[i]);
        let mut torque = JointVector::zeros();
        for (i, finger) in self.geometry.fingers.iter().enumerate() {
            let (tip, tip_vel) = desired.point(&self.contacts.contacts[i].location);
            let tau = impedance_torques(
                finger,
                &obs.finger_position(i),
                &obs.finger_velocity(i),
                &tip_forces[i],
                &tip,
                &tip_vel,
                &self.tip_gains,
            );
            torque.fixed_rows_mut::<3>(3 * i).copy_from(&tau);
        }
        ControlOutput { action: TriFingerAction::from_torque(torque), force, moment, tip_forces, source, qp }
    }
}
