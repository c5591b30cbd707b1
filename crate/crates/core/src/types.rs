//! Action and observation types of the three-finger robot.
//!
//! All joint vectors are finger-major: index `3 * finger + joint`.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::robot::logger::{format_float, parse_float, LogError, LogFields};

pub const NUM_FINGERS: usize = 3;
pub const JOINTS_PER_FINGER: usize = 3;
pub const NUM_JOINTS: usize = NUM_FINGERS * JOINTS_PER_FINGER;

pub type JointVector = SVector<f64, NUM_JOINTS>;

/// Default joint PD gains used when an action carries a position target but
/// no gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    /// N·m/rad
    pub kp: f64,
    /// N·m·s/rad
    pub kd: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self { kp: 3.0, kd: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriFingerAction {
    /// Feed-forward joint torque, N·m.
    pub torque: JointVector,
    /// Optional joint position target, rad.
    pub position: Option<JointVector>,
    pub position_kp: Option<JointVector>,
    pub position_kd: Option<JointVector>,
}

impl Default for TriFingerAction {
    fn default() -> Self {
        Self::from_torque(JointVector::zeros())
    }
}

impl TriFingerAction {
    pub fn from_torque(torque: JointVector) -> Self {
        Self { torque, position: None, position_kp: None, position_kd: None }
    }

    /// Pure position command using the driver's default gains.
    pub fn from_position(position: JointVector) -> Self {
        Self { position: Some(position), ..Self::default() }
    }

    pub fn with_gains(mut self, kp: JointVector, kd: JointVector) -> Self {
        self.position_kp = Some(kp);
        self.position_kd = Some(kd);
        self
    }

    /// Sums the feed-forward torque with the joint PD feedback when a
    /// position target is present. Velocity target is zero.
    pub fn effective_torque(&self, obs: &TriFingerObservation, defaults: &PdGains) -> JointVector {
        let Some(target) = self.position else {
            return self.torque;
        };
        let kp = self.position_kp.unwrap_or_else(|| JointVector::repeat(defaults.kp));
        let kd = self.position_kd.unwrap_or_else(|| JointVector::repeat(defaults.kd));
        self.torque + kp.component_mul(&(target - obs.position))
            - kd.component_mul(&obs.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TriFingerObservation {
    /// rad
    pub position: JointVector,
    /// rad/s
    pub velocity: JointVector,
    /// Last applied torque, N·m.
    pub torque: JointVector,
}

impl TriFingerObservation {
    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.velocity).chain(&self.torque).all(|x| x.is_finite())
    }

    /// Joint positions of one finger.
    pub fn finger_position(&self, finger: usize) -> nalgebra::Vector3<f64> {
        self.position.fixed_rows::<3>(3 * finger).into_owned()
    }

    pub fn finger_velocity(&self, finger: usize) -> nalgebra::Vector3<f64> {
        self.velocity.fixed_rows::<3>(3 * finger).into_owned()
    }
}

/// Identifier of one of the three cameras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CameraId(u8);

impl CameraId {
    pub fn new(id: u8) -> Option<Self> {
        (id < 3).then_some(Self(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

/// Placeholder for a camera image. Images arrive at their own rate through a
/// separate channel and are not decoded here.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrameStub {
    pub camera_id: CameraId,
    pub timestamp: f64,
    pub payload: Vec<u8>,
}

/// Source of camera frames, parallel to the proprioceptive driver.
pub trait CameraSource: Send {
    fn latest_frames(&mut self) -> Vec<CameraFrameStub>;
}

fn names(prefix: &str) -> impl Iterator<Item = String> + '_ {
    (0..NUM_JOINTS).map(move |i| format!("{prefix}_{i}"))
}

fn push_vector(out: &mut Vec<String>, v: &JointVector) {
    out.extend(v.iter().map(|x| format_float(*x)));
}

fn push_optional(out: &mut Vec<String>, v: &Option<JointVector>) {
    match v {
        Some(v) => push_vector(out, v),
        None => out.extend(std::iter::repeat_n(String::new(), NUM_JOINTS)),
    }
}

fn read_vector(fields: &[&str]) -> Result<JointVector, LogError> {
    let mut v = JointVector::zeros();
    for (slot, f) in v.iter_mut().zip(fields) {
        *slot = parse_float(f)?;
    }
    Ok(v)
}

fn read_optional(fields: &[&str]) -> Result<Option<JointVector>, LogError> {
    if fields.iter().all(|f| f.is_empty()) {
        Ok(None)
    } else {
        read_vector(fields).map(Some)
    }
}

fn check_len(fields: &[&str], n: usize) -> Result<(), LogError> {
    if fields.len() != n {
        return Err(LogError::Format(format!("expected {n} fields, got {}", fields.len())));
    }
    Ok(())
}

impl LogFields for TriFingerAction {
    fn field_names() -> Vec<String> {
        names("torque").chain(names("position")).chain(names("kp")).chain(names("kd")).collect()
    }

    fn write_fields(&self, out: &mut Vec<String>) {
        push_vector(out, &self.torque);
        push_optional(out, &self.position);
        push_optional(out, &self.position_kp);
        push_optional(out, &self.position_kd);
    }

    fn read_fields(fields: &[&str]) -> Result<Self, LogError> {
        check_len(fields, 4 * NUM_JOINTS)?;
        let n = NUM_JOINTS;
        Ok(Self {
            torque: read_vector(&fields[..n])?,
            position: read_optional(&fields[n..2 * n])?,
            position_kp: read_optional(&fields[2 * n..3 * n])?,
            position_kd: read_optional(&fields[3 * n..])?,
        })
    }
}

impl LogFields for TriFingerObservation {
    fn field_names() -> Vec<String> {
        names("position").chain(names("velocity")).chain(names("torque")).collect()
    }

    fn write_fields(&self, out: &mut Vec<String>) {
        push_vector(out, &self.position);
        push_vector(out, &self.velocity);
        push_vector(out, &self.torque);
    }

    fn read_fields(fields: &[&str]) -> Result<Self, LogError> {
        check_len(fields, 3 * NUM_JOINTS)?;
        let n = NUM_JOINTS;
        Ok(Self {
            position: read_vector(&fields[..n])?,
            velocity: read_vector(&fields[n..2 * n])?,
            torque: read_vector(&fields[2 * n..])?,
        })
    }
}
