//! Robot-agnostic front-end/back-end framework.
//!
//! The user appends desired actions `a` through a [`RobotFrontend`]; the
//! back-end thread started by [`Backend::spawn`] feeds them to a
//! [`RobotDriver`] and fills in the applied actions `a'`, the observations `y`
//! and a per-cycle [`StatusRecord`]. The two sides share nothing but the
//! [`RobotData`] time-series.

mod backend;
mod driver;
mod frontend;
pub mod logger;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::timeseries::{TimeIndex, TimeSeries, TimeSeriesError, DEFAULT_CAPACITY};

pub use backend::{backend_run, Backend, BackendExit, ExitReason};
pub use driver::{DriverError, RobotDriver};
pub use frontend::RobotFrontend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusState {
    Ok,
    ActionRepeated,
    Shutdown,
}

impl StatusState {
    pub fn as_str(self) -> &'static str {
        match self {
            StatusState::Ok => "ok",
            StatusState::ActionRepeated => "action_repeated",
            StatusState::Shutdown => "shutdown",
        }
    }
}

impl fmt::Display for StatusState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one back-end cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusRecord {
    pub state: StatusState,
    pub message: String,
}

impl StatusRecord {
    pub fn ok() -> Self {
        Self { state: StatusState::Ok, message: String::new() }
    }

    pub fn with_message(state: StatusState, message: impl Into<String>) -> Self {
        Self { state, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Actions are consumed at a fixed period; a late action is a fault.
    RealTime,
    /// The back-end waits indefinitely for the next action.
    NonRealTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateActionPolicy {
    /// Shut down once more than `max_missed_actions` consecutive deadlines
    /// were missed. Shorter gaps are bridged by repeating the last action.
    Shutdown,
    /// Always repeat the last action when the next one is late.
    RepeatPrevious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub mode: ControlMode,
    /// Control period in seconds.
    pub delta: f64,
    pub max_missed_actions: u32,
    pub late_action_policy: LateActionPolicy,
    /// History length of every time-series.
    pub history_length: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            mode: ControlMode::NonRealTime,
            delta: 1e-3,
            max_missed_actions: 10,
            late_action_policy: LateActionPolicy::Shutdown,
            history_length: DEFAULT_CAPACITY,
        }
    }
}

impl BackendConfig {
    pub fn real_time(delta: f64) -> Self {
        Self { mode: ControlMode::RealTime, delta, ..Self::default() }
    }

    pub fn non_real_time() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(format!("backend delta must be positive, got {}", self.delta));
        }
        if self.history_length == 0 {
            return Err("backend history_length must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RobotError {
    #[error("index {index} is no longer in the history (oldest is {oldest})")]
    Evicted { index: TimeIndex, oldest: TimeIndex },
    #[error("timed out waiting for index {index}")]
    Timeout { index: TimeIndex },
    #[error("robot is shut down: {0}")]
    Shutdown(String),
}

/// The four synchronized histories shared by front-end, back-end and logger.
pub struct RobotData<A, O> {
    pub desired_actions: TimeSeries<A>,
    pub applied_actions: TimeSeries<A>,
    pub observations: TimeSeries<O>,
    pub status: TimeSeries<StatusRecord>,
}

impl<A: Clone, O: Clone> RobotData<A, O> {
    pub fn new(history_length: usize, clock: Arc<dyn Clock>) -> Self {
        Self {
            desired_actions: TimeSeries::new(history_length, clock.clone()),
            applied_actions: TimeSeries::new(history_length, clock.clone()),
            observations: TimeSeries::new(history_length, clock.clone()),
            status: TimeSeries::new(history_length, clock),
        }
    }

    /// Message of the shutdown record, if the robot has been shut down.
    pub fn shutdown_message(&self) -> Option<String> {
        let newest = self.status.newest_index()?;
        match self.status.try_get(newest) {
            Ok(Some(rec)) if rec.state == StatusState::Shutdown => Some(rec.message),
            _ => None,
        }
    }

    /// Number of cycles whose applied action and observation were published.
    pub fn completed_cycles(&self) -> usize {
        self.observations.len()
    }

    fn close_all(&self) {
        self.desired_actions.close();
        self.applied_actions.close();
        self.observations.close();
        self.status.close();
    }

    pub(crate) fn map_error(&self, err: TimeSeriesError) -> RobotError {
        match err {
            TimeSeriesError::Evicted { index, oldest } => RobotError::Evicted { index, oldest },
            TimeSeriesError::Timeout { index } => RobotError::Timeout { index },
            TimeSeriesError::Closed { .. } => RobotError::Shutdown(
                self.shutdown_message().unwrap_or_else(|| "back-end stopped".to_string()),
            ),
        }
    }
}
