use std::sync::Arc;
use std::time::Duration;

use super::{RobotData, RobotError, StatusRecord};
use crate::timeseries::TimeIndex;

/// User-side handle on a robot: append desired actions, read any history.
///
/// Reads of future indices block until the back-end publishes them and are
/// released with [`RobotError::Shutdown`] if the back-end stops first.
pub struct RobotFrontend<A, O> {
    data: Arc<RobotData<A, O>>,
}

impl<A, O> Clone for RobotFrontend<A, O> {
    fn clone(&self) -> Self {
        Self { data: self.data.clone() }
    }
}

impl<A: Clone, O: Clone> RobotFrontend<A, O> {
    pub fn new(data: Arc<RobotData<A, O>>) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &Arc<RobotData<A, O>> {
        &self.data
    }

    /// Appends to the desired-action series and returns the new index. The
    /// first call marks time 0.
    pub fn append_desired_action(&self, action: A) -> Result<TimeIndex, RobotError> {
        if let Some(msg) = self.data.shutdown_message() {
            return Err(RobotError::Shutdown(msg));
        }
        if self.data.desired_actions.is_closed() {
            return Err(RobotError::Shutdown("back-end stopped".into()));
        }
        Ok(self.data.desired_actions.append(action))
    }

    pub fn get_observation(&self, t: TimeIndex) -> Result<O, RobotError> {
        self.data.observations.get(t, None).map_err(|e| self.data.map_error(e))
    }

    pub fn get_observation_timeout(&self, t: TimeIndex, timeout: Duration) -> Result<O, RobotError> {
        self.data
            .observations
            .get(t, Some(timeout))
            .map_err(|e| self.data.map_error(e))
    }

    pub fn get_desired_action(&self, t: TimeIndex) -> Result<A, RobotError> {
        self.data.desired_actions.get(t, None).map_err(|e| self.data.map_error(e))
    }

    pub fn get_applied_action(&self, t: TimeIndex) -> Result<A, RobotError> {
        self.data.applied_actions.get(t, None).map_err(|e| self.data.map_error(e))
    }

    pub fn get_status(&self, t: TimeIndex) -> Result<StatusRecord, RobotError> {
        self.data.status.get(t, None).map_err(|e| self.data.map_error(e))
    }

    /// Timestamp (clock seconds) at which observation `t` was published.
    pub fn get_timestamp(&self, t: TimeIndex) -> Result<f64, RobotError> {
        self.data.observations.timestamp(t, None).map_err(|e| self.data.map_error(e))
    }

    pub fn newest_desired_index(&self) -> Option<TimeIndex> {
        self.data.desired_actions.newest_index()
    }

    pub fn newest_observation_index(&self) -> Option<TimeIndex> {
        self.data.observations.newest_index()
    }
}
