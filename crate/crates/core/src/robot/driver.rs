use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("driver fault: {0}")]
pub struct DriverError(pub String);

/// The robot-specific part of the framework.
///
/// The back-end calls [`get_latest_observation`](RobotDriver::get_latest_observation)
/// once per cycle and passes each desired action to
/// [`apply_action`](RobotDriver::apply_action), which may modify it for
/// safety and returns what was actually sent to the hardware. In real-time
/// mode `apply_action` must return within one control period.
pub trait RobotDriver: Send + 'static {
    type Action: Clone + Send + Sync + 'static;
    type Observation: Clone + Send + Sync + 'static;

    fn get_latest_observation(&mut self) -> Self::Observation;

    fn apply_action(&mut self, desired: &Self::Action) -> Result<Self::Action, DriverError>;

    /// A note to attach to the status record of the cycle just applied,
    /// e.g. a tripped hardware timeout.
    fn take_notice(&mut self) -> Option<String> {
        None
    }

    /// Bring the hardware into a safe state. Called once when the back-end
    /// shuts down.
    fn shutdown(&mut self) {}
}
