use std::sync::Arc;
use std::thread::JoinHandle;

use super::{
    BackendConfig, ControlMode, LateActionPolicy, RobotData, RobotDriver, StatusRecord,
    StatusState,
};
use crate::clock::{Clock, StopFlag};
use crate::timeseries::{TimeIndex, TimeSeriesError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExitReason {
    /// The owner requested a stop.
    Stopped,
    /// A safety check or driver fault shut the robot down.
    Shutdown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendExit {
    /// Number of cycles whose action was applied.
    pub cycles: usize,
    pub reason: ExitReason,
}

/// Runs the back-end loop on the calling thread until shutdown or stop.
///
/// Per cycle `t`: obtain `a_t` (waiting indefinitely in non-real-time mode,
/// until `t0 + t * delta` in real-time mode), snapshot `y_t` from the driver,
/// apply the action, then publish `a'_t`, the status record and `y_t` in that
/// order. `y_t` therefore never becomes visible before `a_t` was consumed or
/// replaced by a repetition.
pub fn backend_run<D: RobotDriver>(
    mut driver: D,
    data: Arc<RobotData<D::Action, D::Observation>>,
    cfg: &BackendConfig,
    clock: Arc<dyn Clock>,
    stop: StopFlag,
) -> BackendExit {
    let exit = run_cycles(&mut driver, &data, cfg, clock.as_ref(), &stop);
    if let ExitReason::Shutdown(_) = exit.reason {
        driver.shutdown();
    }
    data.close_all();
    exit
}

fn run_cycles<D: RobotDriver>(
    driver: &mut D,
    data: &RobotData<D::Action, D::Observation>,
    cfg: &BackendConfig,
    clock: &dyn Clock,
    stop: &StopFlag,
) -> BackendExit {
    let stopped = |cycles| BackendExit { cycles, reason: ExitReason::Stopped };
    let shutdown = |t: TimeIndex, msg: String| {
        data.status
            .append(StatusRecord::with_message(StatusState::Shutdown, msg.clone()));
        BackendExit { cycles: t, reason: ExitReason::Shutdown(msg) }
    };

    // Idle until the first desired action marks time 0.
    let t0 = match data.desired_actions.get_stamped(0, None) {
        Ok((_, stamp)) => stamp,
        Err(_) => return stopped(0),
    };

    let mut t: TimeIndex = 0;
    let mut missed: u32 = 0;
    loop {
        let (action, repeated) = match cfg.mode {
            ControlMode::NonRealTime => match data.desired_actions.get(t, None) {
                Ok(a) => (a, false),
                Err(TimeSeriesError::Evicted { .. }) => {
                    return shutdown(t, format!("desired action {t} was evicted before use"))
                }
                Err(_) => return stopped(t),
            },
            ControlMode::RealTime => {
                if !clock.sleep_until(t0 + t as f64 * cfg.delta, stop) {
                    return stopped(t);
                }
                match data.desired_actions.try_get(t) {
                    Ok(Some(a)) => {
                        missed = 0;
                        (a, false)
                    }
                    Ok(None) => {
                        missed += 1;
                        if cfg.late_action_policy == LateActionPolicy::Shutdown
                            && missed > cfg.max_missed_actions
                        {
                            return shutdown(
                                t,
                                format!("{missed} consecutive actions missed their deadline"),
                            );
                        }
                        let previous = match data.desired_actions.get(t - 1, None) {
                            Ok(a) => a,
                            Err(e) => return shutdown(t, format!("cannot repeat action: {e}")),
                        };
                        match data.desired_actions.append_at(t, previous.clone()) {
                            Ok(_) => (previous, true),
                            // The user appended a_t in the meantime.
                            Err(_) => {
                                missed = 0;
                                match data.desired_actions.get(t, None) {
                                    Ok(a) => (a, false),
                                    Err(e) => return shutdown(t, e.to_string()),
                                }
                            }
                        }
                    }
                    Err(e) => return shutdown(t, e.to_string()),
                }
            }
        };

        let observation = driver.get_latest_observation();
        let applied = match driver.apply_action(&action) {
            Ok(a) => a,
            Err(e) => return shutdown(t, e.to_string()),
        };
        let mut status = if repeated {
            StatusRecord::with_message(
                StatusState::ActionRepeated,
                format!("action {t} was late; repeated action {}", t - 1),
            )
        } else {
            StatusRecord::ok()
        };
        if let Some(notice) = driver.take_notice() {
            if !status.message.is_empty() {
                status.message.push_str("; ");
            }
            status.message.push_str(&notice);
        }

        data.applied_actions.append(applied);
        data.status.append(status);
        data.observations.append(observation);
        t += 1;
    }
}

/// Owner handle of a back-end running on its own thread.
pub struct Backend {
    handle: Option<JoinHandle<BackendExit>>,
    stop: StopFlag,
    clock: Arc<dyn Clock>,
    close_input: Box<dyn Fn() + Send + Sync>,
}

impl Backend {
    pub fn spawn<D: RobotDriver>(
        driver: D,
        data: Arc<RobotData<D::Action, D::Observation>>,
        cfg: BackendConfig,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let stop = StopFlag::new();
        let handle = {
            let data = data.clone();
            let clock = clock.clone();
            let stop = stop.clone();
            std::thread::Builder::new()
                .name("robot-backend".into())
                .spawn(move || backend_run(driver, data, &cfg, clock, stop))
                .expect("failed to spawn back-end thread")
        };
        Self {
            handle: Some(handle),
            stop,
            clock,
            close_input: Box::new(move || data.desired_actions.close()),
        }
    }

    /// Asks the loop to stop. In non-real-time mode every action appended
    /// before the request is still applied.
    pub fn request_stop(&self) {
        self.stop.raise();
        (self.close_input)();
        self.clock.interrupt();
    }

    pub fn is_finished(&self) -> bool {
        self.handle.as_ref().is_none_or(|h| h.is_finished())
    }

    /// Stops the loop and waits for the thread to exit.
    pub fn stop(mut self) -> BackendExit {
        self.request_stop();
        self.take_exit()
    }

    /// Waits for the loop to exit on its own (shutdown).
    pub fn join(mut self) -> BackendExit {
        self.take_exit()
    }

    fn take_exit(&mut self) -> BackendExit {
        self.handle
            .take()
            .expect("back-end already joined")
            .join()
            .expect("back-end thread panicked")
    }
}

impl Drop for Backend {
    fn drop(&mut self) {
        if self.handle.is_some() {
            self.request_stop();
            let _ = self.take_exit();
        }
    }
}
