//! Time sources for the back-end and the time-series timestamps.
//!
//! All time is expressed in seconds as `f64`. [`WallClock`] follows the
//! monotonic system clock; [`SimClock`] only moves when the harness advances
//! it, which makes real-time mode testable without wall-clock races.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

/// A monotonic clock that the back-end can sleep on.
pub trait Clock: Send + Sync {
    /// Current time in seconds.
    fn now(&self) -> f64;

    /// Blocks until `now() >= deadline` or `stop` is raised.
    ///
    /// Returns `false` if the wait ended because of `stop`.
    fn sleep_until(&self, deadline: f64, stop: &StopFlag) -> bool;

    /// Wakes every thread blocked in [`Clock::sleep_until`] so it can observe
    /// a raised stop flag.
    fn interrupt(&self) {}
}

/// Cooperative cancellation flag shared between the back-end and its owner.
#[derive(Debug, Clone, Default)]
pub struct StopFlag(Arc<AtomicBool>);

impl StopFlag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raise(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_raised(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// System monotonic clock, zeroed at construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep_until(&self, deadline: f64, stop: &StopFlag) -> bool {
        // Coarse sleeps in slices of at most 1 ms so a stop request is seen
        // promptly, then yield for the last fraction to limit overshoot.
        loop {
            if stop.is_raised() {
                return false;
            }
            let remaining = deadline - self.now();
            if remaining <= 0.0 {
                return true;
            }
            if remaining > 2e-4 {
                std::thread::sleep(Duration::from_secs_f64((remaining - 1e-4).min(1e-3)));
            } else {
                std::thread::yield_now();
            }
        }
    }
}

/// Manually advanced clock for deterministic tests and simulation.
#[derive(Debug, Default)]
pub struct SimClock {
    now: Mutex<f64>,
    changed: Condvar,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves time forward by `dt` seconds and wakes sleepers.
    pub fn advance(&self, dt: f64) {
        assert!(dt >= 0.0, "simulated time cannot run backwards");
        let mut now = self.now.lock().unwrap();
        *now += dt;
        self.changed.notify_all();
    }

    /// Sets the absolute time. Panics if `t` lies in the past.
    pub fn set(&self, t: f64) {
        let mut now = self.now.lock().unwrap();
        assert!(t >= *now, "simulated time cannot run backwards");
        *now = t;
        self.changed.notify_all();
    }

    /// Moves time to the deadline of cycle `t` of a back-end with period
    /// `delta` started at time 0. A user loop calls this right after
    /// appending action `t`, so a real-time back-end always finds it in time.
    pub fn set_cycle(&self, t: usize, delta: f64) {
        self.set(t as f64 * delta);
    }
}

impl Clock for SimClock {
    fn now(&self) -> f64 {
        *self.now.lock().unwrap()
    }

    fn sleep_until(&self, deadline: f64, stop: &StopFlag) -> bool {
        let mut now = self.now.lock().unwrap();
        loop {
            if stop.is_raised() {
                return false;
            }
            if *now >= deadline {
                return true;
            }
            now = self.changed.wait(now).unwrap();
        }
    }

    fn interrupt(&self) {
        let _guard = self.now.lock().unwrap();
        self.changed.notify_all();
    }
}
