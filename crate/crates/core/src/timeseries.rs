//! Bounded, indexed, blocking time-series.
//!
//! A [`TimeSeries`] assigns consecutive indices to appended elements, keeps
//! the newest `capacity` of them and lets any number of readers block until a
//! given index exists. It is the storage behind every robot data channel.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::clock::Clock;

/// Position of an element in a time-series. The first append yields 0.
pub type TimeIndex = usize;

/// Default history length: ten seconds at 1 kHz.
pub const DEFAULT_CAPACITY: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeSeriesError {
    #[error("index {index} was evicted (oldest retained index is {oldest})")]
    Evicted { index: TimeIndex, oldest: TimeIndex },
    #[error("timed out waiting for index {index}")]
    Timeout { index: TimeIndex },
    #[error("series closed before index {index} was appended")]
    Closed { index: TimeIndex },
}

struct Inner<E> {
    elements: VecDeque<(E, f64)>,
    /// Index of `elements[0]`.
    oldest: TimeIndex,
    closed: bool,
}

impl<E> Inner<E> {
    fn next_index(&self) -> TimeIndex {
        self.oldest + self.elements.len()
    }
}

/// Single-writer, multi-reader indexed ring buffer with blocking reads.
pub struct TimeSeries<E> {
    inner: Mutex<Inner<E>>,
    appended: Condvar,
    capacity: usize,
    clock: Arc<dyn Clock>,
}

impl<E: Clone> TimeSeries<E> {
    pub fn new(capacity: usize, clock: Arc<dyn Clock>) -> Self {
        assert!(capacity > 0, "time-series capacity must be positive");
        Self {
            inner: Mutex::new(Inner {
                elements: VecDeque::with_capacity(capacity.min(DEFAULT_CAPACITY)),
                oldest: 0,
                closed: false,
            }),
            appended: Condvar::new(),
            capacity,
            clock,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn lock(&self) -> MutexGuard<'_, Inner<E>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn push(&self, inner: &mut Inner<E>, value: E) -> TimeIndex {
        let index = inner.next_index();
        let mut stamp = self.clock.now();
        if let Some((_, last)) = inner.elements.back() {
            stamp = stamp.max(*last);
        }
        if inner.elements.len() == self.capacity {
            inner.elements.pop_front();
            inner.oldest += 1;
        }
        inner.elements.push_back((value, stamp));
        self.appended.notify_all();
        index
    }

    /// Appends `value` and returns its index, waking blocked readers.
    pub fn append(&self, value: E) -> TimeIndex {
        let mut inner = self.lock();
        self.push(&mut inner, value)
    }

    /// Appends only if the next index would be `expected`.
    ///
    /// On mismatch nothing is stored and the actual next index is returned as
    /// the error. Used by the back-end to fill a missed slot without racing a
    /// late user append.
    pub fn append_at(&self, expected: TimeIndex, value: E) -> Result<TimeIndex, TimeIndex> {
        let mut inner = self.lock();
        let next = inner.next_index();
        if next != expected {
            return Err(next);
        }
        Ok(self.push(&mut inner, value))
    }

    /// Blocking read of element `t` together with its timestamp.
    ///
    /// With `timeout == None` waits until `t` is appended or the series is
    /// closed.
    pub fn get_stamped(
        &self,
        t: TimeIndex,
        timeout: Option<Duration>,
    ) -> Result<(E, f64), TimeSeriesError> {
        let deadline = timeout.map(|d| Instant::now() + d);
        let mut inner = self.lock();
        loop {
            if t < inner.oldest {
                return Err(TimeSeriesError::Evicted { index: t, oldest: inner.oldest });
            }
            if t < inner.next_index() {
                return Ok(inner.elements[t - inner.oldest].clone());
            }
            if inner.closed {
                return Err(TimeSeriesError::Closed { index: t });
            }
            inner = match deadline {
                None => self.appended.wait(inner).unwrap_or_else(|e| e.into_inner()),
                Some(deadline) => {
                    let now = Instant::now();
                    if now >= deadline {
                        return Err(TimeSeriesError::Timeout { index: t });
                    }
                    self.appended
                        .wait_timeout(inner, deadline - now)
                        .unwrap_or_else(|e| e.into_inner())
                        .0
                }
            };
        }
    }

    /// Blocking read of element `t`.
    pub fn get(&self, t: TimeIndex, timeout: Option<Duration>) -> Result<E, TimeSeriesError> {
        self.get_stamped(t, timeout).map(|(v, _)| v)
    }

    /// Non-blocking read: `Ok(None)` if `t` lies in the future.
    pub fn try_get(&self, t: TimeIndex) -> Result<Option<E>, TimeSeriesError> {
        let inner = self.lock();
        if t < inner.oldest {
            return Err(TimeSeriesError::Evicted { index: t, oldest: inner.oldest });
        }
        Ok(inner.elements.get(t - inner.oldest).map(|(v, _)| v.clone()))
    }

    pub fn timestamp(&self, t: TimeIndex, timeout: Option<Duration>) -> Result<f64, TimeSeriesError> {
        self.get_stamped(t, timeout).map(|(_, s)| s)
    }

    /// Index of the last append, `None` while empty.
    pub fn newest_index(&self) -> Option<TimeIndex> {
        self.lock().next_index().checked_sub(1)
    }

    /// Oldest index still retained, `None` while empty.
    pub fn oldest_index(&self) -> Option<TimeIndex> {
        let inner = self.lock();
        (!inner.elements.is_empty()).then_some(inner.oldest)
    }

    /// Total number of appends so far (not the number retained).
    pub fn len(&self) -> usize {
        self.lock().next_index()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Releases all readers waiting on future indices with
    /// [`TimeSeriesError::Closed`]. Existing elements stay readable and
    /// appends are still accepted.
    pub fn close(&self) {
        let mut inner = self.lock();
        inner.closed = true;
        self.appended.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }
}
