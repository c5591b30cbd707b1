//! Random append/read scripts checked against an unbounded list.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trifinger_core::clock::{SimClock, WallClock};
use trifinger_core::timeseries::{TimeSeries, TimeSeriesError};

#[derive(Debug, Clone)]
pub enum Op {
    Append(i64),
    Get(usize),
    TryGet(usize),
    Timestamp(usize),
    Newest,
    Oldest,
    Len,
    Advance(f64),
    Close,
}

pub fn random_script(rng: &mut ChaCha8Rng, len: usize) -> (usize, Vec<Op>) {
    let capacity = rng.random_range(1..=20);
    let mut appended = 0usize;
    let mut ops = Vec::with_capacity(len);
    for _ in 0..len {
        // Read indices range over the past, the retained window and a bit
        // of the future.
        let index = |rng: &mut ChaCha8Rng| rng.random_range(0..appended + 3);
        let op = match rng.random_range(0..100) {
            0..=39 => {
                appended += 1;
                Op::Append(rng.random())
            }
            40..=59 => Op::Get(index(rng)),
            60..=69 => Op::TryGet(index(rng)),
            70..=74 => Op::Timestamp(index(rng)),
            75..=79 => Op::Newest,
            80..=84 => Op::Oldest,
            85..=89 => Op::Len,
            90..=98 => Op::Advance(rng.random_range(0.0..0.01)),
            _ => Op::Close,
        };
        ops.push(op);
    }
    (capacity, ops)
}

/// Runs `ops` on a fresh series and on the list oracle; returns the first
/// disagreement.
pub fn run_script(capacity: usize, ops: &[Op]) -> Result<(), String> {
    let clock = Arc::new(SimClock::new());
    let series: TimeSeries<i64> = TimeSeries::new(capacity, clock.clone());
    let mut list: Vec<(i64, f64)> = Vec::new();
    let mut now = 0.0;
    let mut closed = false;
    for (step, op) in ops.iter().enumerate() {
        let oldest = list.len().saturating_sub(capacity);
        let expect_read = |t: usize| -> Result<(i64, f64), TimeSeriesError> {
            if t < oldest {
                Err(TimeSeriesError::Evicted { index: t, oldest })
            } else if t < list.len() {
                Ok(list[t])
            } else if closed {
                Err(TimeSeriesError::Closed { index: t })
            } else {
                Err(TimeSeriesError::Timeout { index: t })
            }
        };
        let fail = |what: String| Err(format!("step {step} {op:?}: {what}"));
        match op {
            Op::Append(v) => {
                let stamp = list.last().map_or(now, |(_, s): &(i64, f64)| s.max(now));
                list.push((*v, stamp));
                let t = series.append(*v);
                if t != list.len() - 1 {
                    return fail(format!("index {t}, expected {}", list.len() - 1));
                }
            }
            Op::Get(t) => {
                let got = series.get(*t, Some(Duration::ZERO));
                let want = expect_read(*t).map(|(v, _)| v);
                if got != want {
                    return fail(format!("{got:?} != {want:?}"));
                }
            }
            Op::TryGet(t) => {
                let got = series.try_get(*t);
                let want = match expect_read(*t) {
                    Ok((v, _)) => Ok(Some(v)),
                    Err(TimeSeriesError::Evicted { index, oldest }) => Err(TimeSeriesError::Evicted { index, oldest }),
                    Err(_) => Ok(None),
                };
                if got != want {
                    return fail(format!("{got:?} != {want:?}"));
                }
            }
            Op::Timestamp(t) => {
                let got = series.timestamp(*t, Some(Duration::ZERO));
                let want = expect_read(*t).map(|(_, s)| s);
                if got != want {
                    return fail(format!("{got:?} != {want:?}"));
                }
            }
            Op::Newest => {
                let want = list.len().checked_sub(1);
                if series.newest_index() != want {
                    return fail(format!("{:?} != {want:?}", series.newest_index()));
                }
            }
            Op::Oldest => {
                let want = (!list.is_empty()).then_some(oldest);
                if series.oldest_index() != want {
                    return fail(format!("{:?} != {want:?}", series.oldest_index()));
                }
            }
            Op::Len => {
                if series.len() != list.len() {
                    return fail(format!("{} != {}", series.len(), list.len()));
                }
            }
            Op::Advance(dt) => {
                now += dt;
                clock.set(now);
            }
            Op::Close => {
                closed = true;
                series.close();
            }
        }
    }
    Ok(())
}

/// Two readers block on each of the indices `0..n`; each pair must return
/// exactly when its own index is appended, with the value stored there.
pub fn blocked_readers_release(n: usize) -> Result<(), String> {
    let s: Arc<TimeSeries<u64>> = Arc::new(TimeSeries::new(100, Arc::new(WallClock::new())));
    let readers: Vec<_> = (0..n)
        .flat_map(|t| (0..2).map(move |_| t))
        .map(|t| {
            let s = s.clone();
            (t, thread::spawn(move || s.get(t, None)))
        })
        .collect();
    thread::sleep(Duration::from_millis(30));
    if readers.iter().any(|(_, h)| h.is_finished()) {
        return Err("a reader returned before any append".into());
    }
    let mut pending = readers;
    for t in 0..n {
        s.append(100 + t as u64);
        let (done, rest): (Vec<_>, Vec<_>) = pending.into_iter().partition(|(i, _)| *i == t);
        for (_, h) in done {
            let got = h.join().map_err(|_| "reader panicked".to_string())?;
            if got != Ok(100 + t as u64) {
                return Err(format!("reader for {t} got {got:?}"));
            }
        }
        thread::sleep(Duration::from_millis(20));
        if rest.iter().any(|(_, h)| h.is_finished()) {
            return Err(format!("reader for a later index released at {t}"));
        }
        pending = rest;
    }
    Ok(())
}
