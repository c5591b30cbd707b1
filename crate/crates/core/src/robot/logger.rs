//! CSV logging of synchronized robot histories.
//!
//! One row per completed cycle:
//! `t,timestamp,<desired fields>,<applied fields>,<observation fields>,status`.
//! Floats are written with 17 significant digits so a read reproduces every
//! value bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use super::{RobotData, StatusRecord, StatusState};
use crate::timeseries::{TimeIndex, TimeSeriesError};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("requested range starts at {index} but the oldest retained cycle is {oldest}")]
    Evicted { index: TimeIndex, oldest: TimeIndex },
    #[error("malformed log: {0}")]
    Format(String),
}

/// Flat CSV representation of an action or observation type.
pub trait LogFields: Sized {
    /// Column names, in the order [`LogFields::write_fields`] emits them.
    fn field_names() -> Vec<String>;
    fn write_fields(&self, out: &mut Vec<String>);
    /// Parses exactly `field_names().len()` fields.
    fn read_fields(fields: &[&str]) -> Result<Self, LogError>;
}

/// Lossless float formatting (17 significant digits).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_float(s: &str) -> Result<f64, LogError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| LogError::Format(format!("not a number: {s:?}")))
}

pub fn encode_status(rec: &StatusRecord) -> String {
    if rec.message.is_empty() {
        rec.state.as_str().to_string()
    } else {
        format!("{}: {}", rec.state.as_str(), rec.message)
    }
}

pub fn decode_status(s: &str) -> Result<StatusRecord, LogError> {
    let (state, message) = s.split_once(": ").unwrap_or((s, ""));
    let state = match state {
        "ok" => StatusState::Ok,
        "action_repeated" => StatusState::ActionRepeated,
        "shutdown" => StatusState::Shutdown,
        other => return Err(LogError::Format(format!("unknown status {other:?}"))),
    };
    Ok(StatusRecord { state, message: message.to_string() })
}

/// One synchronized row of the log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord<A, O> {
    pub t: TimeIndex,
    pub timestamp: f64,
    pub desired: A,
    pub applied: A,
    pub observation: O,
    pub status: StatusRecord,
}

pub fn header<A: LogFields, O: LogFields>() -> Vec<String> {
    let mut cols = vec!["t".to_string(), "timestamp".to_string()];
    cols.extend(A::field_names().into_iter().map(|n| format!("desired_{n}")));
    cols.extend(A::field_names().into_iter().map(|n| format!("applied_{n}")));
    cols.extend(O::field_names().into_iter().map(|n| format!("observation_{n}")));
    cols.push("status".to_string());
    cols
}

fn map_series_err(err: TimeSeriesError) -> LogError {
    match err {
        TimeSeriesError::Evicted { index, oldest } => LogError::Evicted { index, oldest },
        other => LogError::Format(other.to_string()),
    }
}

/// Collects the completed cycles of `range` (clamped to what exists).
pub fn collect_records<A, O>(
    data: &RobotData<A, O>,
    range: Range<TimeIndex>,
) -> Result<Vec<LogRecord<A, O>>, LogError>
where
    A: Clone,
    O: Clone,
{
    let end = range.end.min(data.completed_cycles());
    let mut rows = Vec::with_capacity(end.saturating_sub(range.start));
    for t in range.start..end {
        let (observation, timestamp) =
            data.observations.get_stamped(t, None).map_err(map_series_err)?;
        rows.push(LogRecord {
            t,
            timestamp,
            desired: data.desired_actions.get(t, None).map_err(map_series_err)?,
            applied: data.applied_actions.get(t, None).map_err(map_series_err)?,
            observation,
            status: data.status.get(t, None).map_err(map_series_err)?,
        });
    }
    Ok(rows)
}

pub fn write_records<W, A, O>(writer: W, records: &[LogRecord<A, O>]) -> Result<(), LogError>
where
    W: Write,
    A: LogFields,
    O: LogFields,
{
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(header::<A, O>())?;
    let mut row = Vec::new();
    for rec in records {
        row.clear();
        row.push(rec.t.to_string());
        row.push(format_float(rec.timestamp));
        rec.desired.write_fields(&mut row);
        rec.applied.write_fields(&mut row);
        rec.observation.write_fields(&mut row);
        row.push(encode_status(&rec.status));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_records<R, A, O>(reader: R) -> Result<Vec<LogRecord<A, O>>, LogError>
where
    R: Read,
    A: LogFields,
    O: LogFields,
{
    let mut csv = csv::Reader::from_reader(reader);
    let expected = header::<A, O>();
    let found: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(LogError::Format("header does not match the record types".into()));
    }
    let n_action = A::field_names().len();
    let n_obs = O::field_names().len();
    let mut out = Vec::new();
    for row in csv.records() {
        let row = row?;
        let fields: Vec<&str> = row.iter().collect();
        let mut at = 2;
        let t = fields[0]
            .parse::<TimeIndex>()
            .map_err(|_| LogError::Format(format!("bad index {:?}", fields[0])))?;
        let timestamp = parse_float(fields[1])?;
        let desired = A::read_fields(&fields[at..at + n_action])?;
        at += n_action;
        let applied = A::read_fields(&fields[at..at + n_action])?;
        at += n_action;
        let observation = O::read_fields(&fields[at..at + n_obs])?;
        at += n_obs;
        let status = decode_status(fields[at])?;
        out.push(LogRecord { t, timestamp, desired, applied, observation, status });
    }
    Ok(out)
}

/// Writes cycles `range` of `data` to a CSV file; returns the row count.
pub fn logger_write<A, O>(
    data: &RobotData<A, O>,
    path: impl AsRef<Path>,
    range: Range<TimeIndex>,
) -> Result<usize, LogError>
where
    A: LogFields + Clone,
    O: LogFields + Clone,
{
    let records = collect_records(data, range)?;
    write_records(File::create(path)?, &records)?;
    Ok(records.len())
}

pub fn logger_read<A: LogFields, O: LogFields>(
    path: impl AsRef<Path>,
) -> Result<Vec<LogRecord<A, O>>, LogError> {
    read_records(File::open(path)?)
}
