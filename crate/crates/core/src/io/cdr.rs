//! CDR stream parsing and writing. Streams are delimited text with a header
//! row; columns are picked out by name or position and timestamps parsed with
//! a strftime-style format at minute precision.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::{NaiveDateTime, Timelike};
use csv::StringRecord;

use crate::error::{Error, Result};
use crate::model::{RawDataset, RawRecord};

/// Where to find one logical column. Names take precedence over positions in
/// the sense that a named column is resolved against the header row, while an
/// index addresses the row directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSpec {
    Name(String),
    Index(usize),
}

impl ColumnSpec {
    pub fn name(name: impl Into<String>) -> Self {
        Self::Name(name.into())
    }

    fn resolve(&self, headers: &StringRecord, what: &str) -> Result<usize> {
        match self {
            Self::Name(name) => headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("no column `{name}` for {what} in header"),
                }),
            Self::Index(i) => {
                if *i < headers.len() {
                    Ok(*i)
                } else {
                    Err(Error::Parse {
                        line: 1,
                        message: format!(
                            "{what} column index {i} out of range for {} header fields",
                            headers.len()
                        ),
                    })
                }
            }
        }
    }
}

/// Column layout, timestamp format, and timezone of a CDR stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdrSchemaConfig {
    pub caller: ColumnSpec,
    pub receiver: Option<ColumnSpec>,
    pub tower: ColumnSpec,
    pub time: ColumnSpec,
    /// strftime-style format for the time column.
    pub time_format: String,
    /// IANA name of the wall-clock timezone all timestamps share.
    pub timezone: String,
    pub delimiter: u8,
}

impl Default for CdrSchemaConfig {
    fn default() -> Self {
        Self {
            caller: ColumnSpec::name("caller_id"),
            receiver: Some(ColumnSpec::name("receiver_id")),
            tower: ColumnSpec::name("tower_id"),
            time: ColumnSpec::name("time"),
            time_format: "%y-%m-%d %H:%M".into(),
            timezone: "UTC".into(),
            delimiter: b',',
        }
    }
}

fn record_line(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn field<'r>(record: &'r StringRecord, index: usize, what: &str) -> Result<&'r str> {
    record.get(index).ok_or_else(|| Error::Parse {
        line: record_line(record),
        message: format!("missing {what} field (column {index})"),
    })
}

/// Parses a CDR stream into a raw dataset. The observation period is derived
/// from the data: local midnight of the earliest record's date up to midnight
/// after the latest record's date.
pub fn parse_cdr<R: Read>(reader: R, schema: &CdrSchemaConfig) -> Result<RawDataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();

    let caller_col = schema.caller.resolve(&headers, "caller")?;
    let tower_col = schema.tower.resolve(&headers, "tower")?;
    let time_col = schema.time.resolve(&headers, "time")?;
    let receiver_col = schema
        .receiver
        .as_ref()
        .map(|spec| spec.resolve(&headers, "receiver"))
        .transpose()?;

    let mut seen = HashSet::new();
    for col in [Some(caller_col), Some(tower_col), Some(time_col), receiver_col]
        .into_iter()
        .flatten()
    {
        if !seen.insert(col) {
            return Err(Error::InvalidConfig(format!(
                "column {col} assigned to two fields"
            )));
        }
    }

    let mut records = Vec::new();
    let mut span: Option<(NaiveDateTime, NaiveDateTime)> = None;
    for row in csv_reader.records() {
        let row = row?;
        let line = record_line(&row);
        let caller = field(&row, caller_col, "caller")?.trim();
        if caller.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty caller id".into(),
            });
        }
        let tower = field(&row, tower_col, "tower")?.trim();
        if tower.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty tower id".into(),
            });
        }
        let time_text = field(&row, time_col, "time")?.trim();
        let timestamp = NaiveDateTime::parse_from_str(time_text, &schema.time_format)
            .map_err(|e| Error::Parse {
                line,
                message: format!("unparseable time `{time_text}`: {e}"),
            })?
            .with_second(0)
            .and_then(|t| t.with_nanosecond(0))
            .expect("zero is a valid second");
        let receiver = match receiver_col {
            Some(col) => {
                let text = row.get(col).unwrap_or("").trim();
                (!text.is_empty()).then(|| text.to_string())
            }
            None => None,
        };
        span = Some(match span {
            None => (timestamp, timestamp),
            Some((lo, hi)) => (lo.min(timestamp), hi.max(timestamp)),
        });
        records.push(RawRecord {
            caller_id: caller.to_string(),
            receiver_id: receiver,
            tower_id: tower.to_string(),
            timestamp,
        });
    }

    let (earliest, latest) = span.ok_or(Error::EmptyInput("CDR stream has no records"))?;
    let period_start = crate::model::local_midnight(earliest);
    let period_end = crate::model::local_midnight(latest)
        .checked_add_signed(chrono::Duration::days(1))
        .expect("period end in range");
    RawDataset::new(records, period_start, period_end, schema.timezone.clone())
}

/// Writes a dataset back out as delimited text with the default column
/// layout, callers ascending, records in stored order.
pub fn write_cdr<W: Write>(writer: W, dataset: &RawDataset, schema: &CdrSchemaConfig) -> Result<()> {
    let mut csv_writer = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(writer);
    csv_writer.write_record(["caller_id", "receiver_id", "tower_id", "time"])?;
    for (_, records) in dataset.groups() {
        for record in records {
            csv_writer.write_record([
                record.caller_id.as_str(),
                record.receiver_id.as_deref().unwrap_or(""),
                record.tower_id.as_str(),
                &record.timestamp.format(&schema.time_format).to_string(),
            ])?;
        }
    }
    csv_writer.flush()?;
    Ok(())
}
