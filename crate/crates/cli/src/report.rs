//! Line-delimited JSON reports. The first line is a versioned header; each
//! following line is one record.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchRecord, SlopeRecord, SummaryRecord};
use crate::error::CliResult;

pub const FORMAT: &str = "dust-report";
pub const VERSION: u32 = 1;

/// Result of one `segment` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub model: String,
    pub n: usize,
    pub beta: f64,
    pub strategy: String,
    /// Right ends of the segments, 1-based, ending at `n`.
    pub changepoints: Vec<usize>,
    pub global_cost: f64,
    pub remaining_candidates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_trace: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header { format: String, version: u32, command: String },
    Segment(SegmentReport),
    Run(BenchRecord),
    Summary(SummaryRecord),
    Slope(SlopeRecord),
}

impl Record {
    pub fn header(command: &str) -> Self {
        Record::Header {
            format: FORMAT.into(),
            version: VERSION,
            command: command.into(),
        }
    }
}

/// Writes records one per line.
pub fn write_records<W: Write>(mut out: W, records: &[Record]) -> CliResult<()> {
    for r in records {
        let line = serde_json::to_string(r).expect("records serialise");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a report back into records.
pub fn read_records(text: &str) -> Result<Vec<Record>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
