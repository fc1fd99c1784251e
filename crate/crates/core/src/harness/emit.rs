//! CSV and JSON emission of regret traces and slope fits, plus parsers for
//! reading them back. Floats are written in shortest round-trip form, so
//! emitting then parsing reproduces values exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{RegretTrace, ReplicationFailure};
use super::slope::SlopeFit;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "checkpoint,mean_regret,std_regret,n_replications";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            _ => Err(Error::Parse(format!("cannot infer format of {}", path.display()))),
        }
    }
}

/// One checkpoint row as emitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub checkpoint: u64,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub n_replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub config_digest: String,
    pub rows: Vec<TraceRow>,
    /// `per_replication[r][j]` as in the in-memory trace.
    pub per_replication: Vec<Vec<f64>>,
    pub failures: Vec<ReplicationFailure>,
    pub floor_events: u64,
}

impl TraceDocument {
    pub fn from_trace(trace: &RegretTrace) -> Self {
        let mean = trace.mean();
        let std = trace.std();
        let rows = trace
            .checkpoints
            .iter()
            .enumerate()
            .map(|(j, &c)| TraceRow {
                checkpoint: c,
                mean_regret: mean[j],
                std_regret: std[j],
                n_replications: trace.n_replications(),
            })
            .collect();
        Self {
            config_digest: trace.config_digest.clone(),
            rows,
            per_replication: trace.per_replication.clone(),
            failures: trace.failures.clone(),
            floor_events: trace.floor_events,
        }
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.checkpoint).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_regret).collect()
    }
}

pub fn rows_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.checkpoint, r.mean_regret, r.std_regret, r.n_replications);
    }
    out
}

pub fn trace_to_csv(trace: &RegretTrace) -> String {
    rows_to_csv(&TraceDocument::from_trace(trace).rows)
}

pub fn trace_to_json(trace: &RegretTrace) -> String {
    serde_json::to_string_pretty(&TraceDocument::from_trace(trace)).expect("trace serializes") + "\n"
}

pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("row {}: expected 4 fields", i + 1)));
            }
            let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", i + 1));
            Ok(TraceRow {
                checkpoint: fields[0].trim().parse().map_err(|_| bad("checkpoint"))?,
                mean_regret: fields[1].trim().parse().map_err(|_| bad("mean_regret"))?,
                std_regret: fields[2].trim().parse().map_err(|_| bad("std_regret"))?,
                n_replications: fields[3].trim().parse().map_err(|_| bad("n_replications"))?,
            })
        })
        .collect()
}

pub fn parse_json(text: &str) -> Result<TraceDocument> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Rows from a CSV or JSON trace file.
pub fn read_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path)?;
    match Format::from_path(path)? {
        Format::Csv => parse_csv(&text),
        Format::Json => Ok(parse_json(&text)?.rows),
    }
}

pub fn write_trace(trace: &RegretTrace, path: &Path, format: Format) -> Result<()> {
    let body = match format {
        Format::Csv => trace_to_csv(trace),
        Format::Json => trace_to_json(trace),
    };
    std::fs::write(path, body)?;
    Ok(())
}

pub fn fit_to_json(fit: &SlopeFit) -> String {
    serde_json::to_string_pretty(fit).expect("fit serializes") + "\n"
}

pub fn fit_to_csv(fit: &SlopeFit) -> String {
    format!(
        "exponent,intercept,residual,first_checkpoint,last_checkpoint\n{},{},{},{},{}\n",
        fit.exponent, fit.intercept, fit.residual, fit.first_checkpoint, fit.last_checkpoint
    )
}

pub fn write_fit(fit: &SlopeFit, path: &Path, format: Format) -> Result<()> {
    let body = match format {
        Format::Csv => fit_to_csv(fit),
        Format::Json => fit_to_json(fit),
    };
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<TraceRow> {
        vec![
            TraceRow { checkpoint: 10, mean_regret: 0.1 + 0.2, std_regret: 1.0 / 3.0, n_replications: 3 },
            TraceRow { checkpoint: 100, mean_regret: 12345.678901234567, std_regret: 0.0, n_replications: 3 },
        ]
    }

    #[test]
    fn csv_header_and_round_trip() {
        let csv = rows_to_csv(&rows());
        assert!(csv.starts_with("checkpoint,mean_regret,std_regret,n_replications\n"));
        assert_eq!(parse_csv(&csv).unwrap(), rows());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_csv("t,mean\n1,2\n").is_err());
    }
}
