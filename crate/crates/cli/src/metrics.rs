//! Per-round metrics rows (CSV) and run summaries (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};
use splitsim_core::orchestrator::RoundRecord;

use crate::config::RunConfig;
use crate::error::CliError;

pub const METRICS_HEADER: [&str; 18] = [
    "fingerprint",
    "scheme",
    "round",
    "participants",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "wall_clock_s",
    "vehicle_compute_s",
    "rsu_compute_s",
    "comm_s",
    "model_down_bytes",
    "smashed_up_bytes",
    "gradient_down_bytes",
    "model_up_bytes",
    "total_bytes",
    "cuts",
    "dropped",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// One flattened round record plus the run's config fingerprint.
pub fn metrics_row(fingerprint: &str, record: &RoundRecord) -> Vec<String> {
    let cuts = record
        .vehicles
        .iter()
        .map(|v| v.cut.map(|c| c.to_string()).unwrap_or_else(|| "-".into()))
        .collect::<Vec<_>>()
        .join(";");
    let dropped = record.vehicles.iter().filter(|v| v.dropped).count();
    vec![
        fingerprint.to_string(),
        record.scheme.to_string(),
        record.round.to_string(),
        record.participants.to_string(),
        format!("{}", record.train_loss),
        opt(record.test_loss),
        opt(record.test_accuracy),
        format!("{}", record.wall_clock_s),
        format!("{}", record.vehicle_compute_s),
        format!("{}", record.rsu_compute_s),
        format!("{}", record.comm_s),
        record.bytes.model_down.to_string(),
        record.bytes.smashed_up.to_string(),
        record.bytes.gradient_down.to_string(),
        record.bytes.model_up.to_string(),
        record.bytes.total().to_string(),
        cuts,
        dropped.to_string(),
    ]
}

pub fn write_metrics_csv(
    path: &Path,
    fingerprint: &str,
    records: &[RoundRecord],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(METRICS_HEADER)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for record in records {
        writer
            .write_record(metrics_row(fingerprint, record))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub fingerprint: String,
    pub scheme: String,
    pub rounds: usize,
    pub participants_last_round: usize,
    pub final_train_loss: f64,
    pub final_test_loss: Option<f64>,
    pub final_test_accuracy: Option<f64>,
    pub total_bytes: u64,
    pub total_wall_clock_s: f64,
    pub config: RunConfig,
}

impl RunSummary {
    pub fn from_records(
        fingerprint: &str,
        scheme: &str,
        records: &[RoundRecord],
        config: RunConfig,
    ) -> Self {
        let last = records.last();
        Self {
            fingerprint: fingerprint.to_string(),
            scheme: scheme.to_string(),
            rounds: records.len(),
            participants_last_round: last.map_or(0, |r| r.participants),
            final_train_loss: last.map_or(0.0, |r| r.train_loss),
            final_test_loss: last.and_then(|r| r.test_loss),
            final_test_accuracy: last.and_then(|r| r.test_accuracy),
            total_bytes: records.iter().map(|r| r.bytes.total()).sum(),
            total_wall_clock_s: records.iter().map(|r| r.wall_clock_s).sum(),
            config,
        }
    }
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Runtime(format!("cannot serialize summary: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Totals extracted from one metrics file for comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct FileTotals {
    pub path: String,
    pub scheme: String,
    pub fingerprint: String,
    pub rounds: usize,
    pub total_bytes: u64,
    pub total_wall_clock_s: f64,
    pub final_test_accuracy: Option<f64>,
}

pub fn read_totals(path: &Path) -> Result<FileTotals, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let expected: Vec<&str> = METRICS_HEADER.to_vec();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(CliError::Config(format!(
            "{}: metrics schema mismatch (found columns {got:?})",
            path.display()
        )));
    }
    let mut totals = FileTotals {
        path: path.display().to_string(),
        scheme: String::new(),
        fingerprint: String::new(),
        rounds: 0,
        total_bytes: 0,
        total_wall_clock_s: 0.0,
        final_test_accuracy: None,
    };
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let field = |name: &str| -> &str {
            let idx = expected.iter().position(|h| *h == name).expect("header");
            &record[idx]
        };
        totals.fingerprint = field("fingerprint").to_string();
        totals.scheme = field("scheme").to_string();
        totals.rounds += 1;
        totals.total_bytes += field("total_bytes").parse::<u64>().map_err(|e| {
            CliError::Config(format!("{}: bad total_bytes: {e}", path.display()))
        })?;
        totals.total_wall_clock_s += field("wall_clock_s").parse::<f64>().map_err(|e| {
            CliError::Config(format!("{}: bad wall_clock_s: {e}", path.display()))
        })?;
        if !field("test_accuracy").is_empty() {
            totals.final_test_accuracy = field("test_accuracy").parse::<f64>().ok();
        }
    }
    Ok(totals)
}
