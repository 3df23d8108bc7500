//! Experiment execution: single runs, scheme sweeps, and comparisons.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use splitsim_core::orchestrator::{
    RoundRecord, Session, SessionConfig, VehicleExecutor, VehicleOutcome, VehicleTask,
};

use crate::config::{resolve, ResolvedRun, RunConfig, SchemeToken};
use crate::dataio::write_partition_json;
use crate::error::CliError;
use crate::metrics::{read_totals, write_metrics_csv, write_summary_json, FileTotals, RunSummary};

/// Runs per-vehicle tasks on the rayon thread pool. Outcomes come back in
/// task order, so results are identical to sequential execution.
pub struct RayonExecutor;

impl VehicleExecutor for RayonExecutor {
    fn execute<'a>(&self, tasks: Vec<VehicleTask<'a>>) -> Vec<VehicleOutcome> {
        tasks.into_par_iter().map(|task| task()).collect()
    }
}

pub struct RunArtifacts {
    pub metrics_path: PathBuf,
    pub summary_path: PathBuf,
    pub partition_path: PathBuf,
    pub records: Vec<RoundRecord>,
    pub summary: RunSummary,
}

/// Runs all configured rounds and writes the metrics CSV, summary JSON and
/// partition export into `out_dir`.
pub fn run_experiment(config: &RunConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let resolved = resolve(config)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let records = run_rounds(&resolved)?;

    let stem = resolved.token.stem();
    let metrics_path = out_dir.join(format!("metrics_{stem}.csv"));
    let summary_path = out_dir.join(format!("summary_{stem}.json"));
    let partition_path = out_dir.join(format!("partition_{stem}.json"));

    write_metrics_csv(&metrics_path, &resolved.fingerprint, &records)?;
    let summary = RunSummary::from_records(
        &resolved.fingerprint,
        &stem,
        &records,
        resolved.config.clone(),
    );
    write_summary_json(&summary_path, &summary)?;
    let ids: Vec<usize> = resolved.fleet.vehicles.iter().map(|v| v.id).collect();
    write_partition_json(&resolved.partition, &ids, &partition_path)?;

    Ok(RunArtifacts {
        metrics_path,
        summary_path,
        partition_path,
        records,
        summary,
    })
}

/// Executes the resolved run's rounds without touching the filesystem.
pub fn run_rounds(resolved: &ResolvedRun) -> Result<Vec<RoundRecord>, CliError> {
    let executor = RayonExecutor;
    let mut session = Session::new(
        SessionConfig {
            spec: &resolved.spec,
            data: &resolved.train,
            partition: &resolved.partition,
            test: resolved.test.as_ref(),
            fleet: &resolved.fleet,
            scheme: resolved.scheme,
            hp: resolved.hp,
            aggregation: resolved.aggregation,
            seed: resolved.seed,
        },
        &executor,
    )?;
    let mut records = Vec::with_capacity(resolved.rounds);
    for _ in 0..resolved.rounds {
        records.push(session.run_round()?);
    }
    Ok(records)
}

/// Runs one experiment per scheme token, reusing the base config.
pub fn sweep(
    config: &RunConfig,
    tokens: &[SchemeToken],
    out_dir: &Path,
) -> Result<Vec<RunArtifacts>, CliError> {
    let mut artifacts = Vec::with_capacity(tokens.len());
    for token in tokens {
        let mut cfg = config.clone();
        cfg.scheme = Some(token.stem());
        artifacts.push(run_experiment(&cfg, out_dir)?);
    }
    Ok(artifacts)
}

/// Side-by-side totals of several metrics files with ratios against the
/// first file. Returns the rendered text table and the CSV rows.
pub fn compare(paths: &[PathBuf]) -> Result<(String, Vec<Vec<String>>), CliError> {
    if paths.len() < 2 {
        return Err(CliError::Config(
            "compare: need at least two metrics files".into(),
        ));
    }
    for p in paths {
        if !p.exists() {
            return Err(CliError::Config(format!(
                "compare: no such file: {}",
                p.display()
            )));
        }
    }
    let totals: Vec<FileTotals> = paths
        .iter()
        .map(|p| read_totals(p))
        .collect::<Result<_, _>>()?;
    let base = &totals[0];

    let ratio = |num: f64, den: f64| -> String {
        if den == 0.0 {
            "-".into()
        } else {
            format!("{:.4}", num / den)
        }
    };
    let acc_str = |a: Option<f64>| a.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());

    let mut rows: Vec<Vec<String>> = vec![vec![
        "file".into(),
        "scheme".into(),
        "fingerprint".into(),
        "rounds".into(),
        "total_bytes".into(),
        "total_wall_clock_s".into(),
        "final_test_accuracy".into(),
        "bytes_vs_first".into(),
        "wall_clock_vs_first".into(),
    ]];
    for t in &totals {
        rows.push(vec![
            t.path.clone(),
            t.scheme.clone(),
            t.fingerprint.clone(),
            t.rounds.to_string(),
            t.total_bytes.to_string(),
            format!("{:.6}", t.total_wall_clock_s),
            acc_str(t.final_test_accuracy),
            ratio(t.total_bytes as f64, base.total_bytes as f64),
            ratio(t.total_wall_clock_s, base.total_wall_clock_s),
        ]);
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut table = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        table.push_str(line.join("  ").trim_end());
        table.push('\n');
    }
    Ok((table, rows))
}

pub fn write_comparison_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}
