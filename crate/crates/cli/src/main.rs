//! Command-line surface: `run`, `sweep` and `compare`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use splitsim_cli::config::{
    DatasetConfig, ModelConfig, PartitionConfig, RsuConfig, RunConfig, SchemeToken, VehicleConfig,
};
use splitsim_cli::error::CliError;
use splitsim_cli::{resolve_out_dir, runner};

#[derive(Parser)]
#[command(
    name = "splitsim",
    about = "Desk-scale simulator for split and federated training over a vehicular edge network",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write per-round metrics, a summary and the
    /// partition export.
    Run(RunArgs),
    /// Run one experiment per scheme (e.g. fl,sl,sfl2,sfl4,sfl6,sfl8,asfl)
    /// from a shared base configuration.
    Sweep(SweepArgs),
    /// Compare two or more metrics files: totals side by side plus ratios
    /// against the first file.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; every field can be overridden by a flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training scheme: cl, fl, sl, sfl or asfl (sl/sfl accept a cut suffix,
    /// e.g. sfl4).
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    local_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    n_vehicles: Option<usize>,
    /// Cut layer for sl/sfl.
    #[arg(long)]
    cut: Option<usize>,
    /// Threshold speeds r1,r2,r3,r4 in bit/s for asfl.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Aggregation mode: fedavg-mean, paper-literal or data-weighted.
    #[arg(long)]
    aggregation: Option<String>,
    /// Partition mode: iid or noniid.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    labels_per_vehicle: Option<usize>,
    #[arg(long)]
    power_alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Model as a name ("resmini") or inline JSON spec.
    #[arg(long)]
    model_json: Option<String>,
    /// Dataset source as inline JSON.
    #[arg(long)]
    dataset_json: Option<String>,
    /// Fleet profiles as inline JSON.
    #[arg(long)]
    fleet_json: Option<String>,
    /// Roadside-unit profile as inline JSON.
    #[arg(long)]
    rsu_json: Option<String>,
    /// Output directory (falls back to SPLITSIM_OUT_DIR, then ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated scheme tokens, e.g. fl,sl,sfl2,sfl4,sfl6,sfl8,asfl.
    #[arg(long, value_delimiter = ',', required = true)]
    schemes: Vec<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Metrics CSV files produced by `run` or `sweep`.
    #[arg(required = true, num_args = 2..)]
    files: Vec<PathBuf>,
    /// Also write the comparison table as CSV to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_json_flag<T: serde::de::DeserializeOwned>(
    name: &str,
    text: &str,
) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("{name}: {e}")))
}

/// Defaults, then the config file, then flags: later layers win.
fn build_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &args.scheme {
        cfg.scheme = Some(s.clone());
    }
    if let Some(v) = args.rounds {
        cfg.rounds = v;
    }
    if let Some(v) = args.local_epochs {
        cfg.local_epochs = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.n_vehicles {
        cfg.n_vehicles = v;
    }
    if let Some(v) = args.cut {
        cfg.cut = Some(v);
    }
    if let Some(t) = &args.thresholds {
        let [r1, r2, r3, r4] = <[f64; 4]>::try_from(t.as_slice()).map_err(|_| {
            CliError::Config(format!("thresholds: expected 4 values, got {}", t.len()))
        })?;
        cfg.thresholds = [r1, r2, r3, r4];
    }
    if let Some(a) = &args.aggregation {
        cfg.aggregation = a.clone();
    }
    if let Some(mode) = &args.partition {
        cfg.partition = match mode.as_str() {
            "iid" => PartitionConfig::Iid,
            "noniid" => match cfg.partition {
                PartitionConfig::Noniid { .. } => cfg.partition,
                PartitionConfig::Iid => PartitionConfig::default(),
            },
            other => {
                return Err(CliError::Config(format!(
                    "partition: unknown mode {other:?} (expected iid or noniid)"
                )))
            }
        };
    }
    if args.labels_per_vehicle.is_some() || args.power_alpha.is_some() {
        let (mut labels, mut alpha) = match cfg.partition {
            PartitionConfig::Noniid {
                labels_per_vehicle,
                power_alpha,
            } => (labels_per_vehicle, power_alpha),
            PartitionConfig::Iid => (6, 1.0),
        };
        if let Some(v) = args.labels_per_vehicle {
            labels = v;
        }
        if let Some(v) = args.power_alpha {
            alpha = v;
        }
        cfg.partition = PartitionConfig::Noniid {
            labels_per_vehicle: labels,
            power_alpha: alpha,
        };
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(text) = &args.model_json {
        cfg.model = if text.trim_start().starts_with(['{', '[']) {
            parse_json_flag::<ModelConfig>("model_json", text)?
        } else {
            ModelConfig::Name(text.trim().to_string())
        };
    }
    if let Some(text) = &args.dataset_json {
        cfg.dataset = parse_json_flag::<DatasetConfig>("dataset_json", text)?;
    }
    if let Some(text) = &args.fleet_json {
        cfg.fleet = Some(parse_json_flag::<Vec<VehicleConfig>>("fleet_json", text)?);
    }
    if let Some(text) = &args.rsu_json {
        cfg.rsu = parse_json_flag::<RsuConfig>("rsu_json", text)?;
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let cfg = build_config(&args.config)?;
    let out_dir = resolve_out_dir(args.config.out.clone(), cfg.out.as_deref());
    let artifacts = runner::run_experiment(&cfg, &out_dir)?;
    println!(
        "wrote {} ({} rounds), {}, {}",
        artifacts.metrics_path.display(),
        artifacts.records.len(),
        artifacts.summary_path.display(),
        artifacts.partition_path.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = build_config(&args.config)?;
    let tokens = args
        .schemes
        .iter()
        .map(|t| SchemeToken::parse(t))
        .collect::<Result<Vec<_>, _>>()?;
    let out_dir = resolve_out_dir(args.config.out.clone(), cfg.out.as_deref());
    let artifacts = runner::sweep(&cfg, &tokens, &out_dir)?;
    for a in &artifacts {
        println!(
            "wrote {} (final accuracy {}, total bytes {})",
            a.metrics_path.display(),
            a.summary
                .final_test_accuracy
                .map(|x| format!("{x:.4}"))
                .unwrap_or_else(|| "-".into()),
            a.summary.total_bytes
        );
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let (table, rows) = runner::compare(&args.files)?;
    print!("{table}");
    if let Some(path) = &args.out {
        runner::write_comparison_csv(path, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors; anything else is a usage
            // (configuration) problem
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
