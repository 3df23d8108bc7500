//! Run configuration: JSON schema, defaults, flag overrides, validation and
//! resolution into core types.
//!
//! Defaults mirror the reference experiment setup: learning rate 0.0001,
//! batch size 16, 5 local epochs, 4 vehicles, and 6-of-10 label skew with a
//! rank power law for the non-IID partition.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use splitsim_core::data::{partition_iid, partition_noniid, synth_dataset, Dataset, Partition};
use splitsim_core::model::{resmini, ModelSpec};
use splitsim_core::net::{RsuProfile, VehicleProfile};
use splitsim_core::orchestrator::{
    AggregationMode, Fleet, HyperParams, SchemeKind, SelectionThresholds,
};
use splitsim_core::split::CutIndex;
use splitsim_core::LayerKind;

use crate::dataio;
use crate::error::CliError;

/// Default mean channel rates (bit/s), cycled across the fleet; they span
/// the four default threshold bands.
pub const DEFAULT_MEAN_RATES: [f64; 4] = [1.5e6, 3e6, 6e6, 12e6];
pub const DEFAULT_THRESHOLDS: [f64; 4] = [2e6, 4e6, 8e6, 16e6];
pub const DEFAULT_VEHICLE_CAPACITY: f64 = 1e8;
pub const DEFAULT_RSU_CAPACITY: f64 = 2e9;
pub const DEFAULT_BROADCAST_RATE: f64 = 1e9;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scheme: Option<String>,
    pub model: ModelConfig,
    pub dataset: DatasetConfig,
    pub partition: PartitionConfig,
    pub n_vehicles: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Cut layer for `sl`/`sfl`; defaults to 1 for `sl` and 4 for `sfl`.
    pub cut: Option<usize>,
    /// Threshold speeds r1..r4 (bit/s) for `asfl`.
    pub thresholds: [f64; 4],
    pub aggregation: String,
    /// Explicit per-vehicle profiles; generated from `n_vehicles` if absent.
    pub fleet: Option<Vec<VehicleConfig>>,
    pub rsu: RsuConfig,
    pub seed: u64,
    /// Output directory; flag and SPLITSIM_OUT_DIR take precedence.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: None,
            model: ModelConfig::default(),
            dataset: DatasetConfig::default(),
            partition: PartitionConfig::default(),
            n_vehicles: 4,
            rounds: 30,
            local_epochs: 5,
            batch_size: 16,
            lr: 1e-4,
            cut: None,
            thresholds: DEFAULT_THRESHOLDS,
            aggregation: "fedavg-mean".into(),
            fleet: None,
            rsu: RsuConfig::default(),
            seed: 42,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ModelConfig {
    Name(String),
    Inline(ModelSpecConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Name("resmini".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecConfig {
    pub input_shape: Vec<usize>,
    pub num_classes: usize,
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerConfig {
    Dense { inputs: usize, outputs: usize },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool { kernel: usize, stride: usize },
    AvgPoolGlobal,
    Flatten,
    ResidualBlock { channels: usize },
}

impl From<&LayerConfig> for LayerKind {
    fn from(l: &LayerConfig) -> Self {
        match *l {
            LayerConfig::Dense { inputs, outputs } => LayerKind::Dense { inputs, outputs },
            LayerConfig::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            },
            LayerConfig::Relu => LayerKind::Relu,
            LayerConfig::MaxPool { kernel, stride } => LayerKind::MaxPool { kernel, stride },
            LayerConfig::AvgPoolGlobal => LayerKind::AvgPoolGlobal,
            LayerConfig::Flatten => LayerKind::Flatten,
            LayerConfig::ResidualBlock { channels } => LayerKind::ResidualBlock { channels },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synth {
        num_classes: usize,
        per_class: usize,
        /// Extra per-class samples synthesized from the same class templates
        /// and held out as the test set (0 disables evaluation).
        test_per_class: usize,
        input_shape: Vec<usize>,
    },
    Csv {
        path: PathBuf,
        test_path: Option<PathBuf>,
        input_shape: Vec<usize>,
        num_classes: usize,
    },
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synth {
            num_classes: 10,
            per_class: 200,
            test_per_class: 40,
            input_shape: vec![1, 16, 16],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    Iid,
    Noniid {
        labels_per_vehicle: usize,
        power_alpha: f64,
    },
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig::Noniid {
            labels_per_vehicle: 6,
            power_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleConfig {
    pub id: Option<usize>,
    pub compute_capacity: f64,
    pub mean_rate: f64,
    pub jitter: f64,
    /// Seconds inside the communication range; `null` means forever.
    pub dwell_time: Option<f64>,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            id: None,
            compute_capacity: DEFAULT_VEHICLE_CAPACITY,
            mean_rate: DEFAULT_MEAN_RATES[0],
            jitter: 0.1,
            dwell_time: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RsuConfig {
    pub compute_capacity: f64,
    pub broadcast_rate: f64,
}

impl Default for RsuConfig {
    fn default() -> Self {
        Self {
            compute_capacity: DEFAULT_RSU_CAPACITY,
            broadcast_rate: DEFAULT_BROADCAST_RATE,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Stable fingerprint of the fully-resolved configuration (seed
    /// included): the first 16 hex digits of the SHA-256 of its canonical
    /// JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// A scheme token: the scheme name optionally suffixed with a cut layer
/// (`sfl4`, `sl1`), as used by sweep mode and output file stems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeToken {
    pub name: String,
    pub cut: Option<usize>,
}

impl SchemeToken {
    pub fn parse(token: &str) -> Result<Self, CliError> {
        let trimmed = token.trim();
        let split_at = trimmed
            .find(|c: char| c.is_ascii_digit())
            .unwrap_or(trimmed.len());
        let (name, digits) = trimmed.split_at(split_at);
        let cut = if digits.is_empty() {
            None
        } else {
            Some(digits.parse::<usize>().map_err(|_| {
                CliError::Config(format!("scheme: invalid cut suffix in {trimmed:?}"))
            })?)
        };
        match name {
            "cl" | "fl" | "sl" | "sfl" | "asfl" => {}
            other => {
                return Err(CliError::Config(format!(
                    "scheme: unknown scheme {other:?} (expected cl, fl, sl, sfl or asfl)"
                )))
            }
        }
        if cut.is_some() && !matches!(name, "sl" | "sfl") {
            return Err(CliError::Config(format!(
                "scheme: {name:?} does not take a cut suffix"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            cut,
        })
    }

    /// File stem used for this token's outputs.
    pub fn stem(&self) -> String {
        match self.cut {
            Some(c) => format!("{}{c}", self.name),
            None => self.name.clone(),
        }
    }
}

/// A run configuration resolved into core types, ready to execute.
pub struct ResolvedRun {
    pub spec: ModelSpec,
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub partition: Partition,
    pub fleet: Fleet,
    pub scheme: SchemeKind,
    pub token: SchemeToken,
    pub hp: HyperParams,
    pub aggregation: AggregationMode,
    pub seed: u64,
    pub rounds: usize,
    pub fingerprint: String,
    pub config: RunConfig,
}

pub fn resolve(config: &RunConfig) -> Result<ResolvedRun, CliError> {
    let token_str = config
        .scheme
        .as_deref()
        .ok_or_else(|| CliError::Config("scheme: missing (set in config file or --scheme)".into()))?;
    let token = SchemeToken::parse(token_str)?;

    let spec = match &config.model {
        ModelConfig::Name(name) if name == "resmini" => resmini(),
        ModelConfig::Name(other) => {
            return Err(CliError::Config(format!(
                "model: unknown model name {other:?} (only \"resmini\" is built in)"
            )))
        }
        ModelConfig::Inline(m) => ModelSpec::new(
            m.layers.iter().map(LayerKind::from).collect(),
            m.input_shape.clone(),
            m.num_classes,
        )
        .map_err(|e| CliError::Config(format!("model: {e}")))?,
    };

    let (train, test) = match &config.dataset {
        DatasetConfig::Synth {
            num_classes,
            per_class,
            test_per_class,
            input_shape,
        } => {
            let all = synth_dataset(
                *num_classes,
                per_class + test_per_class,
                input_shape,
                config.seed,
            )
            .map_err(|e| CliError::Config(format!("dataset: {e}")))?;
            let (train, test) = all.split_per_class(*per_class);
            (train, if *test_per_class > 0 { Some(test) } else { None })
        }
        DatasetConfig::Csv {
            path,
            test_path,
            input_shape,
            num_classes,
        } => {
            let train = dataio::load_csv(path, input_shape, *num_classes)?;
            let test = match test_path {
                Some(p) => Some(dataio::load_csv(p, input_shape, *num_classes)?),
                None => None,
            };
            (train, test)
        }
    };

    let partition = match &config.partition {
        PartitionConfig::Iid => partition_iid(&train, config.n_vehicles, config.seed),
        PartitionConfig::Noniid {
            labels_per_vehicle,
            power_alpha,
        } => partition_noniid(
            &train,
            config.n_vehicles,
            *labels_per_vehicle,
            *power_alpha,
            config.seed,
        ),
    }
    .map_err(|e| CliError::Config(format!("partition: {e}")))?;

    let vehicles: Vec<VehicleProfile> = match &config.fleet {
        Some(list) => {
            if list.len() != config.n_vehicles {
                return Err(CliError::Config(format!(
                    "fleet: {} profiles for n_vehicles = {}",
                    list.len(),
                    config.n_vehicles
                )));
            }
            list.iter()
                .enumerate()
                .map(|(i, v)| VehicleProfile {
                    id: v.id.unwrap_or(i),
                    compute_capacity: v.compute_capacity,
                    mean_rate: v.mean_rate,
                    jitter: v.jitter,
                    dwell_time: v.dwell_time,
                })
                .collect()
        }
        None => (0..config.n_vehicles)
            .map(|i| VehicleProfile {
                id: i,
                compute_capacity: DEFAULT_VEHICLE_CAPACITY,
                mean_rate: DEFAULT_MEAN_RATES[i % DEFAULT_MEAN_RATES.len()],
                jitter: 0.1,
                dwell_time: None,
            })
            .collect(),
    };
    for v in &vehicles {
        v.validate()
            .map_err(|e| CliError::Config(format!("fleet: vehicle {}: {e}", v.id)))?;
    }
    let rsu = RsuProfile {
        compute_capacity: config.rsu.compute_capacity,
        broadcast_rate: config.rsu.broadcast_rate,
    };
    rsu.validate()
        .map_err(|e| CliError::Config(format!("rsu: {e}")))?;

    let aggregation = match config.aggregation.as_str() {
        "fedavg-mean" => AggregationMode::FedAvgMean,
        "paper-literal" => AggregationMode::PaperLiteral,
        "data-weighted" => AggregationMode::DataWeighted,
        other => {
            return Err(CliError::Config(format!(
                "aggregation: unknown mode {other:?}"
            )))
        }
    };

    let cut_for = |default: usize| -> Result<CutIndex, CliError> {
        let value = token.cut.or(config.cut).unwrap_or(default);
        CutIndex::for_model(value, &spec)
            .map_err(|e| CliError::Config(format!("cut: {e}")))
    };
    let scheme = match token.name.as_str() {
        "cl" => SchemeKind::Cl,
        "fl" => SchemeKind::Fl,
        "sl" => SchemeKind::Sl { cut: cut_for(1)? },
        "sfl" => SchemeKind::Sfl { cut: cut_for(4)? },
        "asfl" => {
            let [r1, r2, r3, r4] = config.thresholds;
            SchemeKind::Asfl {
                thresholds: SelectionThresholds::new(r1, r2, r3, r4)
                    .map_err(|e| CliError::Config(format!("thresholds: {e}")))?,
            }
        }
        _ => unreachable!("token validated"),
    };

    if config.rounds == 0 && config.scheme.is_none() {
        return Err(CliError::Config("rounds: missing".into()));
    }

    // freeze the fully-resolved config (scheme token normalized) for the
    // fingerprint embedded in every output row
    let mut resolved_config = config.clone();
    resolved_config.scheme = Some(token.stem());
    let fingerprint = resolved_config.fingerprint();

    Ok(ResolvedRun {
        spec,
        train,
        test,
        partition,
        fleet: Fleet { vehicles, rsu },
        scheme,
        token,
        hp: HyperParams {
            lr: config.lr,
            batch_size: config.batch_size,
            local_epochs: config.local_epochs,
        },
        aggregation,
        seed: config.seed,
        rounds: config.rounds,
        fingerprint,
        config: resolved_config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_setup() {
        let cfg = RunConfig {
            scheme: Some("fl".into()),
            ..RunConfig::default()
        };
        assert_eq!(cfg.lr, 1e-4);
        assert_eq!(cfg.batch_size, 16);
        assert_eq!(cfg.local_epochs, 5);
        assert_eq!(cfg.n_vehicles, 4);
        match cfg.partition {
            PartitionConfig::Noniid {
                labels_per_vehicle,
                power_alpha,
            } => {
                assert_eq!(labels_per_vehicle, 6);
                assert_eq!(power_alpha, 1.0);
            }
            _ => panic!("default partition should be label-skewed"),
        }
        let resolved = resolve(&cfg).unwrap();
        assert_eq!(resolved.hp.lr, 1e-4);
        assert_eq!(resolved.fleet.vehicles.len(), 4);
        // the case-study assumption: vehicles stay in range indefinitely
        assert!(resolved.fleet.vehicles.iter().all(|v| v.dwell_time.is_none()));
    }

    #[test]
    fn threshold_ordering_is_rejected() {
        let cfg = RunConfig {
            scheme: Some("asfl".into()),
            thresholds: [3e6, 2e6, 1e6, 4e6],
            ..RunConfig::default()
        };
        match resolve(&cfg) {
            Err(err) => assert!(err.to_string().contains("thresholds"), "{err}"),
            Ok(_) => panic!("unordered thresholds accepted"),
        }
    }

    #[test]
    fn scheme_tokens() {
        assert_eq!(
            SchemeToken::parse("sfl4").unwrap(),
            SchemeToken {
                name: "sfl".into(),
                cut: Some(4)
            }
        );
        assert_eq!(SchemeToken::parse("fl").unwrap().stem(), "fl");
        assert!(SchemeToken::parse("fl4").is_err());
        assert!(SchemeToken::parse("bogus").is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_seed_sensitive() {
        let a = RunConfig {
            scheme: Some("fl".into()),
            ..RunConfig::default()
        };
        let b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = RunConfig { seed: 43, ..a.clone() };
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn unknown_scheme_is_a_config_error() {
        let cfg = RunConfig {
            scheme: Some("magic".into()),
            ..RunConfig::default()
        };
        assert!(matches!(resolve(&cfg), Err(CliError::Config(_))));
    }
}
