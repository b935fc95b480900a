//! Run configuration.
//!
//! Settings come from three layers, later layers winning: built-in defaults,
//! an optional TOML file of flat `key = value` pairs, and command-line flags.
//! Every key in the file has a flag of the same name with `_` replaced by
//! `-`. Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `transcript_dir`, `price_dir`, `output_dir` | input and output locations | `transcripts`, `prices`, `out` |
//! | `backend` | `builtin` or `bridge` | `builtin` |
//! | `bridge_url`, `bridge_timeout_secs` | remote embedding server | `http://127.0.0.1:8000`, 30 |
//! | `d_model`, `n_heads`, `n_layers`, `d_ff`, `vocab_size`, `max_tokens`, `pooling` | built-in encoder shape; pooling is `mean` or `first-token` | 64, 4, 2, 128, 4096, 256, `mean` |
//! | `label` | `absolute` or `relative` | `absolute` |
//! | `tau` | threshold for relative labels | 0 |
//! | `positive_class` | `up` or `down` | `up` |
//! | `split_date` | first test-period date | 2016-01-01 |
//! | `feature_set` | `index`, `benchmark`, `benchmark+index` or `all` | `all` |
//! | `weighting` | `per-pair` or `per-analyst` | `per-pair` |
//! | `seed` | seeds both the encoder weights and training | 0 |
//! | `l1`, `l2`, `learning_rate`, `epochs`, `batch_size`, `hidden`, `activation`, `fit_intercept` | classifier training | 0, 0.001, 0.05, 200, 16, `[8]`, `relu`, true |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use topicswitch_core::encoder::Pooling;
use topicswitch_core::market::{LabelKind, PositiveClass};
use topicswitch_core::models::{Activation, TrainConfig};
use topicswitch_core::tsi::Weighting;
use topicswitch_core::{Date, EncoderConfig, LabelSpec};

use crate::embed::BackendConfig;

pub const DEFAULT_BRIDGE_URL: &str = "http://127.0.0.1:8000";

/// Parses a command-line value with the same spelling serde uses.
fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_date(s: &str) -> Result<Date, String> {
    Date::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("invalid date `{s}`: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Builtin,
    Bridge,
}

/// Rows of the accuracy table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "benchmark")]
    Benchmark,
    #[serde(rename = "benchmark+index")]
    BenchmarkPlusIndex,
    #[serde(rename = "index")]
    Index,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Benchmark, FeatureSet::BenchmarkPlusIndex, FeatureSet::Index];

    /// Row label in the accuracy table.
    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::Benchmark => "Benchmark Feature",
            FeatureSet::BenchmarkPlusIndex => "Benchmark with Topic-Switching Index",
            FeatureSet::Index => "Topic-Switching Index",
        }
    }

    pub fn needs_benchmark(self) -> bool {
        self != FeatureSet::Index
    }
}

/// A `feature_set` setting: one row or all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSelection {
    One(FeatureSet),
    All(AllMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllMarker {
    All,
}

impl FeatureSelection {
    pub fn sets(self) -> Vec<FeatureSet> {
        match self {
            FeatureSelection::One(s) => vec![s],
            FeatureSelection::All(_) => FeatureSet::ALL.to_vec(),
        }
    }
}

impl FromStr for FeatureSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_value(s)
    }
}

/// Optional settings shared by the config file and the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Directory of transcript files (.txt plain, .json turns)
    #[arg(long)]
    pub transcript_dir: Option<PathBuf>,
    /// Directory of `<SYMBOL>.csv` price files
    #[arg(long)]
    pub price_dir: Option<PathBuf>,
    /// Directory for all outputs
    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Embedding backend: builtin or bridge
    #[arg(long, value_parser = serde_value::<BackendKind>)]
    pub backend: Option<BackendKind>,
    /// Base URL of the embedding server
    #[arg(long)]
    pub bridge_url: Option<String>,
    /// Per-request timeout for the embedding server, in seconds
    #[arg(long)]
    pub bridge_timeout_secs: Option<f64>,

    /// Encoder width
    #[arg(long)]
    pub d_model: Option<usize>,
    /// Attention heads (must divide d-model)
    #[arg(long)]
    pub n_heads: Option<usize>,
    /// Encoder layers
    #[arg(long)]
    pub n_layers: Option<usize>,
    /// Feed-forward inner width
    #[arg(long)]
    pub d_ff: Option<usize>,
    /// Hashed vocabulary size
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Tokens per encoder chunk
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Token pooling: mean or first-token
    #[arg(long, value_parser = serde_value::<Pooling>)]
    pub pooling: Option<Pooling>,

    /// Label rule: absolute or relative
    #[arg(long, value_parser = serde_value::<LabelKind>)]
    pub label: Option<LabelKind>,
    /// Threshold on the relative change for relative labels
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Which movement is labelled +1: up or down
    #[arg(long, value_parser = serde_value::<PositiveClass>)]
    pub positive_class: Option<PositiveClass>,
    /// Calls on or after this date form the test set
    #[arg(long, value_parser = parse_date)]
    pub split_date: Option<Date>,
    /// Feature rows to evaluate: index, benchmark, benchmark+index or all
    #[arg(long)]
    pub feature_set: Option<FeatureSelection>,
    /// Pair averaging: per-pair or per-analyst
    #[arg(long, value_parser = serde_value::<Weighting>)]
    pub weighting: Option<Weighting>,

    /// Seed for encoder weights and training
    #[arg(long)]
    pub seed: Option<u64>,
    /// ℓ1 penalty strength
    #[arg(long)]
    pub l1: Option<f64>,
    /// ℓ2 penalty strength
    #[arg(long)]
    pub l2: Option<f64>,
    /// SGD step size
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Passes over the training set
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hidden layer widths of the network, comma separated
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Hidden activation: relu or tanh
    #[arg(long, value_parser = serde_value::<Activation>)]
    pub activation: Option<Activation>,
    /// Learn a bias term
    #[arg(long)]
    pub fit_intercept: Option<bool>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Fills every unset field of `self` from `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),* $(,)?) => {
                Settings { $($f: self.$f.or(lower.$f)),* }
            };
        }
        pick!(
            transcript_dir,
            price_dir,
            output_dir,
            backend,
            bridge_url,
            bridge_timeout_secs,
            d_model,
            n_heads,
            n_layers,
            d_ff,
            vocab_size,
            max_tokens,
            pooling,
            label,
            tau,
            positive_class,
            split_date,
            feature_set,
            weighting,
            seed,
            l1,
            l2,
            learning_rate,
            epochs,
            batch_size,
            hidden,
            activation,
            fit_intercept,
        )
    }

    /// Resolves unset fields to their defaults and validates the result.
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let seed = self.seed.unwrap_or(0);
        let enc_default = EncoderConfig::default();
        let encoder = EncoderConfig {
            d_model: self.d_model.unwrap_or(enc_default.d_model),
            n_heads: self.n_heads.unwrap_or(enc_default.n_heads),
            n_layers: self.n_layers.unwrap_or(enc_default.n_layers),
            d_ff: self.d_ff.unwrap_or(enc_default.d_ff),
            vocab_size: self.vocab_size.unwrap_or(enc_default.vocab_size),
            max_tokens: self.max_tokens.unwrap_or(enc_default.max_tokens),
            seed,
            pooling: self.pooling.unwrap_or(enc_default.pooling),
        };
        encoder.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let backend = match self.backend.unwrap_or(BackendKind::Builtin) {
            BackendKind::Builtin => BackendConfig::Builtin(encoder),
            BackendKind::Bridge => {
                let timeout_secs = self.bridge_timeout_secs.unwrap_or(30.0);
                if !(timeout_secs > 0.0 && timeout_secs.is_finite()) {
                    return Err(ConfigError::Invalid("bridge_timeout_secs must be positive".into()));
                }
                BackendConfig::Bridge {
                    endpoint: self.bridge_url.unwrap_or_else(|| DEFAULT_BRIDGE_URL.to_string()),
                    timeout_secs,
                }
            }
        };

        let tau = self.tau.unwrap_or(0.0);
        if !tau.is_finite() {
            return Err(ConfigError::Invalid("tau must be finite".into()));
        }
        let label_spec = LabelSpec {
            kind: self.label.unwrap_or(LabelKind::Absolute),
            tau,
            positive_class: self.positive_class.unwrap_or_default(),
        };

        let t_default = TrainConfig::default();
        let train = TrainConfig {
            l1: self.l1.unwrap_or(t_default.l1),
            l2: self.l2.unwrap_or(t_default.l2),
            learning_rate: self.learning_rate.unwrap_or(t_default.learning_rate),
            epochs: self.epochs.unwrap_or(t_default.epochs),
            batch_size: self.batch_size.unwrap_or(t_default.batch_size),
            seed,
            fit_intercept: self.fit_intercept.unwrap_or(t_default.fit_intercept),
            hidden_layers: self.hidden.unwrap_or(t_default.hidden_layers),
            activation: self.activation.unwrap_or(t_default.activation),
        };
        train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        Ok(RunConfig {
            transcript_dir: self.transcript_dir.unwrap_or_else(|| "transcripts".into()),
            price_dir: self.price_dir.unwrap_or_else(|| "prices".into()),
            output_dir: self.output_dir.unwrap_or_else(|| "out".into()),
            backend,
            label_spec,
            split_date: self.split_date.unwrap_or_else(default_split_date),
            feature_sets: self.feature_set.unwrap_or(FeatureSelection::All(AllMarker::All)).sets(),
            train,
            weighting: self.weighting.unwrap_or_default(),
        })
    }
}

pub fn default_split_date() -> Date {
    Date::from_ymd_opt(2016, 1, 1).expect("valid constant date")
}

/// Fully resolved settings for one run. Serialised into the output
/// directory so every seed and hyperparameter is on record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub transcript_dir: PathBuf,
    pub price_dir: PathBuf,
    pub output_dir: PathBuf,
    pub backend: BackendConfig,
    pub label_spec: LabelSpec,
    pub split_date: Date,
    pub feature_sets: Vec<FeatureSet>,
    pub train: TrainConfig,
    pub weighting: Weighting,
}

impl Default for RunConfig {
    fn default() -> Self {
        Settings::default().resolve().expect("defaults are valid")
    }
}
