use std::path::{Path, PathBuf};

use anyhow::Context;
use deferral::losses::LossSelector;
use deferral::models::{Optimizer, TrainConfig};
use deferral::sweep::{TrialSettings, DEFAULT_SIZES};
use deferral::synth::{MogConfig, TaskSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Marks errors that should exit with the invalid-config status.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn invalid(msg: impl std::fmt::Display) -> anyhow::Error {
    let msg = msg.to_string();
    let msg = msg.strip_prefix("invalid config: ").map(str::to_string).unwrap_or(msg);
    ConfigError(msg).into()
}

/// Reads a JSON config, or returns the default when no path is given.
/// Relative paths inside the config resolve against its directory.
pub fn load<T: DeserializeOwned + Default + Versioned>(path: Option<&Path>) -> anyhow::Result<(T, PathBuf)> {
    let Some(path) = path else {
        return Ok((T::default(), PathBuf::from(".")));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let doc: T = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if doc.version() != CONFIG_VERSION {
        return Err(invalid(format!("unsupported config version {}", doc.version())));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((doc, base))
}

pub trait Versioned {
    fn version(&self) -> u32;
}

fn version_one() -> u32 {
    CONFIG_VERSION
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MogBlock {
    pub input_dim: usize,
    pub components: usize,
    pub n: usize,
    pub n_e: usize,
    pub samples: usize,
    /// Rows of an independent test file; 0 writes none.
    pub test_samples: usize,
}

impl Default for MogBlock {
    fn default() -> Self {
        let m = MogConfig::default();
        Self { input_dim: m.input_dim, components: m.components, n: m.n, n_e: m.n_e, samples: m.samples, test_samples: 0 }
    }
}

impl MogBlock {
    pub fn to_config(&self, seed: u64) -> MogConfig {
        MogConfig {
            input_dim: self.input_dim,
            components: self.components,
            n: self.n,
            n_e: self.n_e,
            samples: self.samples,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Mog(MogBlock),
    TwoStage { n_e: usize, input_dim: usize, samples: usize },
    DiscreteTask { spec: TaskSpec, #[serde(default)] index: u64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDataConfig {
    #[serde(default = "version_one")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub generator: Generator,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self { version: CONFIG_VERSION, seed: 0, generator: Generator::Mog(MogBlock::default()) }
    }
}

impl Versioned for GenDataConfig {
    fn version(&self) -> u32 {
        self.version
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear {},
    Mlp { hidden: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    #[serde(default = "version_one")]
    pub version: u32,
    /// Initialization seed.
    #[serde(default)]
    pub seed: u64,
    pub dataset: PathBuf,
    #[serde(default)]
    pub test_dataset: Option<PathBuf>,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    pub loss: LossSelector,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_model() -> ModelSpec {
    ModelSpec::Linear {}
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            dataset: PathBuf::new(),
            test_dataset: None,
            model: default_model(),
            loss: LossSelector::Mae {},
            train: TrainConfig::default(),
        }
    }
}

impl Versioned for TrainRunConfig {
    fn version(&self) -> u32 {
        self.version
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub version: u32,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub methods: Vec<String>,
    pub trials: usize,
    pub mog: MogBlock,
    pub test_samples: usize,
    /// `q` of the `mao24` baseline.
    pub mao_q: f64,
    pub train: TrainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let settings = TrialSettings::default();
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            sizes: DEFAULT_SIZES.to_vec(),
            methods: deferral::sweep::Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            trials: 5,
            mog: MogBlock::default(),
            test_samples: settings.test_samples,
            mao_q: settings.mao_q,
            train: TrainConfig {
                learning_rate: 5.0,
                epochs: 2000,
                optimizer: Optimizer::Momentum { beta: 0.9 },
                ..TrainConfig::default()
            },
        }
    }
}

impl Versioned for SweepConfig {
    fn version(&self) -> u32 {
        self.version
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub version: u32,
    pub seed: u64,
    pub suite: String,
    pub instances: usize,
    /// Check one task read from this file instead of a random corpus.
    pub task_path: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { version: CONFIG_VERSION, seed: 0, suite: "theorem3".into(), instances: 1000, task_path: None }
    }
}

impl Versioned for VerifyConfig {
    fn version(&self) -> u32 {
        self.version
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
