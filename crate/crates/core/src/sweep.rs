//! Sample-size sweep on the realizable mixture: one linear scorer per
//! (method, size, trial), scored on a fresh test sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossSelector, PsiSpec, Stage};
use crate::models::{system_accuracy, train, LinearScorer, Optimizer, Scorer, TrainConfig};
use crate::rng::derive_seed;
use crate::synth::{MogConfig, MogTask};

pub const DEFAULT_SIZES: [usize; 7] = [250, 500, 1000, 2000, 4000, 8000, 16000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OursQ07,
    OursQ1,
    Verma23,
    Mao24,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::OursQ07, Method::OursQ1, Method::Verma23, Method::Mao24];

    pub fn name(self) -> &'static str {
        match self {
            Method::OursQ07 => "ours_q07",
            Method::OursQ1 => "ours_q1",
            Method::Verma23 => "verma23",
            Method::Mao24 => "mao24",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {name:?}")))
    }

    /// Surrogate trained by this method; `mao_q` sets the baseline's `Ψ_q`.
    pub fn loss(self, mao_q: f64) -> Result<LossSelector> {
        Ok(match self {
            Method::OursQ07 => LossSelector::SinglePsi { psi: PsiSpec::new(0.7)? },
            Method::OursQ1 => LossSelector::Mae {},
            Method::Verma23 => LossSelector::Verma {},
            Method::Mao24 => LossSelector::Mao { psi: PsiSpec::new(mao_q)? },
        })
    }
}

/// Settings shared by every trial of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialSettings {
    /// Mixture geometry; `samples` and `seed` are overridden per trial.
    pub mog: MogConfig,
    pub test_samples: usize,
    pub mao_q: f64,
    pub train: TrainConfig,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            mog: MogConfig::default(),
            test_samples: 10_000,
            mao_q: 0.0,
            train: TrainConfig {
                learning_rate: 5.0,
                epochs: 2000,
                optimizer: Optimizer::Momentum { beta: 0.9 },
                ..TrainConfig::default()
            },
        }
    }
}

/// Seed of the data distribution and sample for `(size, trial)`. Methods
/// share it, so they are compared on identical data.
pub fn data_seed(master: u64, size: usize, trial: usize) -> u64 {
    derive_seed(master, &format!("data/{size}"), trial as u64)
}

/// Seed of the scorer initialization for `(method, size, trial)`.
pub fn init_seed(master: u64, method: Method, size: usize, trial: usize) -> u64 {
    derive_seed(master, &format!("init/{}/{size}", method.name()), trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub method: Method,
    pub sample_size: usize,
    pub trial: usize,
    pub system_accuracy: f64,
}

pub fn run_trial(
    master: u64,
    method: Method,
    size: usize,
    trial: usize,
    settings: &TrialSettings,
) -> Result<TrialResult> {
    let mog = MogConfig { samples: size, seed: data_seed(master, size, trial), ..settings.mog.clone() };
    let task = MogTask::new(mog)?;
    let data = task.training_sample()?;
    let test = task.fresh_sample(settings.test_samples, 0)?;
    let width = task.config.shape().augmented_size();
    let init = Scorer::from(LinearScorer::init(task.config.input_dim, width, init_seed(master, method, size, trial)));
    let outcome = train(&init, &data, &method.loss(settings.mao_q)?, &settings.train)?;
    Ok(TrialResult {
        method,
        sample_size: size,
        trial,
        system_accuracy: system_accuracy(&outcome.scorer, &test, Stage::Single)?,
    })
}
