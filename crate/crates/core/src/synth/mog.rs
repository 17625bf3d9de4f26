use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Exec, CHUNK};
use crate::losses::{argmax, ProblemShape};
use crate::models::{LabeledDataset, LinearScorer};
use crate::rng::stream;

/// Bumped whenever a generator's output for a fixed seed changes.
pub const GENERATOR_VERSION: u32 = 1;

/// Rows of the fixed reference sample used to reject degenerate `h*`.
pub const REFERENCE_SAMPLES: usize = 10_000;

const MAX_REDRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MogConfig {
    pub input_dim: usize,
    pub components: usize,
    pub n: usize,
    pub n_e: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for MogConfig {
    fn default() -> Self {
        Self { input_dim: 16, components: 8, n: 4, n_e: 2, samples: 16_000, seed: 0 }
    }
}

impl MogConfig {
    pub fn validate(&self) -> Result<()> {
        ProblemShape::new(self.n, self.n_e)?;
        if self.input_dim == 0 || self.components == 0 {
            return Err(Error::InvalidConfig("input_dim and components must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> ProblemShape {
        ProblemShape { n: self.n, n_e: self.n_e }
    }
}

/// A drawn mixture together with its ground-truth scorer `h*`. Samples drawn
/// from it are realizable: `h*` has zero deferral loss on every row.
#[derive(Clone, Debug, PartialEq)]
pub struct MogTask {
    pub config: MogConfig,
    pub means: Vec<Vec<f64>>,
    pub h_star: LinearScorer,
}

impl MogTask {
    /// Draws means from `N(0, 4I)` and `h*` with standard normal weights and
    /// zero bias. `h*` is redrawn until it selects every one of the `n + n_e`
    /// actions somewhere on a fixed reference sample.
    pub fn new(config: MogConfig) -> Result<Self> {
        config.validate()?;
        let d = config.input_dim;
        let mut rng = stream(config.seed, "mog/means", 0);
        let means = (0..config.components)
            .map(|_| (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let mut task = Self { config, means, h_star: LinearScorer::zeros(d, 1) };
        let reference = task.features(REFERENCE_SAMPLES, "mog/reference", Exec::default());
        let width = task.config.shape().augmented_size();
        for attempt in 0..MAX_REDRAWS {
            let mut rng = stream(task.config.seed, "mog/h_star", attempt as u64);
            let rows: Vec<Vec<f64>> = (0..width)
                .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            task.h_star = LinearScorer::from_parts(&rows, &vec![0.0; width], attempt as u64)?;
            let mut seen = vec![false; width];
            for x in reference.chunks_exact(d) {
                seen[task.action(x)] = true;
            }
            if seen.iter().all(|s| *s) {
                return Ok(task);
            }
        }
        Err(Error::Unsatisfiable(MAX_REDRAWS))
    }

    /// Action of `h*` at `x`, lowest index on ties.
    pub fn action(&self, x: &[f64]) -> usize {
        let layer = &self.h_star.layer;
        let scores: Vec<f64> = layer
            .weights
            .chunks_exact(layer.inp)
            .zip(&layer.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect();
        argmax(&scores)
    }

    fn features(&self, samples: usize, tag: &str, exec: Exec) -> Vec<f64> {
        let d = self.config.input_dim;
        exec.map_chunks(samples, CHUNK, |start, end| {
            let mut rng = stream(self.config.seed, tag, (start / CHUNK) as u64);
            let mut out = Vec::with_capacity((end - start) * d);
            for _ in start..end {
                let mean = &self.means[rng.gen_range(0..self.config.components)];
                out.extend(mean.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)));
            }
            out
        })
        .concat()
    }

    /// Labels follow `h*` where it predicts; where it defers to expert `j`
    /// the label is uniform and only expert `j` is correct (cost 0).
    fn label(&self, features: Vec<f64>, tag: &str) -> Result<LabeledDataset> {
        let (n, n_e, d) = (self.config.n, self.config.n_e, self.config.input_dim);
        let rows = features.len() / d;
        let mut labels = Vec::with_capacity(rows);
        let mut costs = vec![1.0; rows * n_e];
        let mut rng = stream(self.config.seed, tag, 0);
        for (i, x) in features.chunks_exact(d).enumerate() {
            let a = self.action(x);
            if a < n {
                labels.push(a);
            } else {
                labels.push(rng.gen_range(0..n));
                costs[i * n_e + a - n] = 0.0;
            }
        }
        let data = LabeledDataset::new(self.config.shape(), d, features, labels, costs)?;
        self.certify(&data)?;
        Ok(data)
    }

    fn certify(&self, data: &LabeledDataset) -> Result<()> {
        let n = self.config.n;
        for i in 0..data.len() {
            let a = self.action(data.row(i));
            let loss = if a < n { f64::from(u8::from(a != data.label(i))) } else { data.costs(i)[a - n] };
            if loss != 0.0 {
                return Err(Error::InvalidTask(format!("h* has nonzero deferral loss at row {i}")));
            }
        }
        Ok(())
    }

    /// The training sample of `config.samples` rows.
    pub fn training_sample(&self) -> Result<LabeledDataset> {
        let x = self.features(self.config.samples, "mog/train/x", Exec::default());
        self.label(x, "mog/train/y")
    }

    /// An independent sample from the same distribution, e.g. a test set.
    /// Different `index` values give independent samples.
    pub fn fresh_sample(&self, samples: usize, index: u64) -> Result<LabeledDataset> {
        if samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        let x = self.features(samples, &format!("mog/fresh{index}/x"), Exec::default());
        self.label(x, &format!("mog/fresh{index}/y"))
    }

    /// Share of rows on which `h*` defers.
    pub fn deferral_rate(&self, data: &LabeledDataset) -> f64 {
        let deferred = (0..data.len()).filter(|&i| self.action(data.row(i)) >= self.config.n).count();
        deferred as f64 / data.len() as f64
    }
}

/// The realizable mixture dataset and its ground-truth scorer.
pub fn gen_realizable_mog(config: &MogConfig) -> Result<(LabeledDataset, LinearScorer)> {
    let task = MogTask::new(config.clone())?;
    let data = task.training_sample()?;
    Ok((data, task.h_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Stage;
    use crate::models::{system_accuracy, Scorer};

    fn small() -> MogConfig {
        MogConfig { samples: 500, seed: 3, ..MogConfig::default() }
    }

    #[test]
    fn realizable_and_deterministic() {
        let (data, h) = gen_realizable_mog(&small()).unwrap();
        assert_eq!(system_accuracy(&Scorer::from(h.clone()), &data, Stage::Single).unwrap(), 1.0);
        let (again, h2) = gen_realizable_mog(&small()).unwrap();
        assert_eq!(data.to_json().unwrap(), again.to_json().unwrap());
        assert_eq!(h, h2);
    }

    #[test]
    fn fresh_samples_differ_but_stay_realizable() {
        let task = MogTask::new(small()).unwrap();
        let a = task.fresh_sample(300, 0).unwrap();
        let b = task.fresh_sample(300, 1).unwrap();
        assert_ne!(a.features(), b.features());
        let h = Scorer::from(task.h_star.clone());
        assert_eq!(system_accuracy(&h, &b, Stage::Single).unwrap(), 1.0);
    }

    #[test]
    fn rejects_zero_samples() {
        let cfg = MogConfig { samples: 0, ..MogConfig::default() };
        assert!(matches!(gen_realizable_mog(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn defaults() {
        let c = MogConfig::default();
        assert_eq!((c.input_dim, c.components, c.n, c.n_e), (16, 8, 4, 2));
    }
}
