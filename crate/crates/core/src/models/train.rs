use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Scorer};
use crate::error::{Error, Result};
use crate::exec::{Exec, CHUNK};
use crate::losses::{argmax, LossSelector, Stage};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BatchRepr", into = "BatchRepr")]
pub enum BatchSize {
    Full,
    Rows(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BatchRepr {
    Word(String),
    Rows(usize),
}

impl TryFrom<BatchRepr> for BatchSize {
    type Error = String;
    fn try_from(r: BatchRepr) -> std::result::Result<Self, String> {
        match r {
            BatchRepr::Word(w) if w == "full" => Ok(BatchSize::Full),
            BatchRepr::Word(w) => Err(format!("batch_size must be \"full\" or a count, got {w:?}")),
            BatchRepr::Rows(0) => Err("batch_size must be positive".into()),
            BatchRepr::Rows(k) => Ok(BatchSize::Rows(k)),
        }
    }
}

impl From<BatchSize> for BatchRepr {
    fn from(b: BatchSize) -> Self {
        match b {
            BatchSize::Full => BatchRepr::Word("full".into()),
            BatchSize::Rows(k) => BatchRepr::Rows(k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Optimizer {
    Gd,
    /// Classical momentum: `v ← βv + g`, `θ ← θ − lr·v`.
    Momentum { beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    /// Drives minibatch shuffling; initialization seeds live on the scorer.
    pub seed: u64,
    pub optimizer: Optimizer,
    pub standardize: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 500,
            batch_size: BatchSize::Full,
            seed: 0,
            optimizer: Optimizer::Gd,
            standardize: true,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted so that frozen runs can be recorded.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate = {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if let Optimizer::Momentum { beta } = self.optimizer {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidConfig(format!("momentum beta = {beta} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Mean surrogate and mean target loss over the training rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub surrogate_loss: f64,
    pub deferral_loss: f64,
}

impl EpochStats {
    pub fn system_accuracy(&self) -> f64 {
        1.0 - self.deferral_loss
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub scorer: Scorer,
    /// Statistics of the initial parameters (epoch 0).
    pub initial: EpochStats,
    /// One entry per epoch, measured after that epoch's updates.
    pub trajectory: Vec<EpochStats>,
}

struct Pass {
    grad: Vec<f64>,
    loss: f64,
    target: f64,
}

/// Loss sums (and gradient sums when `with_grad`) over `rows`, reduced in
/// fixed chunk order.
fn pass(
    scorer: &Scorer,
    data: &LabeledDataset,
    loss: &LossSelector,
    rows: &[usize],
    with_grad: bool,
    exec: Exec,
) -> Pass {
    let n = data.shape().n;
    let width = scorer.output_width();
    let params = if with_grad { scorer.param_count() } else { 0 };
    let parts = exec.map_chunks(rows.len(), CHUNK, |a, b| {
        let mut out = Pass { grad: vec![0.0; params], loss: 0.0, target: 0.0 };
        let mut scores = vec![0.0; width];
        let mut dscores = vec![0.0; width];
        let mut cache = vec![0.0; scorer.cache_len()];
        for &i in &rows[a..b] {
            let x = data.row(i);
            scorer.forward_into(x, &mut scores, &mut cache);
            let (v, t) = if with_grad {
                dscores.iter_mut().for_each(|d| *d = 0.0);
                let r = loss.eval_unchecked(&scores, data.label(i), data.costs(i), n, Some(&mut dscores));
                scorer.backward(x, &cache, &dscores, &mut out.grad);
                r
            } else {
                loss.eval_unchecked(&scores, data.label(i), data.costs(i), n, None)
            };
            out.loss += v;
            out.target += t;
        }
        out
    });
    let mut total = Pass { grad: vec![0.0; params], loss: 0.0, target: 0.0 };
    for p in parts {
        total.loss += p.loss;
        total.target += p.target;
        for (g, v) in total.grad.iter_mut().zip(&p.grad) {
            *g += v;
        }
    }
    total
}

fn check_compat(scorer: &Scorer, data: &LabeledDataset, loss: &LossSelector) -> Result<()> {
    loss.validate(data.shape())?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scorer.input_dim() != data.input_dim() {
        return Err(Error::WidthMismatch { expected: data.input_dim(), got: scorer.input_dim() });
    }
    let width = loss.output_width(data.shape());
    if scorer.output_width() != width {
        return Err(Error::WidthMismatch { expected: width, got: scorer.output_width() });
    }
    Ok(())
}

/// Mean surrogate and target loss of `scorer` on `data`.
pub fn evaluate(scorer: &Scorer, data: &LabeledDataset, loss: &LossSelector) -> Result<EpochStats> {
    check_compat(scorer, data, loss)?;
    let rows: Vec<usize> = (0..data.len()).collect();
    let p = pass(scorer, data, loss, &rows, false, Exec::default());
    let m = data.len() as f64;
    Ok(EpochStats { epoch: 0, surrogate_loss: p.loss / m, deferral_loss: p.target / m })
}

/// Gradient descent on the mean surrogate loss.
///
/// With `standardize`, optimization runs in standardized feature coordinates
/// and the accumulated parameter change is mapped back onto the raw-feature
/// scorer, so the returned scorer consumes raw features.
pub fn train(
    scorer: &Scorer,
    data: &LabeledDataset,
    loss: &LossSelector,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_compat(scorer, data, loss)?;
    let moments = config.standardize.then(|| data.feature_moments());
    let std_data;
    let (work_data, mut work) = match &moments {
        Some((mean, std)) => {
            std_data = data.standardized(mean, std);
            let mut w = scorer.clone();
            w.unfold(mean, std);
            (&std_data, w)
        }
        None => (data, scorer.clone()),
    };
    let start = work.params();
    let m = data.len();
    let exec = config.exec;
    let stats = |epoch: usize, p: &Pass, count: usize| -> Result<EpochStats> {
        let s = EpochStats {
            epoch,
            surrogate_loss: p.loss / count as f64,
            deferral_loss: p.target / count as f64,
        };
        if !s.surrogate_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        Ok(s)
    };

    let mut velocity = vec![0.0; work.param_count()];
    let mut step = |work: &mut Scorer, grad: &[f64], count: usize, epoch: usize| -> Result<()> {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let inv = 1.0 / count as f64;
        match config.optimizer {
            Optimizer::Gd => work.add_scaled(grad, -config.learning_rate * inv),
            Optimizer::Momentum { beta } => {
                for (v, g) in velocity.iter_mut().zip(grad) {
                    *v = beta * *v + g * inv;
                }
                work.add_scaled(&velocity, -config.learning_rate);
            }
        }
        Ok(())
    };

    let all: Vec<usize> = (0..m).collect();
    let mut trajectory = Vec::with_capacity(config.epochs);
    let initial;
    match config.batch_size {
        BatchSize::Rows(k) if k < m => {
            initial = stats(0, &pass(&work, work_data, loss, &all, false, exec), m)?;
            let mut order = all.clone();
            for epoch in 1..=config.epochs {
                order.shuffle(&mut stream(config.seed, "shuffle", epoch as u64));
                for batch in order.chunks(k) {
                    let p = pass(&work, work_data, loss, batch, true, exec);
                    stats(epoch, &p, batch.len())?;
                    step(&mut work, &p.grad, batch.len(), epoch)?;
                }
                trajectory.push(stats(epoch, &pass(&work, work_data, loss, &all, false, exec), m)?);
            }
        }
        _ => {
            // Each full-batch gradient pass also yields the statistics of the
            // parameters it starts from.
            let mut first = None;
            for epoch in 1..=config.epochs {
                let p = pass(&work, work_data, loss, &all, true, exec);
                let s = stats(epoch - 1, &p, m)?;
                if epoch == 1 {
                    first = Some(s);
                } else {
                    trajectory.push(s);
                }
                step(&mut work, &p.grad, m, epoch)?;
            }
            let last = pass(&work, work_data, loss, &all, false, exec);
            trajectory.push(stats(config.epochs, &last, m)?);
            initial = first.expect("at least one epoch");
        }
    }

    let mut delta: Vec<f64> = work.params().iter().zip(&start).map(|(a, b)| a - b).collect();
    if let Some((mean, std)) = &moments {
        work.fold_delta(&mut delta, mean, std);
    }
    let mut out = scorer.clone();
    out.add_scaled(&delta, 1.0);
    Ok(TrainOutcome { scorer: out, initial, trajectory })
}

/// Mean of `1 − L` over the rows, where `L` is the single- or two-stage
/// deferral loss.
pub fn system_accuracy(scorer: &Scorer, data: &LabeledDataset, stage: Stage) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let shape = data.shape();
    let width = match stage {
        Stage::Single => shape.augmented_size(),
        Stage::Two => shape.n_e,
    };
    if scorer.output_width() != width {
        return Err(Error::WidthMismatch { expected: width, got: scorer.output_width() });
    }
    if scorer.input_dim() != data.input_dim() {
        return Err(Error::WidthMismatch { expected: data.input_dim(), got: scorer.input_dim() });
    }
    let n = shape.n;
    let loss_sum = Exec::default().sum(data.len(), |i| {
        let mut scores = vec![0.0; width];
        let mut cache = vec![0.0; scorer.cache_len()];
        scorer.forward_into(data.row(i), &mut scores, &mut cache);
        let h = argmax(&scores);
        let costs = data.costs(i);
        match stage {
            Stage::Single if h < n => f64::from(u8::from(h != data.label(i))),
            Stage::Single => costs[h - n],
            Stage::Two => costs[h],
        }
    });
    Ok(1.0 - loss_sum / data.len() as f64)
}
