use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{two_stage_coefficients, ProblemShape, Stage};
use crate::oracles::{minimal_margin, DiscreteTask, TabularHypothesis};
use crate::rng::{stream, StreamRng};

/// Resample budget shared by all constraints of one draw.
pub const MAX_RESAMPLES: usize = 10_000;

/// Smallest margin accepted under [`TaskConstraint::positive_margin`].
pub const MIN_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConstraint {
    /// Every cost vector satisfies `Σ_{j'≠j} c_{j'} ≥ n_e − 2`.
    pub two_stage_premise: bool,
    /// Single- and two-stage margins are at least [`MIN_MARGIN`] everywhere.
    pub positive_margin: bool,
}

/// Ranges of the random dimensions, all inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub n_max: usize,
    pub ne_min: usize,
    pub ne_max: usize,
    pub k_max: usize,
    #[serde(default)]
    pub constraint: TaskConstraint,
}

impl TaskSpec {
    pub fn new(n_max: usize, ne_max: usize, k_max: usize) -> Self {
        Self { n_max, ne_min: 1, ne_max, k_max, constraint: TaskConstraint::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 || self.ne_min < 1 || self.ne_min > self.ne_max || self.k_max < 1 {
            return Err(Error::InvalidConfig(format!("bad task ranges {self:?}")));
        }
        if self.constraint.two_stage_premise && self.ne_max < 2 {
            return Err(Error::InvalidConfig("the two-stage premise needs n_e >= 2".into()));
        }
        Ok(())
    }
}

/// Flat Dirichlet sample via normalized exponentials.
pub fn flat_simplex(rng: &mut StreamRng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    // Fold the rounding residue into the largest entry.
    let residue = 1.0 - v.iter().sum::<f64>();
    let i = crate::losses::argmax(&v);
    v[i] += residue;
    v
}

fn premise_holds(c: &[f64]) -> bool {
    two_stage_coefficients(c).iter().all(|a| *a >= 0.0)
}

/// Draws a random task from the stream `(seed, "task", index)`.
pub fn gen_random_discrete_task(seed: u64, index: u64, spec: &TaskSpec) -> Result<DiscreteTask> {
    spec.validate()?;
    let mut rng = stream(seed, "task", index);
    let ne_min = if spec.constraint.two_stage_premise { spec.ne_min.max(2) } else { spec.ne_min };
    let mut budget = MAX_RESAMPLES;
    loop {
        let n = rng.gen_range(2..=spec.n_max);
        let n_e = rng.gen_range(ne_min..=spec.ne_max);
        let k = rng.gen_range(1..=spec.k_max);
        let marginals = flat_simplex(&mut rng, k);
        let conditionals: Vec<Vec<f64>> = (0..k).map(|_| flat_simplex(&mut rng, n)).collect();
        let mut costs = Vec::with_capacity(k);
        for _ in 0..k {
            let mut block = Vec::with_capacity(n);
            for _ in 0..n {
                loop {
                    let c: Vec<f64> = (0..n_e).map(|_| rng.gen::<f64>()).collect();
                    if !spec.constraint.two_stage_premise || premise_holds(&c) {
                        block.push(c);
                        break;
                    }
                    budget = budget.checked_sub(1).ok_or(Error::Unsatisfiable(MAX_RESAMPLES))?;
                }
            }
            costs.push(block);
        }
        let task = DiscreteTask::new(ProblemShape::new(n, n_e)?, marginals, conditionals, costs)?;
        if !spec.constraint.positive_margin
            || [Stage::Single, Stage::Two]
                .iter()
                .all(|s| minimal_margin(&task, *s).iter().all(|g| *g >= MIN_MARGIN))
        {
            return Ok(task);
        }
        budget = budget.checked_sub(1).ok_or(Error::Unsatisfiable(MAX_RESAMPLES))?;
    }
}

/// Random scores for every support point: Gaussian entries at a log-uniform
/// scale in `[e^-2, e^3]`, with one point in four replaced by a one-hot
/// vector.
pub fn gen_random_hypothesis(task: &DiscreteTask, stage: Stage, seed: u64, index: u64) -> TabularHypothesis {
    let shape = task.shape();
    let width = match stage {
        Stage::Single => shape.augmented_size(),
        Stage::Two => shape.n_e,
    };
    let mut rng = stream(seed, "hypothesis", index);
    let scores = (0..task.points())
        .map(|_| {
            if rng.gen_range(0..4) == 0 {
                let hot = rng.gen_range(0..width);
                (0..width).map(|i| f64::from(u8::from(i == hot))).collect()
            } else {
                let scale = rng.gen_range(-2.0..3.0f64).exp();
                (0..width).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
            }
        })
        .collect();
    TabularHypothesis::new(scores)
}
