use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{two_stage_coefficients, ProblemShape, Stage};

pub const TASK_VERSION: u32 = 1;

const SUM_TOL: f64 = 1e-12;

/// A distribution over finitely many abstract inputs `x_0..x_{K-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TaskDoc", into = "TaskDoc")]
pub struct DiscreteTask {
    shape: ProblemShape,
    marginals: Vec<f64>,
    conditionals: Vec<Vec<f64>>,
    costs: Vec<Vec<Vec<f64>>>,
}

impl DiscreteTask {
    /// `conditionals[k][y] = p(y | x_k)`, `costs[k][y][j] = c_j(x_k, y)`.
    pub fn new(
        shape: ProblemShape,
        marginals: Vec<f64>,
        conditionals: Vec<Vec<f64>>,
        costs: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        shape.validate()?;
        let k = marginals.len();
        if k == 0 {
            return Err(Error::InvalidTask("no points".into()));
        }
        if conditionals.len() != k || costs.len() != k {
            return Err(Error::InvalidTask("marginals, conditionals and costs disagree on K".into()));
        }
        if marginals.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidTask("negative or NaN marginal".into()));
        }
        if (marginals.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidTask("marginals do not sum to 1".into()));
        }
        for (i, row) in conditionals.iter().enumerate() {
            if row.len() != shape.n || row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::InvalidTask(format!("conditional row {i} malformed")));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidTask(format!("conditional row {i} does not sum to 1")));
            }
        }
        for (i, per_label) in costs.iter().enumerate() {
            if per_label.len() != shape.n {
                return Err(Error::InvalidTask(format!("cost block {i} has wrong label count")));
            }
            for c in per_label {
                if c.len() != shape.n_e || c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::InvalidCosts(format!("cost block {i} malformed")));
                }
            }
        }
        Ok(Self { shape, marginals, conditionals, costs })
    }

    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    pub fn points(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn conditional(&self, k: usize) -> &[f64] {
        &self.conditionals[k]
    }

    pub fn cost(&self, k: usize, y: usize) -> &[f64] {
        &self.costs[k][y]
    }

    /// Expected expert costs `Σ_y p(y|x_k) c_j(x_k, y)`.
    pub fn expected_costs(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape.n_e];
        for (p, c) in self.conditionals[k].iter().zip(&self.costs[k]) {
            for (a, cj) in out.iter_mut().zip(c) {
                *a += p * cj;
            }
        }
        out
    }

    /// Values of the `n + n_e` single-stage actions at `x_k`: `p(y|x_k)` for
    /// labels and `Σ_y p(y|x_k)(1 − c_j)` for deferral to expert `j`.
    pub fn action_values(&self, k: usize) -> Vec<f64> {
        let mut v = self.conditionals[k].clone();
        v.extend((0..self.shape.n_e).map(|j| {
            self.conditionals[k].iter().zip(&self.costs[k]).map(|(p, c)| p * (1.0 - c[j])).sum::<f64>()
        }));
        v
    }

    /// Per-expert minimum and maximum cost over cells of positive probability.
    pub fn cost_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n_e = self.shape.n_e;
        let mut lo = vec![f64::INFINITY; n_e];
        let mut hi = vec![f64::NEG_INFINITY; n_e];
        for k in 0..self.points() {
            for y in 0..self.shape.n {
                if self.marginals[k] * self.conditionals[k][y] <= 0.0 {
                    continue;
                }
                for (j, c) in self.costs[k][y].iter().enumerate() {
                    lo[j] = lo[j].min(*c);
                    hi[j] = hi[j].max(*c);
                }
            }
        }
        (lo, hi)
    }

    /// Checks `Σ_{j'≠j} c_{j'}(x, y) ≥ n_e − 2` on every cell.
    pub fn check_two_stage_premise(&self) -> Result<()> {
        if self.shape.n_e < 2 {
            return Err(Error::InvalidShape("two-stage needs n_e >= 2".into()));
        }
        for (k, per_label) in self.costs.iter().enumerate() {
            for (y, c) in per_label.iter().enumerate() {
                if let Some(j) = two_stage_coefficients(c).iter().position(|a| *a < -SUM_TOL) {
                    return Err(Error::PremiseViolated { point: k, label: y, expert: j });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    version: u32,
    shape: ProblemShape,
    marginals: Vec<f64>,
    conditionals: Vec<Vec<f64>>,
    costs: Vec<Vec<Vec<f64>>>,
}

impl From<DiscreteTask> for TaskDoc {
    fn from(t: DiscreteTask) -> Self {
        TaskDoc {
            version: TASK_VERSION,
            shape: t.shape,
            marginals: t.marginals,
            conditionals: t.conditionals,
            costs: t.costs,
        }
    }
}

impl TryFrom<TaskDoc> for DiscreteTask {
    type Error = Error;
    fn try_from(d: TaskDoc) -> Result<Self> {
        if d.version != TASK_VERSION {
            return Err(Error::Serialization(format!("unsupported task version {}", d.version)));
        }
        DiscreteTask::new(d.shape, d.marginals, d.conditionals, d.costs)
    }
}

/// One score vector per support point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularHypothesis {
    pub scores: Vec<Vec<f64>>,
}

impl TabularHypothesis {
    pub fn new(scores: Vec<Vec<f64>>) -> Self {
        Self { scores }
    }

    /// Puts score 1 on `actions[k]` and 0 elsewhere.
    pub fn from_actions(actions: &[usize], width: usize) -> Self {
        let scores = actions
            .iter()
            .map(|&a| (0..width).map(|i| f64::from(u8::from(i == a))).collect())
            .collect();
        Self { scores }
    }

    pub(crate) fn check(&self, task: &DiscreteTask, stage: Stage) -> Result<()> {
        let shape = task.shape();
        let width = match stage {
            Stage::Single => shape.augmented_size(),
            Stage::Two => shape.n_e,
        };
        if self.scores.len() != task.points() {
            return Err(Error::WidthMismatch { expected: task.points(), got: self.scores.len() });
        }
        for row in &self.scores {
            crate::losses::check_scores(row, width)?;
        }
        Ok(())
    }
}
