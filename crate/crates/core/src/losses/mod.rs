//! Target deferral losses, comp-sum surrogates and their analytic gradients.

mod selector;
mod single;
mod two_stage;

pub use selector::{LossSelector, Stage};
pub use single::{
    baseline_mao, baseline_mao_grad, baseline_verma, baseline_verma_grad, surrogate_mae,
    surrogate_mae_grad, surrogate_single, surrogate_single_grad,
};
pub use two_stage::{
    two_stage_coefficients, two_stage_surrogate_phi, two_stage_surrogate_phi_grad, two_stage_surrogate_psi,
    two_stage_surrogate_psi_grad,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CLAMP: f64 = 1e-12;

/// Number of labels and experts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemShape {
    pub n: usize,
    pub n_e: usize,
}

impl ProblemShape {
    pub fn new(n: usize, n_e: usize) -> Result<Self> {
        let shape = Self { n, n_e };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidShape(format!("n = {} (need n >= 2)", self.n)));
        }
        if self.n_e < 1 {
            return Err(Error::InvalidShape("n_e = 0 (need n_e >= 1)".into()));
        }
        Ok(())
    }

    /// Output width of a single-stage scorer.
    pub fn augmented_size(&self) -> usize {
        self.n + self.n_e
    }
}

/// Per-expert costs `c_j(x, y)`, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_cost_range(&values)?;
        if values.is_empty() {
            return Err(Error::InvalidCosts("empty cost vector".into()));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for CostVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CostVector> for Vec<f64> {
    fn from(c: CostVector) -> Self {
        c.0
    }
}

impl std::ops::Deref for CostVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Auxiliary function `Ψ_q`: `−log u` for `q = 0`, `(1 − u^q)/q` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    pub q: f64,
    #[serde(default = "default_clamp")]
    pub clamp_epsilon: f64,
}

fn default_clamp() -> f64 {
    DEFAULT_CLAMP
}

impl PsiSpec {
    pub fn new(q: f64) -> Result<Self> {
        let psi = Self { q, clamp_epsilon: DEFAULT_CLAMP };
        psi.validate()?;
        Ok(psi)
    }

    /// `Ψ_0(u) = −log u`.
    pub fn log() -> Self {
        Self { q: 0.0, clamp_epsilon: DEFAULT_CLAMP }
    }

    /// `Ψ_1(u) = 1 − u`.
    pub fn mae() -> Self {
        Self { q: 1.0, clamp_epsilon: DEFAULT_CLAMP }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidPsi(self.q));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon <= 1e-6) {
            return Err(Error::InvalidConfig(format!(
                "clamp_epsilon = {} must lie in (0, 1e-6]",
                self.clamp_epsilon
            )));
        }
        Ok(())
    }

    pub fn value(&self, u: f64) -> f64 {
        let u = u.min(1.0);
        if self.q == 0.0 {
            -u.max(self.clamp_epsilon).ln()
        } else {
            (1.0 - u.powf(self.q)) / self.q
        }
    }

    /// `u · Ψ'(u)`, finite on `[0, 1]` for every `q`.
    fn scaled_slope(&self, u: f64) -> f64 {
        if self.q == 0.0 {
            if u < self.clamp_epsilon {
                0.0
            } else {
                -1.0
            }
        } else {
            -u.min(1.0).powf(self.q)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    Logistic,
    Exponential,
    Hinge,
}

/// Decreasing margin loss `Φ` of the two-expert surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub kind: PhiKind,
}

impl PhiSpec {
    pub fn logistic() -> Self {
        Self { kind: PhiKind::Logistic }
    }

    pub fn exponential() -> Self {
        Self { kind: PhiKind::Exponential }
    }

    pub fn hinge() -> Self {
        Self { kind: PhiKind::Hinge }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            PhiKind::Logistic => {
                if t > 0.0 {
                    (-t).exp().ln_1p()
                } else {
                    -t + t.exp().ln_1p()
                }
            }
            PhiKind::Exponential => (-t).exp(),
            PhiKind::Hinge => (1.0 - t).max(0.0),
        }
    }

    /// Derivative, with the right derivative taken at the hinge kink.
    pub fn slope(&self, t: f64) -> f64 {
        match self.kind {
            PhiKind::Logistic => {
                if t >= 0.0 {
                    let e = (-t).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + t.exp())
                }
            }
            PhiKind::Exponential => -(-t).exp(),
            PhiKind::Hinge => {
                if t < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub(crate) fn check_scores(scores: &[f64], width: usize) -> Result<()> {
    if scores.len() != width {
        return Err(Error::WidthMismatch { expected: width, got: scores.len() });
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidScores(format!("non-finite entry {bad}")));
    }
    Ok(())
}

fn check_cost_range(costs: &[f64]) -> Result<()> {
    if let Some(bad) = costs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::InvalidCosts(format!("cost {bad} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_costs(costs: &[f64], n_e: usize) -> Result<()> {
    if costs.len() != n_e {
        return Err(Error::InvalidCosts(format!("expected {n_e} costs, got {}", costs.len())));
    }
    check_cost_range(costs)
}

pub(crate) fn check_label(y: usize, n: usize) -> Result<()> {
    if y >= n {
        return Err(Error::LabelOutOfRange { label: y, n });
    }
    Ok(())
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidScores("empty score vector".into()));
    }
    check_scores(scores, scores.len())?;
    Ok(softmax_unchecked(scores))
}

pub(crate) fn softmax_unchecked(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Single-stage deferral loss: 0-1 error when predicting, `c_j` when deferring to `j`.
pub fn deferral_loss(scores: &[f64], y: usize, costs: &[f64], shape: ProblemShape) -> Result<f64> {
    check_scores(scores, shape.augmented_size())?;
    check_label(y, shape.n)?;
    check_costs(costs, shape.n_e)?;
    let h = argmax(scores);
    Ok(if h < shape.n {
        if h == y {
            0.0
        } else {
            1.0
        }
    } else {
        costs[h - shape.n]
    })
}

/// Deferral loss written as a cost-weighted sum of disagreement indicators.
pub fn deferral_loss_alt(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
) -> Result<f64> {
    check_scores(scores, shape.augmented_size())?;
    check_label(y, shape.n)?;
    check_costs(costs, shape.n_e)?;
    let h = argmax(scores);
    let miss = if h != y { 1.0 } else { 0.0 };
    let head = costs.iter().sum::<f64>() + 1.0 - shape.n_e as f64;
    let tail: f64 = costs
        .iter()
        .enumerate()
        .map(|(j, c)| (1.0 - c) * miss * if h != shape.n + j { 1.0 } else { 0.0 })
        .sum();
    Ok(head * miss + tail)
}

/// Two-stage deferral loss: the cost of the selected expert.
pub fn two_stage_deferral_loss(scores: &[f64], costs: &[f64]) -> Result<f64> {
    if costs.len() < 2 {
        return Err(Error::InvalidShape(format!("two-stage needs n_e >= 2, got {}", costs.len())));
    }
    check_scores(scores, costs.len())?;
    check_costs(costs, costs.len())?;
    Ok(costs[argmax(scores)])
}

/// Adds the gradient of `coef · Ψ(Σ_{k∈set} s_k)` with respect to the scores.
pub(crate) fn add_comp_sum_grad(
    grad: &mut [f64],
    s: &[f64],
    set: &[usize],
    coef: f64,
    psi: &PsiSpec,
) {
    if coef == 0.0 {
        return;
    }
    let u: f64 = set.iter().map(|&k| s[k]).sum();
    let w = psi.scaled_slope(u);
    if w == 0.0 || u <= 0.0 {
        return;
    }
    let cw = coef * w;
    for (g, si) in grad.iter_mut().zip(s) {
        *g -= cw * si;
    }
    for &k in set {
        grad[k] += cw * s[k] / u;
    }
}
