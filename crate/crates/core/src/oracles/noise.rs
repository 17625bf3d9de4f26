use serde::{Deserialize, Serialize};

use super::bounds::BoundCheck;
use super::regret::{bayes_action, conditional_regret, Objective};
use super::{DiscreteTask, TabularHypothesis};
use crate::error::{Error, Result};
use crate::losses::{argmax, LossSelector, Stage};

/// Gap between the Bayes action's value and the best other action at each
/// point. Single-stage values are `p_y` and `p_{n+j}`; two-stage values are
/// negated expected expert costs.
pub fn minimal_margin(task: &DiscreteTask, stage: Stage) -> Vec<f64> {
    (0..task.points())
        .map(|k| {
            let values = match stage {
                Stage::Single => task.action_values(k),
                Stage::Two => task.expected_costs(k).into_iter().map(|a| -a).collect(),
            };
            let best = argmax(&values);
            let runner_up = values
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != best)
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            values[best] - runner_up
        })
        .collect()
}

/// Fitted constants of `Pr[γ(X) ≤ t] ≤ B·t^{α/(1−α)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub alpha: f64,
    pub b: f64,
    /// `B^{1−α} / α^α`.
    pub c_const: f64,
    pub margins: Vec<f64>,
    pub marginals: Vec<f64>,
}

impl NoiseProfile {
    fn exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    /// `Pr[γ(X) ≤ t]`.
    pub fn mass_below(&self, t: f64) -> f64 {
        self.margins.iter().zip(&self.marginals).filter(|(g, _)| **g <= t).map(|(_, m)| m).sum()
    }

    /// Whether the noise inequality holds at `t > 0`, up to rounding.
    pub fn holds_at(&self, t: f64) -> bool {
        self.mass_below(t) <= self.b * t.powf(self.exponent()) * (1.0 + 1e-12)
    }
}

/// Smallest `B` satisfying the noise inequality for the given margin
/// distribution. The left side is a step function, so the supremum of the
/// ratio is attained at a support point.
pub fn fit_tsybakov_b(margins: &[f64], marginals: &[f64], alpha: f64) -> Result<NoiseProfile> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if margins.len() != marginals.len() || margins.is_empty() {
        return Err(Error::InvalidShape("margins and marginals must be non-empty and aligned".into()));
    }
    if let Some(k) = margins.iter().position(|g| !(*g > 0.0)) {
        return Err(Error::ZeroMargin(k));
    }
    let exponent = alpha / (1.0 - alpha);
    let mut profile = NoiseProfile {
        alpha,
        b: 0.0,
        c_const: 0.0,
        margins: margins.to_vec(),
        marginals: marginals.to_vec(),
    };
    // A point with a single action has infinite margin and never counts.
    let b = margins
        .iter()
        .filter(|t| t.is_finite())
        .map(|&t| profile.mass_below(t) / t.powf(exponent))
        .fold(0.0, f64::max);
    profile.b = b;
    profile.c_const = b.powf(1.0 - alpha) / alpha.powf(alpha);
    if let Some(&t) = margins.iter().find(|&&t| t.is_finite() && !profile.holds_at(t)) {
        return Err(Error::InvalidTask(format!("noise fit fails at t = {t}")));
    }
    Ok(profile)
}

/// The three quantities of the noise chain
/// `E[1{ĥ≠ĥ*}] ≤ c·E[γ·1{ĥ≠ĥ*}]^α ≤ c·(excess target error)^α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseChain {
    pub disagreement: f64,
    pub middle: f64,
    pub right: f64,
    pub first: BoundCheck,
    pub second: BoundCheck,
}

impl NoiseChain {
    pub fn holds(&self) -> bool {
        self.first.holds() && self.second.holds()
    }

    pub fn violations(&self) -> usize {
        usize::from(!self.first.holds()) + usize::from(!self.second.holds())
    }
}

fn check_profile(task: &DiscreteTask, profile: &NoiseProfile) -> Result<()> {
    if profile.margins.len() != task.points() {
        return Err(Error::WidthMismatch { expected: task.points(), got: profile.margins.len() });
    }
    Ok(())
}

fn target_of(stage: Stage) -> Objective {
    match stage {
        Stage::Single => Objective::Deferral,
        Stage::Two => Objective::TwoStageDeferral,
    }
}

/// Evaluates the noise chain for `h` against the Bayes actions of `stage`.
pub fn verify_lemma_noise(
    task: &DiscreteTask,
    h: &TabularHypothesis,
    profile: &NoiseProfile,
    stage: Stage,
) -> Result<NoiseChain> {
    check_profile(task, profile)?;
    h.check(task, stage)?;
    let target = target_of(stage);
    let (mut disagreement, mut weighted, mut excess) = (0.0, 0.0, 0.0);
    for (k, mu) in task.marginals().iter().enumerate() {
        excess += mu * conditional_regret(task, h, k, &target)?;
        if argmax(&h.scores[k]) != bayes_action(task, k, stage) {
            disagreement += mu;
            weighted += mu * profile.margins[k];
        }
    }
    let c = profile.c_const;
    let middle = c * weighted.powf(profile.alpha);
    let right = c * excess.max(0.0).powf(profile.alpha);
    Ok(NoiseChain {
        disagreement,
        middle,
        right,
        first: BoundCheck::new(disagreement, middle),
        second: BoundCheck::new(middle, right),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnhancedMode {
    /// Bound with the hypothesis-dependent factor `E[1{ĥ≠ĥ*}]^{1/t}`.
    TheoremMulti,
    /// Bound with exponent `1/(s − α(s − 1))` under a fitted noise profile.
    TheoremMm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EnhancedOutcome {
    /// `Δ𝒞_target ≤ (Δ𝒞_surrogate)^{1/s}` fails at this point, so the
    /// bound does not apply.
    PremiseUnmet { point: usize },
    Checked(BoundCheck),
}

impl EnhancedOutcome {
    pub fn is_violation(&self) -> bool {
        matches!(self, EnhancedOutcome::Checked(c) if !c.holds())
    }
}

/// Checks an enhanced bound for `h` under `loss`, with the tabular class so
/// that minimizability gaps vanish.
pub fn verify_enhanced_bound(
    task: &DiscreteTask,
    h: &TabularHypothesis,
    loss: &LossSelector,
    s: f64,
    mode: EnhancedMode,
    profile: Option<&NoiseProfile>,
) -> Result<EnhancedOutcome> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::InvalidExponent(s));
    }
    let stage = loss.stage();
    h.check(task, stage)?;
    let target = target_of(stage);
    let surrogate = Objective::from(*loss);
    let (mut excess_t, mut excess_s, mut disagreement) = (0.0, 0.0, 0.0);
    for (k, mu) in task.marginals().iter().enumerate() {
        let dt = conditional_regret(task, h, k, &target)?;
        let ds = conditional_regret(task, h, k, &surrogate)?.max(0.0);
        if dt > ds.powf(1.0 / s) + 1e-12 {
            return Ok(EnhancedOutcome::PremiseUnmet { point: k });
        }
        excess_t += mu * dt;
        excess_s += mu * ds;
        if argmax(&h.scores[k]) != bayes_action(task, k, stage) {
            disagreement += mu;
        }
    }
    let rhs = match mode {
        EnhancedMode::TheoremMulti => {
            // 1/t = 1 − 1/s; at s = 1 the factor is D^0 = 1.
            let inv_t = 1.0 - 1.0 / s;
            let factor = if inv_t == 0.0 { 1.0 } else { disagreement.powf(inv_t) };
            factor * excess_s.powf(1.0 / s)
        }
        EnhancedMode::TheoremMm => {
            let profile = profile.ok_or_else(|| {
                Error::InvalidConfig("the noise-exponent bound needs a fitted noise profile".into())
            })?;
            check_profile(task, profile)?;
            let denom = s - profile.alpha * (s - 1.0);
            profile.c_const.powf((s - 1.0) / denom) * excess_s.powf(1.0 / denom)
        }
    };
    Ok(EnhancedOutcome::Checked(BoundCheck::new(excess_t, rhs)))
}
