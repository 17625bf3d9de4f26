use serde::Serialize;

use super::regret::{conditional_regret, Objective};
use super::{DiscreteTask, TabularHypothesis};
use crate::error::{Error, Result};
use crate::losses::{LossSelector, PhiKind, PhiSpec, PsiSpec};

/// Slack below which a bound counts as violated rather than rounding noise.
pub const SLACK_FLOOR: f64 = -1e-9;

/// One inequality `lhs ≤ rhs`, evaluated at a support point or in aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, slack: rhs - lhs }
    }

    pub fn holds(&self) -> bool {
        self.slack >= SLACK_FLOOR
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointReport {
    pub point: usize,
    pub target_regret: f64,
    pub surrogate_regret: f64,
    pub check: BoundCheck,
}

/// Per-point and aggregated comparison of target and surrogate regrets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretReport {
    pub points: Vec<PointReport>,
    pub excess_target: f64,
    pub excess_surrogate: f64,
    pub aggregate: BoundCheck,
}

impl RegretReport {
    /// Number of failed inequalities, the aggregate included.
    pub fn violations(&self) -> usize {
        self.points.iter().filter(|p| !p.check.holds()).count() + usize::from(!self.aggregate.holds())
    }

    pub fn min_slack(&self) -> f64 {
        self.points.iter().map(|p| p.check.slack).fold(self.aggregate.slack, f64::min)
    }

    /// Smallest regret seen; stays above [`SLACK_FLOOR`] on valid inputs.
    pub fn min_regret(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| [p.target_regret, p.surrogate_regret])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds a report from per-point regrets and a transform `Γ` with
/// `Δ𝒞_target ≤ Γ(Δ𝒞_surrogate)` expected pointwise and, by concavity of
/// `Γ`, in aggregate.
fn report(
    task: &DiscreteTask,
    h: &TabularHypothesis,
    target: &Objective,
    surrogate: &Objective,
    gamma: impl Fn(f64) -> f64,
) -> Result<RegretReport> {
    let mut points = Vec::with_capacity(task.points());
    let (mut ex_t, mut ex_s) = (0.0, 0.0);
    for (k, mu) in task.marginals().iter().enumerate() {
        let t = conditional_regret(task, h, k, target)?;
        let s = conditional_regret(task, h, k, surrogate)?;
        ex_t += mu * t;
        ex_s += mu * s;
        points.push(PointReport {
            point: k,
            target_regret: t,
            surrogate_regret: s,
            check: BoundCheck::new(t, gamma(s.max(0.0))),
        });
    }
    Ok(RegretReport {
        points,
        excess_target: ex_t,
        excess_surrogate: ex_s,
        aggregate: BoundCheck::new(ex_t, gamma(ex_s.max(0.0))),
    })
}

/// `Δ𝒞_def ≤ (n + n_e)·Δ𝒞_mae` pointwise and for the excess errors.
pub fn verify_bound_single_mae(task: &DiscreteTask, h: &TabularHypothesis) -> Result<RegretReport> {
    let factor = task.shape().augmented_size() as f64;
    let surrogate = Objective::from(LossSelector::Mae {});
    report(task, h, &Objective::Deferral, &surrogate, |t| factor * t)
}

/// `C̄ = (n_e − 1)·max_j c̄_j − n_e + 2` with `c̄_j` the largest cost of
/// expert `j` on the support.
pub fn cost_constant(task: &DiscreteTask) -> f64 {
    let n_e = task.shape().n_e as f64;
    let (_, hi) = task.cost_bounds();
    let max = hi.into_iter().fold(f64::NEG_INFINITY, f64::max);
    (n_e - 1.0) * max - n_e + 2.0
}

/// The transform `Γ` relating two-stage deferral regret to the regret of
/// the multi-expert `Ψ_q` surrogate.
pub fn two_stage_gamma(task: &DiscreteTask, q: f64) -> impl Fn(f64) -> f64 {
    let n_e = task.shape().n_e as f64;
    let root_c = cost_constant(task).max(0.0).sqrt();
    move |t: f64| {
        if q == 1.0 {
            n_e * t
        } else if q == 0.0 {
            2.0 * root_c * t.sqrt()
        } else {
            2.0 * n_e.powf(q).sqrt() * root_c * t.sqrt()
        }
    }
}

/// `Δ𝒞_tdef ≤ Γ(Δ𝒞_{Ψ_q})` for the multi-expert two-stage surrogate.
///
/// Fails with [`Error::PremiseViolated`] when some cell has
/// `Σ_{j'≠j} c_{j'} < n_e − 2`.
pub fn verify_bound_two_stage(task: &DiscreteTask, r: &TabularHypothesis, q: f64) -> Result<RegretReport> {
    task.check_two_stage_premise()?;
    let psi = PsiSpec::new(q)?;
    let surrogate = Objective::from(LossSelector::TwoStagePsi { psi });
    report(task, r, &Objective::TwoStageDeferral, &surrogate, two_stage_gamma(task, q))
}

/// Two-expert bound
/// `Δ𝒞_tdef ≤ (c̄_1 + c̄_2)·Γ(Δ𝒞_Φ / (c̲_1 + c̲_2))` with `Γ(t) = √(2t)` for
/// the logistic and exponential losses, and `Δ𝒞_tdef ≤ Δ𝒞_Φ` for the hinge.
pub fn verify_bound_two_expert(task: &DiscreteTask, r: &TabularHypothesis, phi: &PhiSpec) -> Result<RegretReport> {
    if task.shape().n_e != 2 {
        return Err(Error::InvalidShape(format!(
            "the two-expert bound needs n_e = 2, got {}",
            task.shape().n_e
        )));
    }
    let (lo, hi) = task.cost_bounds();
    let (lo_sum, hi_sum) = (lo[0] + lo[1], hi[0] + hi[1]);
    let kind = phi.kind;
    let surrogate = Objective::from(LossSelector::TwoStagePhi { phi: *phi });
    report(task, r, &Objective::TwoStageDeferral, &surrogate, move |t| match kind {
        PhiKind::Hinge => t,
        _ if lo_sum <= 0.0 => {
            if t > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        }
        _ => hi_sum * (2.0 * t / lo_sum).sqrt(),
    })
}
