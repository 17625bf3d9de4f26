use serde::{Deserialize, Serialize};

use super::{DiscreteTask, TabularHypothesis};
use crate::error::{Error, Result};
use crate::losses::{argmax, two_stage_coefficients, LossSelector, PhiSpec, PsiSpec, Stage};

/// A loss whose conditional error can be evaluated on a [`DiscreteTask`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum Objective {
    Deferral,
    TwoStageDeferral,
    Surrogate { loss: LossSelector },
}

impl Objective {
    pub fn stage(&self) -> Stage {
        match self {
            Objective::Deferral => Stage::Single,
            Objective::TwoStageDeferral => Stage::Two,
            Objective::Surrogate { loss } => loss.stage(),
        }
    }

    /// The target deferral loss matching this objective's stage.
    pub fn target(&self) -> Objective {
        match self.stage() {
            Stage::Single => Objective::Deferral,
            Stage::Two => Objective::TwoStageDeferral,
        }
    }
}

impl From<LossSelector> for Objective {
    fn from(loss: LossSelector) -> Self {
        Objective::Surrogate { loss }
    }
}

/// Bayes action at `x_k`: the best single-stage action, or the cheapest
/// expert in the two-stage setting. Lowest index on ties.
pub fn bayes_action(task: &DiscreteTask, k: usize, stage: Stage) -> usize {
    match stage {
        Stage::Single => argmax(&task.action_values(k)),
        Stage::Two => {
            let a = task.expected_costs(k);
            let neg: Vec<f64> = a.iter().map(|v| -v).collect();
            argmax(&neg)
        }
    }
}

/// Tabular hypothesis taking the Bayes action of the deferral loss at every point.
pub fn bayes_deferral(task: &DiscreteTask) -> TabularHypothesis {
    let actions: Vec<usize> =
        (0..task.points()).map(|k| bayes_action(task, k, Stage::Single)).collect();
    TabularHypothesis::from_actions(&actions, task.shape().augmented_size())
}

/// Tabular routing function selecting the cheapest expert in expectation.
pub fn bayes_two_stage(task: &DiscreteTask) -> TabularHypothesis {
    let actions: Vec<usize> = (0..task.points()).map(|k| bayes_action(task, k, Stage::Two)).collect();
    TabularHypothesis::from_actions(&actions, task.shape().n_e)
}

/// `max{p_{y_max}, max_j p_{n+j}} − p_{ĥ(x_k)}`.
pub fn conditional_regret_def(task: &DiscreteTask, h: &TabularHypothesis, k: usize) -> Result<f64> {
    h.check(task, Stage::Single)?;
    let v = task.action_values(k);
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - v[argmax(&h.scores[k])])
}

/// `Σ_y p(y|x_k) c_{r̂(x_k)} − min_j Σ_y p(y|x_k) c_j`.
pub fn conditional_regret_tdef(task: &DiscreteTask, r: &TabularHypothesis, k: usize) -> Result<f64> {
    r.check(task, Stage::Two)?;
    let a = task.expected_costs(k);
    let best = a.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(a[argmax(&r.scores[k])] - best)
}

/// Conditional error `Σ_y p(y|x_k) L(h(x_k), y)`.
pub fn conditional_error(
    task: &DiscreteTask,
    h: &TabularHypothesis,
    k: usize,
    objective: &Objective,
) -> Result<f64> {
    h.check(task, objective.stage())?;
    let scores = &h.scores[k];
    match objective {
        Objective::Deferral => Ok(1.0 - task.action_values(k)[argmax(scores)]),
        Objective::TwoStageDeferral => Ok(task.expected_costs(k)[argmax(scores)]),
        Objective::Surrogate { loss } => {
            let shape = task.shape();
            loss.validate(shape)?;
            let mut total = 0.0;
            for (y, p) in task.conditional(k).iter().enumerate() {
                if *p > 0.0 {
                    total += p * loss.value(scores, y, task.cost(k, y), shape)?;
                }
            }
            Ok(total)
        }
    }
}

/// Infimum of the conditional error over all score vectors at `x_k`.
pub fn conditional_min(task: &DiscreteTask, k: usize, objective: &Objective) -> Result<f64> {
    match objective {
        Objective::Deferral => {
            let v = task.action_values(k);
            Ok(1.0 - v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
        Objective::TwoStageDeferral => {
            Ok(task.expected_costs(k).into_iter().fold(f64::INFINITY, f64::min))
        }
        Objective::Surrogate { loss } => conditional_min_surrogate(task, k, loss),
    }
}

pub fn conditional_regret(
    task: &DiscreteTask,
    h: &TabularHypothesis,
    k: usize,
    objective: &Objective,
) -> Result<f64> {
    Ok(conditional_error(task, h, k, objective)? - conditional_min(task, k, objective)?)
}

/// Conditional error of the comp-sum surrogate with `Ψ(u) = 1 − u`, written
/// as a function of the softmax output `s` (affine in `s`).
pub fn mae_conditional_at(task: &DiscreteTask, k: usize, s: &[f64]) -> f64 {
    let n = task.shape().n;
    let mut total = 0.0;
    for (y, p) in task.conditional(k).iter().enumerate() {
        let c = task.cost(k, y);
        let head = c.iter().sum::<f64>() + 1.0 - c.len() as f64;
        let mut v = head * (1.0 - s[y]);
        for (j, cj) in c.iter().enumerate() {
            v += (1.0 - cj) * (1.0 - s[y] - s[n + j]);
        }
        total += p * v;
    }
    total
}

/// Weights `q̄_j = Σ_y p(y|x_k)(Σ_{j'≠j} c_{j'} − n_e + 2)`, so that the
/// two-stage `Ψ` surrogate's conditional error is `Σ_j q̄_j Ψ(S_j)`.
pub fn two_stage_weights(task: &DiscreteTask, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; task.shape().n_e];
    for (y, p) in task.conditional(k).iter().enumerate() {
        for (o, a) in out.iter_mut().zip(two_stage_coefficients(task.cost(k, y))) {
            *o += p * a;
        }
    }
    out
}

/// `Σ_j q̄_j Ψ(S_j)` at a point `S` of the simplex.
pub fn two_stage_psi_conditional_at(task: &DiscreteTask, k: usize, psi: &PsiSpec, s: &[f64]) -> f64 {
    two_stage_weights(task, k).iter().zip(s).map(|(w, sj)| w * psi.value(*sj)).sum()
}

/// Closed-form minimum of `Σ_j w_j Ψ_q(S_j)` over the simplex, with its
/// minimizer.
pub fn psi_simplex_min(w: &[f64], q: f64) -> Result<(f64, Vec<f64>)> {
    if q == 1.0 {
        let best = argmax(w);
        let s = (0..w.len()).map(|j| f64::from(u8::from(j == best))).collect();
        return Ok((w.iter().sum::<f64>() - w[best], s));
    }
    if w.iter().any(|v| *v < -1e-12) {
        return Err(Error::InvalidTask(
            "negative surrogate weight: the infimum is unbounded below".into(),
        ));
    }
    let w: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let raw: Vec<f64> = if q == 0.0 {
        w.clone()
    } else {
        w.iter().map(|v| v.powf(1.0 / (1.0 - q))).collect()
    };
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Ok((0.0, vec![1.0 / w.len() as f64; w.len()]));
    }
    let s: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let value = w
        .iter()
        .zip(&s)
        .filter(|(wj, _)| **wj > 0.0)
        .map(|(wj, sj)| if q == 0.0 { -wj * sj.ln() } else { wj * (1.0 - sj.powf(q)) / q })
        .sum();
    Ok((value, s))
}

/// `inf_u a1·Φ(−u) + a2·Φ(u)` by golden-section search on the margin `u = r_1 − r_2`.
pub fn phi_pair_min(a1: f64, a2: f64, phi: &PhiSpec) -> f64 {
    if a1 <= 0.0 || a2 <= 0.0 {
        return 0.0;
    }
    let f = |u: f64| a1 * phi.value(-u) + a2 * phi.value(u);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.5 * (lo + hi)).min(f1).min(f2)
}

/// Exact infimum of a surrogate's conditional error over all score vectors.
///
/// Supported: the single-stage `Ψ(u) = 1 − u` surrogate (vertex enumeration),
/// the two-stage `Ψ_q` surrogate (closed form) and the two-expert `Φ`
/// surrogate (golden-section search).
pub fn conditional_min_surrogate(task: &DiscreteTask, k: usize, loss: &LossSelector) -> Result<f64> {
    loss.validate(task.shape())?;
    match loss {
        LossSelector::Mae {} => conditional_min_mae(task, k),
        LossSelector::SinglePsi { psi } if psi.q == 1.0 => conditional_min_mae(task, k),
        LossSelector::TwoStagePsi { psi } => Ok(psi_simplex_min(&two_stage_weights(task, k), psi.q)?.0),
        LossSelector::TwoStagePhi { phi } => {
            let a = task.expected_costs(k);
            Ok(phi_pair_min(a[0], a[1], phi))
        }
        other => Err(Error::UnsupportedLoss(format!("{other:?}"))),
    }
}

fn conditional_min_mae(task: &DiscreteTask, k: usize) -> Result<f64> {
    let width = task.shape().augmented_size();
    let mut best = f64::INFINITY;
    let mut vertex = vec![0.0; width];
    for v in 0..width {
        vertex[v] = 1.0;
        best = best.min(mae_conditional_at(task, k, &vertex));
        vertex[v] = 0.0;
    }
    Ok(best)
}

/// `Σ_k μ_k 𝒞_L(h, x_k)`.
pub fn expected_error(task: &DiscreteTask, h: &TabularHypothesis, objective: &Objective) -> Result<f64> {
    let mut total = 0.0;
    for (k, mu) in task.marginals().iter().enumerate() {
        total += mu * conditional_error(task, h, k, objective)?;
    }
    Ok(total)
}

/// Excess error over the best tabular hypothesis: `Σ_k μ_k Δ𝒞_L(h, x_k)`.
pub fn empirical_excess(task: &DiscreteTask, h: &TabularHypothesis, objective: &Objective) -> Result<f64> {
    let mut total = 0.0;
    for (k, mu) in task.marginals().iter().enumerate() {
        total += mu * conditional_regret(task, h, k, objective)?;
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub enum HypothesisClass {
    /// Every score table on the support.
    TabularAll,
    /// A finite list of candidates.
    FixedFamily(Vec<TabularHypothesis>),
}

/// Best-in-class expected error minus the expected pointwise best-in-class
/// conditional error.
pub fn minimizability_gap(
    task: &DiscreteTask,
    objective: &Objective,
    class: &HypothesisClass,
) -> Result<f64> {
    let mu = task.marginals();
    match class {
        HypothesisClass::TabularAll => {
            // The pointwise minimizers assemble into one table, so both
            // terms are the same sum.
            let mut best_in_class = 0.0;
            let mut pointwise = 0.0;
            for (k, m) in mu.iter().enumerate() {
                let c = conditional_min(task, k, objective)?;
                best_in_class += m * c;
                pointwise += m * c;
            }
            Ok(best_in_class - pointwise)
        }
        HypothesisClass::FixedFamily(family) => {
            if family.is_empty() {
                return Err(Error::EmptyCandidates);
            }
            let table: Vec<Vec<f64>> = family
                .iter()
                .map(|h| (0..task.points()).map(|k| conditional_error(task, h, k, objective)).collect())
                .collect::<Result<_>>()?;
            let best_in_class = table
                .iter()
                .map(|row| row.iter().zip(mu).map(|(c, m)| c * m).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let pointwise: f64 = (0..task.points())
                .map(|k| mu[k] * table.iter().map(|row| row[k]).fold(f64::INFINITY, f64::min))
                .sum();
            Ok(best_in_class - pointwise)
        }
    }
}
