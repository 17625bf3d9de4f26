use super::{add_comp_sum_grad, check_costs, check_scores, softmax_unchecked, PhiSpec, PsiSpec};
use crate::error::{Error, Result};

fn check_pair(scores: &[f64], costs: &[f64]) -> Result<()> {
    if scores.len() != 2 {
        return Err(Error::WidthMismatch { expected: 2, got: scores.len() });
    }
    check_scores(scores, 2)?;
    check_costs(costs, 2)
}

/// Two-expert surrogate `c_1·Φ(r_2 − r_1) + c_2·Φ(r_1 − r_2)`.
pub fn two_stage_surrogate_phi(scores: &[f64], costs: &[f64], phi: &PhiSpec) -> Result<f64> {
    check_pair(scores, costs)?;
    Ok(phi_eval(scores, costs, phi, None))
}

pub fn two_stage_surrogate_phi_grad(
    scores: &[f64],
    costs: &[f64],
    phi: &PhiSpec,
) -> Result<Vec<f64>> {
    check_pair(scores, costs)?;
    let mut grad = vec![0.0; 2];
    phi_eval(scores, costs, phi, Some(&mut grad));
    Ok(grad)
}

pub(crate) fn phi_eval(scores: &[f64], costs: &[f64], phi: &PhiSpec, grad: Option<&mut [f64]>) -> f64 {
    let t = scores[0] - scores[1];
    if let Some(g) = grad {
        let d = -costs[0] * phi.slope(-t) + costs[1] * phi.slope(t);
        g[0] += d;
        g[1] -= d;
    }
    costs[0] * phi.value(-t) + costs[1] * phi.value(t)
}

fn check_multi(scores: &[f64], costs: &[f64], psi: &PsiSpec) -> Result<()> {
    psi.validate()?;
    if costs.len() < 2 {
        return Err(Error::InvalidShape(format!("two-stage needs n_e >= 2, got {}", costs.len())));
    }
    check_scores(scores, costs.len())?;
    check_costs(costs, costs.len())
}

/// Coefficients `Σ_{j'≠j} c_{j'} − n_e + 2` of the multi-expert surrogate.
pub fn two_stage_coefficients(costs: &[f64]) -> Vec<f64> {
    let total: f64 = costs.iter().sum();
    let n_e = costs.len() as f64;
    costs.iter().map(|c| total - c - n_e + 2.0).collect()
}

/// Multi-expert surrogate `Σ_j (Σ_{j'≠j} c_{j'} − n_e + 2)·Ψ(s_j)`.
pub fn two_stage_surrogate_psi(scores: &[f64], costs: &[f64], psi: &PsiSpec) -> Result<f64> {
    check_multi(scores, costs, psi)?;
    Ok(psi_eval(&softmax_unchecked(scores), costs, psi, None))
}

pub fn two_stage_surrogate_psi_grad(
    scores: &[f64],
    costs: &[f64],
    psi: &PsiSpec,
) -> Result<Vec<f64>> {
    check_multi(scores, costs, psi)?;
    let mut grad = vec![0.0; scores.len()];
    psi_eval(&softmax_unchecked(scores), costs, psi, Some(&mut grad));
    Ok(grad)
}

pub(crate) fn psi_eval(s: &[f64], costs: &[f64], psi: &PsiSpec, mut grad: Option<&mut [f64]>) -> f64 {
    let mut value = 0.0;
    for (j, a) in two_stage_coefficients(costs).into_iter().enumerate() {
        value += a * psi.value(s[j]);
        if let Some(g) = grad.as_deref_mut() {
            add_comp_sum_grad(g, s, &[j], a, psi);
        }
    }
    value
}
