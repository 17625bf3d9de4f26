use super::{
    add_comp_sum_grad, check_costs, check_label, check_scores, softmax_unchecked, ProblemShape,
    PsiSpec, DEFAULT_CLAMP,
};
use crate::error::Result;

fn check_single(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
    psi: Option<&PsiSpec>,
) -> Result<()> {
    if let Some(psi) = psi {
        psi.validate()?;
    }
    shape.validate()?;
    check_scores(scores, shape.augmented_size())?;
    check_label(y, shape.n)?;
    check_costs(costs, shape.n_e)
}

fn head_coef(costs: &[f64]) -> f64 {
    costs.iter().sum::<f64>() + 1.0 - costs.len() as f64
}

/// Comp-sum surrogate
/// `[Σ_j c_j + 1 − n_e]·Ψ(s_y) + Σ_j (1 − c_j)·Ψ(s_y + s_{n+j})`.
pub fn surrogate_single(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
    psi: &PsiSpec,
) -> Result<f64> {
    check_single(scores, y, costs, shape, Some(psi))?;
    Ok(single_eval(&softmax_unchecked(scores), y, costs, shape.n, psi, None))
}

pub fn surrogate_single_grad(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
    psi: &PsiSpec,
) -> Result<Vec<f64>> {
    check_single(scores, y, costs, shape, Some(psi))?;
    let mut grad = vec![0.0; scores.len()];
    single_eval(&softmax_unchecked(scores), y, costs, shape.n, psi, Some(&mut grad));
    Ok(grad)
}

/// Value of the comp-sum surrogate at softmax output `s`; accumulates the
/// score gradient into `grad` when given.
pub(crate) fn single_eval(
    s: &[f64],
    y: usize,
    costs: &[f64],
    n: usize,
    psi: &PsiSpec,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let sy = s[y];
    let head = head_coef(costs);
    let mut value = head * psi.value(sy);
    if let Some(g) = grad.as_deref_mut() {
        add_comp_sum_grad(g, s, &[y], head, psi);
    }
    for (j, c) in costs.iter().enumerate() {
        value += (1.0 - c) * psi.value(sy + s[n + j]);
        if let Some(g) = grad.as_deref_mut() {
            add_comp_sum_grad(g, s, &[y, n + j], 1.0 - c, psi);
        }
    }
    value
}

/// The comp-sum surrogate with `Ψ(u) = 1 − u`.
pub fn surrogate_mae(scores: &[f64], y: usize, costs: &[f64], shape: ProblemShape) -> Result<f64> {
    surrogate_single(scores, y, costs, shape, &PsiSpec::mae())
}

pub fn surrogate_mae_grad(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
) -> Result<Vec<f64>> {
    surrogate_single_grad(scores, y, costs, shape, &PsiSpec::mae())
}

/// Multi-expert cross-entropy: `−log s_y − Σ_j (1 − c_j)·log s_{n+j}`.
pub fn baseline_verma(scores: &[f64], y: usize, costs: &[f64], shape: ProblemShape) -> Result<f64> {
    check_single(scores, y, costs, shape, None)?;
    Ok(verma_eval(scores, y, costs, shape.n, None))
}

pub fn baseline_verma_grad(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
) -> Result<Vec<f64>> {
    check_single(scores, y, costs, shape, None)?;
    let mut grad = vec![0.0; scores.len()];
    verma_eval(scores, y, costs, shape.n, Some(&mut grad));
    Ok(grad)
}

/// Works on raw scores: negative log-softmax entries come from log-sum-exp
/// and are capped at `−log ε`.
pub(crate) fn verma_eval(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    n: usize,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = scores.iter().map(|z| (z - max).exp()).sum();
    let lse = max + total.ln();
    let cap = -DEFAULT_CLAMP.ln();
    let mut value = 0.0;
    let mut term = |k: usize, coef: f64, grad: Option<&mut [f64]>| {
        let nll = lse - scores[k];
        if nll >= cap {
            value += coef * cap;
            return;
        }
        value += coef * nll;
        if let Some(g) = grad {
            if coef != 0.0 {
                for (gi, z) in g.iter_mut().zip(scores) {
                    *gi += coef * (z - max).exp() / total;
                }
                g[k] -= coef;
            }
        }
    };
    term(y, 1.0, grad.as_deref_mut());
    for (j, c) in costs.iter().enumerate() {
        term(n + j, 1.0 - c, grad.as_deref_mut());
    }
    value
}

/// `Ψ_q(s_y) + Σ_j (1 − c_j)·Ψ_q(s_{n+j})`; equals [`baseline_verma`] at `q = 0`.
pub fn baseline_mao(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
    psi: &PsiSpec,
) -> Result<f64> {
    check_single(scores, y, costs, shape, Some(psi))?;
    Ok(mao_eval(&softmax_unchecked(scores), y, costs, shape.n, psi, None))
}

pub fn baseline_mao_grad(
    scores: &[f64],
    y: usize,
    costs: &[f64],
    shape: ProblemShape,
    psi: &PsiSpec,
) -> Result<Vec<f64>> {
    check_single(scores, y, costs, shape, Some(psi))?;
    let mut grad = vec![0.0; scores.len()];
    mao_eval(&softmax_unchecked(scores), y, costs, shape.n, psi, Some(&mut grad));
    Ok(grad)
}

pub(crate) fn mao_eval(
    s: &[f64],
    y: usize,
    costs: &[f64],
    n: usize,
    psi: &PsiSpec,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let mut value = psi.value(s[y]);
    if let Some(g) = grad.as_deref_mut() {
        add_comp_sum_grad(g, s, &[y], 1.0, psi);
    }
    for (j, c) in costs.iter().enumerate() {
        value += (1.0 - c) * psi.value(s[n + j]);
        if let Some(g) = grad.as_deref_mut() {
            add_comp_sum_grad(g, s, &[n + j], 1.0 - c, psi);
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sh(n: usize, n_e: usize) -> ProblemShape {
        ProblemShape::new(n, n_e).unwrap()
    }

    #[test]
    fn surrogate_hand_values() {
        let u = [0.0; 3];
        let v = surrogate_single(&u, 0, &[1.0], sh(2, 1), &PsiSpec::mae()).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-15);
        let v = surrogate_single(&u, 0, &[0.0], sh(2, 1), &PsiSpec::mae()).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        let v = surrogate_mae(&u, 0, &[1.0], sh(2, 1)).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-15);
        let v = surrogate_single(&[60.0, 0.0, 0.0, 0.0], 0, &[0.3, 0.8], sh(2, 2), &PsiSpec::mae())
            .unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn surrogate_rejects_bad_psi() {
        let psi = PsiSpec { q: -0.1, clamp_epsilon: 1e-12 };
        assert!(surrogate_single(&[0.0; 3], 0, &[1.0], sh(2, 1), &psi).is_err());
    }

    #[test]
    fn baselines_hand_values() {
        let u = [0.0; 3];
        let v = baseline_verma(&u, 0, &[0.0], sh(2, 1)).unwrap();
        assert_abs_diff_eq!(v, -2.0 * (1.0f64 / 3.0).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(v, 2.1972, epsilon = 1e-4);
        let v = baseline_verma(&[0.3, -0.2, 1.1, 0.4], 1, &[1.0, 1.0], sh(2, 2)).unwrap();
        let s = softmax_unchecked(&[0.3, -0.2, 1.1, 0.4]);
        assert_abs_diff_eq!(v, -s[1].ln(), epsilon = 1e-14);
        let v = baseline_mao(&u, 0, &[0.0], sh(2, 1), &PsiSpec::mae()).unwrap();
        assert_abs_diff_eq!(v, 4.0 / 3.0, epsilon = 1e-15);
        let v = baseline_mao(&[50.0, 0.0, 0.0], 0, &[1.0], sh(2, 1), &PsiSpec::mae()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        let v = baseline_verma(&[50.0, 0.0, 0.0], 0, &[1.0], sh(2, 1)).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_gradient_entries_match() {
        let g = surrogate_single_grad(&[0.0; 5], 0, &[0.5, 0.5], sh(3, 2), &PsiSpec::new(0.7).unwrap())
            .unwrap();
        assert_abs_diff_eq!(g[1], g[2], epsilon = 1e-15);
        assert_abs_diff_eq!(g[3], g[4], epsilon = 1e-15);
        assert_abs_diff_eq!(g.iter().sum::<f64>(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn saturated_mae_gradient_vanishes() {
        let g = surrogate_single_grad(&[40.0, 0.0, 0.0], 0, &[1.0], sh(2, 1), &PsiSpec::mae()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }
}
