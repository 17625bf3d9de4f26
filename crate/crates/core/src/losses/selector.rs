use serde::{Deserialize, Serialize};

use super::single::{mao_eval, single_eval, verma_eval};
use super::two_stage::{phi_eval, psi_eval};
use super::{
    argmax, baseline_mao, baseline_mao_grad, baseline_verma, baseline_verma_grad,
    deferral_loss, softmax_unchecked, surrogate_mae, surrogate_mae_grad, surrogate_single,
    surrogate_single_grad, two_stage_deferral_loss, two_stage_surrogate_phi,
    two_stage_surrogate_phi_grad, two_stage_surrogate_psi, two_stage_surrogate_psi_grad, PhiSpec,
    ProblemShape, PsiSpec,
};
use crate::error::{Error, Result};

/// Single-stage scorers choose among labels and experts; two-stage scorers
/// route between experts only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Single,
    Two,
}

/// A surrogate loss together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSelector {
    SinglePsi { psi: PsiSpec },
    Mae {},
    Verma {},
    Mao { psi: PsiSpec },
    TwoStagePhi { phi: PhiSpec },
    TwoStagePsi { psi: PsiSpec },
}

impl LossSelector {
    pub fn stage(&self) -> Stage {
        match self {
            Self::TwoStagePhi { .. } | Self::TwoStagePsi { .. } => Stage::Two,
            _ => Stage::Single,
        }
    }

    pub fn output_width(&self, shape: ProblemShape) -> usize {
        match self.stage() {
            Stage::Single => shape.augmented_size(),
            Stage::Two => shape.n_e,
        }
    }

    pub fn validate(&self, shape: ProblemShape) -> Result<()> {
        shape.validate()?;
        match self {
            Self::SinglePsi { psi } | Self::Mao { psi } => psi.validate(),
            Self::Mae {} | Self::Verma {} => Ok(()),
            Self::TwoStagePhi { .. } if shape.n_e != 2 => Err(Error::InvalidShape(format!(
                "the two-expert surrogate needs n_e = 2, got {}",
                shape.n_e
            ))),
            Self::TwoStagePhi { .. } => Ok(()),
            Self::TwoStagePsi { psi } => {
                if shape.n_e < 2 {
                    return Err(Error::InvalidShape("two-stage needs n_e >= 2".into()));
                }
                psi.validate()
            }
        }
    }

    pub fn value(&self, scores: &[f64], y: usize, costs: &[f64], shape: ProblemShape) -> Result<f64> {
        match self {
            Self::SinglePsi { psi } => surrogate_single(scores, y, costs, shape, psi),
            Self::Mae {} => surrogate_mae(scores, y, costs, shape),
            Self::Verma {} => baseline_verma(scores, y, costs, shape),
            Self::Mao { psi } => baseline_mao(scores, y, costs, shape, psi),
            Self::TwoStagePhi { phi } => two_stage_surrogate_phi(scores, costs, phi),
            Self::TwoStagePsi { psi } => two_stage_surrogate_psi(scores, costs, psi),
        }
    }

    pub fn grad(
        &self,
        scores: &[f64],
        y: usize,
        costs: &[f64],
        shape: ProblemShape,
    ) -> Result<Vec<f64>> {
        match self {
            Self::SinglePsi { psi } => surrogate_single_grad(scores, y, costs, shape, psi),
            Self::Mae {} => surrogate_mae_grad(scores, y, costs, shape),
            Self::Verma {} => baseline_verma_grad(scores, y, costs, shape),
            Self::Mao { psi } => baseline_mao_grad(scores, y, costs, shape, psi),
            Self::TwoStagePhi { phi } => two_stage_surrogate_phi_grad(scores, costs, phi),
            Self::TwoStagePsi { psi } => two_stage_surrogate_psi_grad(scores, costs, psi),
        }
    }

    /// The target loss this surrogate stands in for.
    pub fn target(&self, scores: &[f64], y: usize, costs: &[f64], shape: ProblemShape) -> Result<f64> {
        match self.stage() {
            Stage::Single => deferral_loss(scores, y, costs, shape),
            Stage::Two => two_stage_deferral_loss(scores, costs),
        }
    }

    /// Surrogate value, target value, and (optionally) accumulated gradient
    /// without argument checks. Callers validate shapes once up front.
    pub(crate) fn eval_unchecked(
        &self,
        scores: &[f64],
        y: usize,
        costs: &[f64],
        n: usize,
        grad: Option<&mut [f64]>,
    ) -> (f64, f64) {
        let h = argmax(scores);
        let target = match self.stage() {
            Stage::Single if h < n => f64::from(u8::from(h != y)),
            Stage::Single => costs[h - n],
            Stage::Two => costs[h],
        };
        let value = match self {
            Self::SinglePsi { psi } => single_eval(&softmax_unchecked(scores), y, costs, n, psi, grad),
            Self::Mae {} => single_eval(&softmax_unchecked(scores), y, costs, n, &PsiSpec::mae(), grad),
            Self::Verma {} => verma_eval(scores, y, costs, n, grad),
            Self::Mao { psi } => mao_eval(&softmax_unchecked(scores), y, costs, n, psi, grad),
            Self::TwoStagePhi { phi } => phi_eval(scores, costs, phi, grad),
            Self::TwoStagePsi { psi } => psi_eval(&softmax_unchecked(scores), costs, psi, grad),
        };
        (value, target)
    }
}
