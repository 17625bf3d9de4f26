use deferral::losses::{
    argmax, baseline_mao, baseline_verma, deferral_loss, deferral_loss_alt, surrogate_mae, surrogate_single,
    two_stage_deferral_loss, two_stage_surrogate_phi, two_stage_surrogate_psi, PhiSpec, ProblemShape, PsiSpec,
};
use proptest::prelude::*;

fn case() -> impl Strategy<Value = (ProblemShape, Vec<f64>, usize, Vec<f64>)> {
    (2usize..=10, 1usize..=5).prop_flat_map(|(n, n_e)| {
        (
            Just(ProblemShape { n, n_e }),
            prop::collection::vec(-20.0..20.0f64, n + n_e),
            0..n,
            prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], n_e),
        )
    })
}

// Score gaps stay below 20 so that softmax outputs never reach the clamp.
fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-10.0..10.0f64, 2), prop::collection::vec(0.0..=1.0f64, 2))
}

fn q_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

proptest! {
    #[test]
    fn alternative_form_agrees((shape, s, y, c) in case()) {
        let a = deferral_loss(&s, y, &c, shape).unwrap();
        let b = deferral_loss_alt(&s, y, &c, shape).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn target_losses_lie_in_unit_interval((shape, s, y, c) in case()) {
        let l = deferral_loss(&s, y, &c, shape).unwrap();
        prop_assert!((0.0..=1.0).contains(&l));
        if shape.n_e >= 2 {
            let t = two_stage_deferral_loss(&s[..shape.n_e], &c).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
        }
    }

    #[test]
    fn surrogates_finite_for_positive_q((shape, s, y, c) in case(), q in 1e-3..=1.0f64) {
        let psi = PsiSpec::new(q).unwrap();
        prop_assert!(surrogate_single(&s, y, &c, shape, &psi).unwrap().is_finite());
        prop_assert!(baseline_mao(&s, y, &c, shape, &psi).unwrap().is_finite());
        if shape.n_e >= 2 {
            prop_assert!(two_stage_surrogate_psi(&s[..shape.n_e], &c, &psi).unwrap().is_finite());
        }
    }

    #[test]
    fn argmax_is_deterministic(s in prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), -1.0..1.0f64], 1..12)) {
        let i = argmax(&s);
        prop_assert_eq!(i, argmax(&s.clone()));
        prop_assert!(s.iter().all(|v| *v <= s[i]));
        prop_assert!(s[..i].iter().all(|v| *v < s[i]));
    }

    #[test]
    fn scaled_correct_prediction_drives_loss_to_zero((shape, mut s, y, c) in case(), q in 0.05..=1.0f64) {
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s[y] = top + 0.5;
        let scaled: Vec<f64> = s.iter().map(|v| 1e3 * v).collect();
        let psi = PsiSpec::new(q).unwrap();
        prop_assert!(surrogate_single(&scaled, y, &c, shape, &psi).unwrap() <= 1e-6);
    }

    #[test]
    fn scaled_free_deferral_drives_loss_to_zero((shape, mut s, y, _c) in case(), j in 0usize..5, q in 0.05..=1.0f64) {
        let j = j % shape.n_e;
        let mut c = vec![1.0; shape.n_e];
        c[j] = 0.0;
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s[shape.n + j] = top + 0.5;
        let scaled: Vec<f64> = s.iter().map(|v| 1e3 * v).collect();
        let psi = PsiSpec::new(q).unwrap();
        prop_assert!(surrogate_single(&scaled, y, &c, shape, &psi).unwrap() <= 1e-6);
    }

    #[test]
    fn mae_is_q_one((shape, s, y, c) in case()) {
        let a = surrogate_mae(&s, y, &c, shape).unwrap();
        let b = surrogate_single(&s, y, &c, shape, &PsiSpec::new(1.0).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mao_at_zero_is_verma((shape, s, y, c) in case()) {
        let s: Vec<f64> = s.iter().map(|v| v / 4.0).collect();
        let a = baseline_mao(&s, y, &c, shape, &PsiSpec::log()).unwrap();
        let b = baseline_verma(&s, y, &c, shape).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn two_expert_psi_matches_logistic_phi((s, c) in pair()) {
        let a = two_stage_surrogate_psi(&s, &c, &PsiSpec::log()).unwrap();
        let b = two_stage_surrogate_phi(&s, &c, &PhiSpec::logistic()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    // The comp-sum surrogate's leading coefficient can be negative, so only
    // the baselines are bounded below by zero.
    #[test]
    fn baselines_are_non_negative((shape, s, y, c) in case(), q in q_value()) {
        prop_assert!(baseline_verma(&s, y, &c, shape).unwrap() >= 0.0);
        prop_assert!(baseline_mao(&s, y, &c, shape, &PsiSpec::new(q).unwrap()).unwrap() >= 0.0);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let shape = ProblemShape::new(2, 1).unwrap();
    assert!(deferral_loss(&[0.0, 1.0], 0, &[0.5], shape).is_err());
    assert!(deferral_loss(&[0.0, 1.0, 2.0], 2, &[0.5], shape).is_err());
    assert!(deferral_loss(&[0.0, f64::NAN, 2.0], 0, &[0.5], shape).is_err());
    assert!(deferral_loss(&[0.0, 1.0, 2.0], 0, &[1.5], shape).is_err());
    assert!(PsiSpec::new(1.5).is_err());
}
