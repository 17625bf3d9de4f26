use deferral::exec::{with_jobs, Exec};
use deferral::losses::{LossSelector, PsiSpec, Stage};
use deferral::models::{train, LinearScorer, MlpScorer, Scorer, TrainConfig};
use deferral::synth::{gen_realizable_mog, gen_realizable_two_stage, MogConfig};
use proptest::prelude::*;

fn mog(samples: usize) -> deferral::models::LabeledDataset {
    gen_realizable_mog(&MogConfig { samples, seed: 9, ..MogConfig::default() }).unwrap().0
}

#[test]
fn parallel_sequential_and_single_thread_agree() {
    let data = mog(1500);
    let init = Scorer::from(MlpScorer::init(16, 8, 6, 2).unwrap());
    let loss = LossSelector::SinglePsi { psi: PsiSpec::new(0.7).unwrap() };
    let par = TrainConfig { epochs: 20, exec: Exec::Parallel, ..TrainConfig::default() };
    let seq = TrainConfig { exec: Exec::Sequential, ..par };
    let a = train(&init, &data, &loss, &par).unwrap();
    let b = train(&init, &data, &loss, &seq).unwrap();
    let c = with_jobs(1, || train(&init, &data, &loss, &par).unwrap()).unwrap();
    assert_eq!(a.scorer.params(), b.scorer.params());
    assert_eq!(a.scorer.params(), c.scorer.params());
    assert_eq!(a.trajectory, b.trajectory);
}

#[test]
fn two_stage_logistic_descends_monotonically() {
    let (data, _) = gen_realizable_two_stage(3, 6, 800, 4).unwrap();
    let init = Scorer::from(LinearScorer::init(6, 3, 1));
    let loss = LossSelector::TwoStagePsi { psi: PsiSpec::log() };
    for lr in [0.01, 0.05, 0.1] {
        let config = TrainConfig { learning_rate: lr, epochs: 200, ..TrainConfig::default() };
        let out = train(&init, &data, &loss, &config).unwrap();
        let mut prev = out.initial.surrogate_loss;
        for s in &out.trajectory {
            assert!(s.surrogate_loss <= prev + 1e-12, "lr {lr} epoch {}", s.epoch);
            prev = s.surrogate_loss;
        }
    }
}

#[test]
fn frozen_run_keeps_metrics_flat() {
    let data = mog(300);
    let init = Scorer::from(LinearScorer::init(16, 6, 3));
    let config = TrainConfig { learning_rate: 0.0, epochs: 5, ..TrainConfig::default() };
    let out = train(&init, &data, &LossSelector::Mae {}, &config).unwrap();
    assert_eq!(out.scorer, init);
    assert!(out.trajectory.iter().all(|s| *s == deferral::models::EpochStats { epoch: s.epoch, ..out.initial }));
}

#[test]
fn mae_learns_the_mixture() {
    let data = mog(2000);
    let init = Scorer::from(LinearScorer::init(16, 6, 5));
    let config = TrainConfig {
        learning_rate: 5.0,
        epochs: 300,
        optimizer: deferral::models::Optimizer::Momentum { beta: 0.9 },
        ..TrainConfig::default()
    };
    let out = train(&init, &data, &LossSelector::Mae {}, &config).unwrap();
    let before = deferral::models::system_accuracy(&init, &data, Stage::Single).unwrap();
    let after = out.trajectory.last().unwrap().system_accuracy();
    assert!(after > before + 0.3, "{before} -> {after}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_scaling_keeps_predictions(seed in any::<u64>(), alpha in prop_oneof![Just(0.5), Just(2.0), Just(100.0)],
                                          x in prop::collection::vec(-5.0..5.0f64, 4)) {
        let base = Scorer::from(LinearScorer::init(4, 5, seed));
        let mut scaled = base.clone();
        scaled.scale(alpha);
        prop_assert_eq!(base.predict(&x).unwrap(), scaled.predict(&x).unwrap());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), hidden in 1usize..6) {
        let s = Scorer::from(MlpScorer::init(3, hidden, 4, seed).unwrap());
        prop_assert_eq!(Scorer::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
