use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use deferral::exec::Exec;
use deferral::losses::{LossSelector, PsiSpec};
use deferral::models::{train, LinearScorer, Scorer, TrainConfig};
use deferral::suites::{run_suite, Suite};
use deferral::synth::{gen_realizable_mog, MogConfig};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn training(c: &mut Criterion) {
    let (data, _) = gen_realizable_mog(&MogConfig { samples: 16_000, seed: 1, ..MogConfig::default() }).unwrap();
    let init = Scorer::from(LinearScorer::init(16, 6, 2));
    let loss = LossSelector::SinglePsi { psi: PsiSpec::new(0.7).unwrap() };
    let mut group = c.benchmark_group("train_10_epochs");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = TrainConfig { epochs: 10, exec, ..TrainConfig::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train(black_box(&init), &data, &loss, &config).unwrap())
        });
    }
    group.finish();
}

fn corpus(c: &mut Criterion) {
    let mut group = c.benchmark_group("theorem3_corpus_200");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_suite(Suite::Theorem3, black_box(7), 200, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, training, corpus);
criterion_main!(benches);
