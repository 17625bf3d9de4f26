use std::path::Path;

use anyhow::Context;
use deferral::exec::Exec;
use deferral::models::{evaluate, system_accuracy, train, LabeledDataset, LinearScorer, MlpScorer, Scorer};
use deferral::oracles::DiscreteTask;
use deferral::suites::{run_on_task, run_suite, summarize, CheckRow, Suite};
use deferral::sweep::{run_trial, Method, TrialSettings};
use deferral::synth::{gen_random_discrete_task, gen_realizable_two_stage, MogTask};

use crate::config::{invalid, resolve, GenDataConfig, Generator, ModelSpec, SweepConfig, TrainRunConfig, VerifyConfig};
use crate::output::{config_hash, csv_bytes, num, Manifest};

/// Process exit status on success paths.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 3;

fn with_newline(mut s: String) -> Vec<u8> {
    s.push('\n');
    s.into_bytes()
}

pub fn gen_data(mut config: GenDataConfig, seed: Option<u64>, out: &Path) -> anyhow::Result<u8> {
    if let Some(s) = seed {
        config.seed = s;
    }
    let mut manifest = Manifest::new("gen-data", config.seed, config_hash(&config)?);
    match &config.generator {
        Generator::Mog(block) => {
            let mog = block.to_config(config.seed);
            mog.validate().map_err(invalid)?;
            let task = MogTask::new(mog)?;
            let data = task.training_sample()?;
            manifest.emit(out, "dataset.json", &with_newline(data.to_json()?))?;
            let h_star = Scorer::from(task.h_star.clone());
            manifest.emit(out, "h_star.json", &with_newline(h_star.to_json()?))?;
            if block.test_samples > 0 {
                let test = task.fresh_sample(block.test_samples, 0)?;
                manifest.emit(out, "test.json", &with_newline(test.to_json()?))?;
            }
        }
        Generator::TwoStage { n_e, input_dim, samples } => {
            if *n_e < 2 || *input_dim == 0 || *samples == 0 {
                return Err(invalid("two_stage needs n_e >= 2 and positive input_dim and samples"));
            }
            let (data, r_star) = gen_realizable_two_stage(*n_e, *input_dim, *samples, config.seed)?;
            manifest.emit(out, "dataset.json", &with_newline(data.to_json()?))?;
            manifest.emit(out, "r_star.json", &with_newline(Scorer::from(r_star).to_json()?))?;
        }
        Generator::DiscreteTask { spec, index } => {
            spec.validate().map_err(invalid)?;
            let task = gen_random_discrete_task(config.seed, *index, spec)?;
            manifest.emit(out, "task.json", &with_newline(task.to_json()?))?;
        }
    }
    manifest.finish(out)?;
    Ok(EXIT_OK)
}

fn read_dataset(path: &Path) -> anyhow::Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading dataset {}", path.display()))?;
    Ok(LabeledDataset::from_json(&text).with_context(|| format!("parsing dataset {}", path.display()))?)
}

pub fn train_cmd(mut config: TrainRunConfig, base: &Path, seed: Option<u64>, out: &Path) -> anyhow::Result<u8> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if config.dataset.as_os_str().is_empty() {
        return Err(invalid("train needs a dataset path"));
    }
    config.train.validate().map_err(invalid)?;
    let data = read_dataset(&resolve(base, &config.dataset))?;
    let shape = data.shape();
    config.loss.validate(shape).map_err(invalid)?;
    let width = config.loss.output_width(shape);
    let init = match config.model {
        ModelSpec::Linear {} => Scorer::from(LinearScorer::init(data.input_dim(), width, config.seed)),
        ModelSpec::Mlp { hidden } => {
            Scorer::from(MlpScorer::init(data.input_dim(), hidden, width, config.seed).map_err(invalid)?)
        }
    };
    let outcome = train(&init, &data, &config.loss, &config.train)?;
    let mut rows = Vec::with_capacity(outcome.trajectory.len() + 1);
    for s in std::iter::once(&outcome.initial).chain(&outcome.trajectory) {
        rows.push(vec![
            s.epoch.to_string(),
            num(s.surrogate_loss),
            num(s.deferral_loss),
            num(s.system_accuracy()),
        ]);
    }
    let last = outcome.trajectory.last().copied().unwrap_or(outcome.initial);
    let test_system_accuracy = match &config.test_dataset {
        Some(p) => {
            let test = read_dataset(&resolve(base, p))?;
            Some(system_accuracy(&outcome.scorer, &test, config.loss.stage())?)
        }
        None => None,
    };
    // Re-evaluating guards against drift between the trajectory and the
    // returned parameters.
    let check = evaluate(&outcome.scorer, &data, &config.loss)?;
    let mut summary = vec![
        vec!["train_surrogate_loss".to_string(), num(check.surrogate_loss)],
        vec!["train_deferral_loss".to_string(), num(check.deferral_loss)],
        vec!["train_system_accuracy".to_string(), num(check.system_accuracy())],
    ];
    if let Some(a) = test_system_accuracy {
        summary.push(vec!["test_system_accuracy".to_string(), num(a)]);
    }
    let mut manifest = Manifest::new("train", config.seed, config_hash(&config)?);
    manifest.emit(out, "model.json", &with_newline(outcome.scorer.to_json()?))?;
    let header = ["epoch", "surrogate_loss", "deferral_loss", "system_accuracy"];
    manifest.emit(out, "metrics.csv", &csv_bytes(&header, &rows)?)?;
    manifest.emit(out, "summary.csv", &csv_bytes(&["metric", "value"], &summary)?)?;
    manifest.finish(out)?;
    println!(
        "epochs={} surrogate_loss={} system_accuracy={}{}",
        config.train.epochs,
        num(last.surrogate_loss),
        num(last.system_accuracy()),
        test_system_accuracy.map(|a| format!(" test_system_accuracy={}", num(a))).unwrap_or_default()
    );
    Ok(EXIT_OK)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

pub fn sweep(mut config: SweepConfig, seed: Option<u64>, out: &Path) -> anyhow::Result<u8> {
    if let Some(s) = seed {
        config.seed = s;
    }
    let methods: Vec<Method> =
        config.methods.iter().map(|m| Method::parse(m)).collect::<Result<_, _>>().map_err(invalid)?;
    if methods.is_empty() || config.sizes.is_empty() || config.trials == 0 {
        return Err(invalid("sweep needs at least one method, size and trial"));
    }
    if config.sizes.contains(&0) || config.test_samples == 0 {
        return Err(invalid("sample sizes and test_samples must be positive"));
    }
    config.train.validate().map_err(invalid)?;
    config.mog.to_config(0).validate().map_err(invalid)?;
    for m in &methods {
        m.loss(config.mao_q).map_err(invalid)?;
    }
    let settings = TrialSettings {
        mog: config.mog.to_config(0),
        test_samples: config.test_samples,
        mao_q: config.mao_q,
        train: config.train,
    };
    let mut jobs = Vec::new();
    for &m in &methods {
        for &size in &config.sizes {
            for t in 0..config.trials {
                jobs.push((m, size, t));
            }
        }
    }
    let results = Exec::default()
        .map(jobs.len(), |i| {
            let (m, size, t) = jobs[i];
            run_trial(config.seed, m, size, t, &settings)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut results = results;
    results.sort_by(|a, b| {
        (a.method.name(), a.sample_size, a.trial).cmp(&(b.method.name(), b.sample_size, b.trial))
    });
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.method.name().to_string(), r.sample_size.to_string(), r.trial.to_string(), num(r.system_accuracy)])
        .collect();
    let mut summary = Vec::new();
    for chunk in results.chunk_by(|a, b| a.method == b.method && a.sample_size == b.sample_size) {
        let acc: Vec<f64> = chunk.iter().map(|r| r.system_accuracy).collect();
        let (m, s) = mean_std(&acc);
        println!("{} n={} mean={m:.4} std={s:.4}", chunk[0].method.name(), chunk[0].sample_size);
        summary.push(vec![chunk[0].method.name().to_string(), chunk[0].sample_size.to_string(), num(m), num(s)]);
    }
    let mut manifest = Manifest::new("sweep", config.seed, config_hash(&config)?);
    manifest.emit(out, "sweep.csv", &csv_bytes(&["method", "sample_size", "trial", "system_accuracy"], &rows)?)?;
    manifest.emit(out, "summary.csv", &csv_bytes(&["method", "sample_size", "mean", "std"], &summary)?)?;
    manifest.finish(out)?;
    Ok(EXIT_OK)
}

pub fn verify(mut config: VerifyConfig, base: &Path, seed: Option<u64>, out: &Path) -> anyhow::Result<u8> {
    if let Some(s) = seed {
        config.seed = s;
    }
    let suite = Suite::parse(&config.suite).map_err(invalid)?;
    let (rows, summary): (Vec<CheckRow>, _) = match &config.task_path {
        Some(p) => {
            if matches!(suite, Suite::EnhancedMulti | Suite::EnhancedMm) {
                return Err(invalid(format!("{} draws its own tasks and takes no task_path", suite.name())));
            }
            let path = resolve(base, p);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading task {}", path.display()))?;
            let task = DiscreteTask::from_json(&text).with_context(|| format!("parsing task {}", path.display()))?;
            let rows = run_on_task(suite, &task, config.seed, 0)?;
            let summary = summarize(suite, 1, &rows, 0);
            (rows, summary)
        }
        None => {
            if config.instances == 0 {
                return Err(invalid("instances must be at least 1"));
            }
            run_suite(suite, config.seed, config.instances, Exec::default())?
        }
    };
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                suite.name().to_string(),
                r.instance.to_string(),
                r.hypothesis.to_string(),
                r.variant.clone(),
                num(r.lhs),
                num(r.rhs),
                num(r.slack),
                r.violations.to_string(),
            ]
        })
        .collect();
    let header = ["suite", "instance", "hypothesis", "variant", "lhs", "rhs", "slack", "violations"];
    let mut manifest = Manifest::new("verify", config.seed, config_hash(&config)?);
    manifest.emit(out, "verify.csv", &csv_bytes(&header, &table)?)?;
    manifest.finish(out)?;
    println!(
        "suite={} instances={} checks={} violations={} skipped={} max_negative_slack={}",
        suite.name(),
        summary.instances,
        summary.checks,
        summary.violations,
        summary.skipped,
        num(summary.max_negative_slack())
    );
    Ok(if summary.violations == 0 && summary.skipped == 0 { EXIT_OK } else { EXIT_VIOLATIONS })
}

