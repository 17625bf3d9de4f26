//! Fuzz corpora for the regret-bound verifiers. Instance `i` of a suite is a
//! pure function of `(seed, i)`, so results do not depend on scheduling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::losses::{LossSelector, PhiSpec, PsiSpec, Stage};
use crate::oracles::{
    fit_tsybakov_b, minimal_margin, verify_bound_single_mae, verify_bound_two_expert, verify_bound_two_stage,
    verify_enhanced_bound, verify_lemma_noise, DiscreteTask, EnhancedMode, EnhancedOutcome, RegretReport,
};
use crate::synth::{gen_random_discrete_task, gen_random_hypothesis, TaskConstraint, TaskSpec};

/// Random hypotheses drawn per task.
pub const HYPOTHESES_PER_TASK: usize = 10;

/// Noise exponents exercised by the noise suites.
pub const ALPHAS: [f64; 3] = [0.3, 0.5, 0.9];

/// Exponent `s` of the enhanced-bound premise.
pub const ENHANCED_S: f64 = 2.0;

/// Draws allowed per enhanced-bound instance before it is counted as skipped.
pub const ENHANCED_ATTEMPTS: u64 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theorem3,
    Theorem5,
    #[serde(rename = "theorem7_q0")]
    Theorem7Q0,
    #[serde(rename = "theorem7_q05")]
    Theorem7Q05,
    #[serde(rename = "theorem7_q1")]
    Theorem7Q1,
    LemmaNoise,
    EnhancedMulti,
    EnhancedMm,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Theorem3,
        Suite::Theorem5,
        Suite::Theorem7Q0,
        Suite::Theorem7Q05,
        Suite::Theorem7Q1,
        Suite::LemmaNoise,
        Suite::EnhancedMulti,
        Suite::EnhancedMm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem3 => "theorem3",
            Suite::Theorem5 => "theorem5",
            Suite::Theorem7Q0 => "theorem7_q0",
            Suite::Theorem7Q05 => "theorem7_q05",
            Suite::Theorem7Q1 => "theorem7_q1",
            Suite::LemmaNoise => "lemma_noise",
            Suite::EnhancedMulti => "enhanced_multi",
            Suite::EnhancedMm => "enhanced_mm",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {name:?}")))
    }

    /// Task distribution of the corpus.
    pub fn task_spec(self) -> TaskSpec {
        let premise = TaskConstraint { two_stage_premise: true, positive_margin: false };
        let margin = TaskConstraint { two_stage_premise: true, positive_margin: true };
        let (ne_min, ne_max, constraint) = match self {
            Suite::Theorem3 => (1, 3, TaskConstraint::default()),
            Suite::Theorem5 => (2, 2, TaskConstraint::default()),
            Suite::Theorem7Q0 | Suite::Theorem7Q05 | Suite::Theorem7Q1 => (2, 3, premise),
            Suite::LemmaNoise | Suite::EnhancedMulti | Suite::EnhancedMm => (2, 3, margin),
        };
        TaskSpec { n_max: 4, ne_min, ne_max, k_max: 6, constraint }
    }
}

/// One evaluated inequality (or chain) of a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub instance: usize,
    pub hypothesis: usize,
    /// Stage, noise exponent or other sub-case, e.g. `single/alpha=0.5`.
    pub variant: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Smallest slack over every inequality behind this row.
    pub slack: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub instances: usize,
    pub checks: usize,
    pub violations: usize,
    /// Instances for which no premise-satisfying pair was found.
    pub skipped: usize,
    pub min_slack: f64,
}

impl SuiteSummary {
    /// Magnitude of the worst negative slack, 0 when every slack is
    /// non-negative.
    pub fn max_negative_slack(&self) -> f64 {
        (-self.min_slack).max(0.0)
    }
}

fn report_row(instance: usize, hypothesis: usize, variant: &str, r: &RegretReport) -> CheckRow {
    CheckRow {
        instance,
        hypothesis,
        variant: variant.to_string(),
        lhs: r.aggregate.lhs,
        rhs: r.aggregate.rhs,
        slack: r.min_slack(),
        violations: r.violations(),
    }
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::Single => "single",
        Stage::Two => "two",
    }
}

fn hypothesis_index(instance: usize, h: usize) -> u64 {
    (instance * HYPOTHESES_PER_TASK + h) as u64
}

/// Rows for one task of the corpus. Enhanced suites yield `None` for a stage
/// when no premise-satisfying pair turned up.
pub fn run_on_task(suite: Suite, task: &DiscreteTask, seed: u64, instance: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for h in 0..HYPOTHESES_PER_TASK {
        let hi = hypothesis_index(instance, h);
        match suite {
            Suite::Theorem3 => {
                let hyp = gen_random_hypothesis(task, Stage::Single, seed, hi);
                rows.push(report_row(instance, h, "mae", &verify_bound_single_mae(task, &hyp)?));
            }
            Suite::Theorem5 => {
                let hyp = gen_random_hypothesis(task, Stage::Two, seed, hi);
                let r = verify_bound_two_expert(task, &hyp, &PhiSpec::logistic())?;
                rows.push(report_row(instance, h, "logistic", &r));
            }
            Suite::Theorem7Q0 | Suite::Theorem7Q05 | Suite::Theorem7Q1 => {
                let q = match suite {
                    Suite::Theorem7Q0 => 0.0,
                    Suite::Theorem7Q05 => 0.5,
                    _ => 1.0,
                };
                let hyp = gen_random_hypothesis(task, Stage::Two, seed, hi);
                let r = verify_bound_two_stage(task, &hyp, q)?;
                rows.push(report_row(instance, h, &format!("q={q}"), &r));
            }
            Suite::LemmaNoise => {
                for stage in [Stage::Single, Stage::Two] {
                    let margins = minimal_margin(task, stage);
                    let hyp = gen_random_hypothesis(task, stage, seed, hi);
                    for alpha in ALPHAS {
                        let profile = fit_tsybakov_b(&margins, task.marginals(), alpha)?;
                        let chain = verify_lemma_noise(task, &hyp, &profile, stage)?;
                        rows.push(CheckRow {
                            instance,
                            hypothesis: h,
                            variant: format!("{}/alpha={alpha}", stage_name(stage)),
                            lhs: chain.disagreement,
                            rhs: chain.right,
                            slack: chain.first.slack.min(chain.second.slack),
                            violations: chain.violations(),
                        });
                    }
                }
            }
            Suite::EnhancedMulti | Suite::EnhancedMm => {
                return Err(Error::InvalidConfig(format!("{} draws its own tasks", suite.name())))
            }
        }
    }
    Ok(rows)
}

fn enhanced_loss(stage: Stage) -> LossSelector {
    match stage {
        Stage::Single => LossSelector::Mae {},
        Stage::Two => LossSelector::TwoStagePsi { psi: PsiSpec::mae() },
    }
}

/// One premise-satisfying `(task, hypothesis)` pair per stage, found by
/// redrawing both up to [`ENHANCED_ATTEMPTS`] times.
fn enhanced_instance(suite: Suite, seed: u64, instance: usize) -> Result<Vec<Option<CheckRow>>> {
    let mode = if suite == Suite::EnhancedMm { EnhancedMode::TheoremMm } else { EnhancedMode::TheoremMulti };
    let spec = suite.task_spec();
    let alpha = ALPHAS[instance % ALPHAS.len()];
    let mut out = Vec::new();
    for stage in [Stage::Single, Stage::Two] {
        let loss = enhanced_loss(stage);
        let mut found = None;
        for a in 0..ENHANCED_ATTEMPTS {
            let index = instance as u64 * ENHANCED_ATTEMPTS + a;
            let task = gen_random_discrete_task(seed, index, &spec)?;
            let hyp = gen_random_hypothesis(&task, stage, seed, index);
            let profile = match mode {
                EnhancedMode::TheoremMm => {
                    Some(fit_tsybakov_b(&minimal_margin(&task, stage), task.marginals(), alpha)?)
                }
                EnhancedMode::TheoremMulti => None,
            };
            if let EnhancedOutcome::Checked(c) =
                verify_enhanced_bound(&task, &hyp, &loss, ENHANCED_S, mode, profile.as_ref())?
            {
                let variant = match mode {
                    EnhancedMode::TheoremMm => format!("{}/alpha={alpha}", stage_name(stage)),
                    EnhancedMode::TheoremMulti => stage_name(stage).to_string(),
                };
                found = Some(CheckRow {
                    instance,
                    hypothesis: a as usize,
                    variant,
                    lhs: c.lhs,
                    rhs: c.rhs,
                    slack: c.slack,
                    violations: usize::from(!c.holds()),
                });
                break;
            }
        }
        out.push(found);
    }
    Ok(out)
}

/// Runs `instances` corpus instances and returns every row plus a summary.
pub fn run_suite(suite: Suite, seed: u64, instances: usize, exec: Exec) -> Result<(Vec<CheckRow>, SuiteSummary)> {
    let per_instance: Vec<Result<Vec<Option<CheckRow>>>> = exec.map(instances, |i| match suite {
        Suite::EnhancedMulti | Suite::EnhancedMm => enhanced_instance(suite, seed, i),
        _ => {
            let task = gen_random_discrete_task(seed, i as u64, &suite.task_spec())?;
            Ok(run_on_task(suite, &task, seed, i)?.into_iter().map(Some).collect())
        }
    });
    let mut rows = Vec::new();
    let mut skipped = 0;
    for r in per_instance {
        for row in r? {
            match row {
                Some(row) => rows.push(row),
                None => skipped += 1,
            }
        }
    }
    let summary = summarize(suite, instances, &rows, skipped);
    Ok((rows, summary))
}

pub fn summarize(suite: Suite, instances: usize, rows: &[CheckRow], skipped: usize) -> SuiteSummary {
    SuiteSummary {
        suite,
        instances,
        checks: rows.len(),
        violations: rows.iter().map(|r| r.violations).sum(),
        skipped,
        min_slack: rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        assert!(Suite::parse("theorem4").is_err());
    }

    #[test]
    fn small_corpora_are_clean_and_order_free() {
        for s in Suite::ALL {
            let (rows, summary) = run_suite(s, 3, 6, Exec::Parallel).unwrap();
            assert_eq!(summary.violations, 0, "{}", s.name());
            let (seq, _) = run_suite(s, 3, 6, Exec::Sequential).unwrap();
            assert_eq!(rows, seq);
        }
    }
}
