//! Exact Bayes-optimal quantities on finite-support tasks, used to check
//! regret bounds without sampling error.

mod bounds;
mod noise;
mod regret;
mod task;

pub use bounds::{
    cost_constant, two_stage_gamma, verify_bound_single_mae, verify_bound_two_expert, verify_bound_two_stage,
    BoundCheck, PointReport, RegretReport, SLACK_FLOOR,
};
pub use noise::{
    fit_tsybakov_b, minimal_margin, verify_enhanced_bound, verify_lemma_noise, EnhancedMode, EnhancedOutcome,
    NoiseChain, NoiseProfile,
};
pub use regret::{
    bayes_action, bayes_deferral, bayes_two_stage, conditional_error, conditional_min, conditional_min_surrogate,
    conditional_regret, conditional_regret_def, conditional_regret_tdef, empirical_excess, expected_error,
    mae_conditional_at, minimizability_gap, phi_pair_min, psi_simplex_min, two_stage_psi_conditional_at,
    two_stage_weights, HypothesisClass, Objective,
};
pub use task::{DiscreteTask, TabularHypothesis, TASK_VERSION};
