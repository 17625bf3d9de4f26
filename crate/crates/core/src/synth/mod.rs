//! Seeded generators for realizable training data and random finite tasks.
//! Every generator is a pure function of its arguments.

mod experts;
mod mog;
mod routing;
mod tasks;

pub use experts::{gen_class_range_experts, ClassRangeExperts, ExpertRangeSpec};
pub use mog::{gen_realizable_mog, MogConfig, MogTask, GENERATOR_VERSION, REFERENCE_SAMPLES};
pub use routing::{gen_realizable_two_stage, ROUTING_LABELS};
pub use tasks::{
    flat_simplex, gen_random_discrete_task, gen_random_hypothesis, TaskConstraint, TaskSpec, MAX_RESAMPLES,
    MIN_MARGIN,
};
