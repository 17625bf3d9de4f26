//! Linear and one-hidden-layer scorers, labeled datasets and a deterministic
//! gradient-descent trainer.

mod dataset;
mod scorer;
mod train;

pub use dataset::{LabeledDataset, DATASET_VERSION};
pub use scorer::{Layer, LinearScorer, MlpScorer, Scorer, SCORER_VERSION};
pub use train::{
    evaluate, system_accuracy, train, BatchSize, EpochStats, Optimizer, TrainConfig, TrainOutcome,
};
