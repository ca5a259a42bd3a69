//! ASV/CM fusion back-ends.
//!
//! Two strategies: adding the ASV and CM scores of each trial
//! ([`score_sum`]), and a small MLP over the concatenated enrollment,
//! test and CM embeddings ([`MlpBackend`]).

mod backend;
mod mlp;
mod normalize;
mod training;

pub use backend::{backend_score, mlp_forward, EmbeddingSources};
pub use mlp::{Dense, Gradients, MlpBackend, LEAKY_SLOPE, MODEL_FORMAT_VERSION};
pub use normalize::{score_sum, MinMax, ScoreNormalizer};
pub use training::{
    build_training_trials, mlp_train, mlp_train_with_holdout, parse_labels, read_labels,
    write_labels, ClassRatios, EpochStats, LabeledUtterance, PairSampling, TrainedBackend,
    TrainingConfig, TrainingTrial, TrainingTrials,
};
