//! Corpus handling, dataset splits, training, evaluation, ablation runs
//! and checkpoints.

pub mod ablation;
pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod metrics;
pub mod train;

pub use ablation::{run_ablation, AblationRow, AblationTable};
pub use checkpoint::{checkpoint_load, checkpoint_save};
pub use config::{parse_variant_list, TrainConfig, Variant, VariantFlags};
pub use corpus::{load_corpus, parse_corpus, write_corpus, LabeledMessage};
pub use dataset::{split_dataset, split_indices, Dataset, Split, DEFAULT_RATIOS};
pub use metrics::{Averaging, ClassMetrics, MetricsReport};
pub use train::{
    accuracy, build_model, evaluate, prepare_training_set, train, train_batch, train_model, BatchRecord, EpochRecord,
    Resources, TrainOutcome, TrainSample, TrainedModel,
};
pub use crate::text::{pad_truncate, tokenize};
