//! Deep spectrogram classifiers, classical feature baselines, training and
//! persistence.

mod arch;
mod checkpoint;
mod classical;
mod deep;
mod train;

pub use arch::{build_network, ArchKind, ArchitectureConfig};
pub use checkpoint::{config_hash, sha256_hex, CheckpointManifest, Model, ModelSpec, MANIFEST_ENTRY};
pub use classical::{
    ExternalBaseline, FeatureClassifier, FeatureStats, KnnBaseline, KnnClassifier, LogRegBaseline,
    LogRegConfig, LogisticRegression,
};
pub use deep::{argmax, build_model, DeepModel, InputStats, Prediction, INFERENCE_BATCH};
pub use train::{
    curves_csv, parse_curves_csv, stratified_split, train, train_with_progress, EarlyStopping,
    EpochRecord, StopDecision, TrainConfig, TrainSummary, Trainer, CURVES_HEADER,
};
