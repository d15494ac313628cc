//! Sentence-type classification (assertion vs. statement) of signed ASL
//! sentences from 68-point facial landmarks.
//!
//! The pipeline turns each frame into 67 chin-relative angles
//! ([`features`]), reduces them with principal component analysis
//! ([`pca`]) and classifies the projection with a random forest
//! ([`forest`]). Training data can be expanded with landmark-space affine
//! augmentation ([`augmentation`]); [`metrics`] produces the confusion
//! matrix and per-class rates; [`ingestion`] reads and writes the CSV
//! formats and [`pipeline`] ties the stages together under a train/test
//! protocol with reproducible model files.

pub mod augmentation;
pub mod features;
pub mod forest;
pub mod ingestion;
pub mod landmark;
pub mod metrics;
pub mod pca;
pub mod pipeline;
mod rng;
pub mod synthetic;

pub use augmentation::{augment_dataset, augment_frame, AugmentationConfig};
pub use features::{
    angles_from_frame, to_origin_frame, AngleExtractor, AngleVector, OriginIndex, ANGLE_COUNT,
};
pub use forest::{gini, train_forest, ForestConfig, ForestModel};
pub use landmark::{
    validate_frame, LabeledDataset, LandmarkFrame, Point2, SentenceClass, LANDMARK_COUNT,
};
pub use metrics::{ConfusionMatrix, EvalReport};
pub use pca::{fit_pca, FeatureMatrix, PcaModel};
pub use pipeline::{ModelBundle, PipelineError, RunManifest, TrainConfig};
