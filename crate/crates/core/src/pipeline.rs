//! Train/test protocol, model bundle and run manifest.
//!
//! Training runs augmentation (training frames only), angle extraction, a
//! PCA fit and the forest fit. The resulting [`ModelBundle`] records the
//! ids of every training frame so evaluation can refuse overlapping test
//! sets. A [`RunManifest`] captures every input and setting needed to
//! replay a run byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::augmentation::{augment_dataset, AugmentError, AugmentationConfig};
use crate::features::{AngleExtractor, AngleVector, FeatureError, OriginIndex, ANGLE_COUNT};
use crate::forest::{train_forest, ForestConfig, ForestError, ForestModel};
use crate::ingestion::{self, IngestError};
use crate::landmark::{LabeledDataset, LandmarkError, LandmarkFrame, SentenceClass};
use crate::metrics::{EvalReport, MetricsError};
use crate::pca::{fit_pca, PcaError, PcaModel};
use crate::rng::{self, Stage};

pub const FORMAT_VERSION: u32 = 1;

/// Marker in the ids of augmented frames.
pub const AUGMENTED_MARKER: &str = "#aug";

/// Process exit codes of the CLI.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const PROTOCOL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("train fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("class {0} has no frames")]
    ClassAbsent(SentenceClass),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{} test frame(s) also appear in the training manifest, e.g. `{}`", .0.len(), .0[0])]
    TrainTestOverlap(Vec<String>),
    #[error("augmented frame `{0}` found on the evaluation path")]
    AugmentedTestFrame(String),
    #[error("model format version {found} is not supported (expected {FORMAT_VERSION})")]
    FormatVersionMismatch { found: u32 },
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model bundle: {0}")]
    InvalidBundle(String),
    #[error("manifest input `{path}` changed: digest {actual} differs from recorded {recorded}")]
    DigestMismatch {
        path: String,
        recorded: String,
        actual: String,
    },
    #[error("manifest is missing `{0}`")]
    IncompleteManifest(&'static str),
    #[error(transparent)]
    Landmark(#[from] LandmarkError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        use PipelineError::*;
        match self {
            TrainTestOverlap(_) | AugmentedTestFrame(_) => exit_code::PROTOCOL,
            InvalidFraction(_) => exit_code::USAGE,
            Augment(AugmentError::InvalidConfig(_)) | Forest(ForestError::InvalidConfig(_)) => {
                exit_code::USAGE
            }
            Pca(PcaError::KTooLarge { .. } | PcaError::ZeroComponents) => exit_code::USAGE,
            Feature(FeatureError::OriginOutOfRange(_)) => exit_code::USAGE,
            _ => exit_code::DATA,
        }
    }
}

/// Settings of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k: usize,
    pub origin: OriginIndex,
    pub strict_degenerate: bool,
    /// `None` trains on the frames as given.
    pub augmentation: Option<AugmentationConfig>,
    pub forest: ForestConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 4,
            origin: OriginIndex::default(),
            strict_degenerate: false,
            augmentation: Some(AugmentationConfig::default()),
            forest: ForestConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Default settings with every stage seeded from `seed`.
    pub fn seeded(seed: u64) -> Self {
        let mut config = Self::default();
        config.set_seed(seed);
        config
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.forest.seed = seed;
        if let Some(aug) = self.augmentation.as_mut() {
            aug.seed = seed;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub origin: OriginIndex,
    pub strict_degenerate: bool,
    pub pca: PcaModel,
    pub forest: ForestModel,
    /// Ids of the training frames before augmentation.
    pub training_manifest: Vec<String>,
}

impl ModelBundle {
    pub fn check(&self) -> Result<(), PipelineError> {
        if self.format_version != FORMAT_VERSION {
            return Err(PipelineError::FormatVersionMismatch {
                found: self.format_version,
            });
        }
        self.pca.check()?;
        self.forest.check()?;
        if self.pca.dim() != ANGLE_COUNT {
            return Err(PipelineError::InvalidBundle(format!(
                "PCA input dimension {} is not {ANGLE_COUNT}",
                self.pca.dim()
            )));
        }
        if self.pca.k() != self.forest.n_features {
            return Err(PipelineError::InvalidBundle(format!(
                "PCA produces {} components but the forest expects {}",
                self.pca.k(),
                self.forest.n_features
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bundle serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        // Read the version first so old or future files fail with a clear error.
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let version: Version = serde_json::from_str(text)?;
        if version.format_version != FORMAT_VERSION {
            return Err(PipelineError::FormatVersionMismatch {
                found: version.format_version,
            });
        }
        let bundle: Self = serde_json::from_str(text)?;
        bundle.check()?;
        Ok(bundle)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&read_text(path.as_ref())?)
    }

    fn extractor(&self) -> AngleExtractor {
        AngleExtractor::new(self.origin, self.strict_degenerate)
    }

    /// PCA coordinates of one frame.
    pub fn project(&self, frame: &LandmarkFrame) -> Result<Vec<f64>, PipelineError> {
        let angles = self.extractor().extract(frame)?.vector;
        Ok(self.pca.transform(angles.angles())?)
    }

    pub fn predict_frame(&self, frame: &LandmarkFrame) -> Result<Prediction, PipelineError> {
        let z = self.project(frame)?;
        Ok(Prediction {
            frame_id: frame.frame_id.clone(),
            class: self.forest.predict(&z)?,
            proba: self.forest.predict_proba(&z)?,
        })
    }
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile(path.to_path_buf()).into(),
        _ => e.into(),
    })
}

/// Stratified split: each class is shuffled on its own stream and the
/// `floor(train_fraction * n)` training slots are shared out by largest
/// remainder (ties to AS). Both halves keep input order.
pub fn split(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), PipelineError> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(PipelineError::InvalidFraction(train_fraction));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, (_, label)) in data.iter().enumerate() {
        by_class[label.index()].push(i);
    }
    for class in SentenceClass::ALL {
        if by_class[class.index()].is_empty() {
            return Err(PipelineError::ClassAbsent(class));
        }
    }
    let n = data.len();
    let n_train = ((train_fraction * n as f64) + 1e-9).floor() as usize;
    let quotas = by_class.each_ref().map(|c| train_fraction * c.len() as f64);
    let mut take = quotas.map(|q| (q + 1e-9).floor() as usize);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (quotas[b] - take[b] as f64).total_cmp(&(quotas[a] - take[a] as f64)));
    let mut remaining = n_train.saturating_sub(take.iter().sum());
    for class in order.into_iter().cycle() {
        if remaining == 0 {
            break;
        }
        if take[class] < by_class[class].len() {
            take[class] += 1;
            remaining -= 1;
        }
    }

    let mut in_train = vec![false; n];
    for (class, members) in by_class.iter_mut().enumerate() {
        let mut rng = rng::stream(seed, Stage::Split, class as u64);
        members.shuffle(&mut rng);
        members[..take[class]]
            .iter()
            .for_each(|&i| in_train[i] = true);
    }
    let (train, test): (Vec<_>, Vec<_>) = data
        .frames()
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    let strip = |v: Vec<(LandmarkFrame, bool)>| {
        LabeledDataset::new(v.into_iter().map(|(f, _)| f).collect())
    };
    Ok((strip(train)?, strip(test)?))
}

/// Angle vectors for `frames` under one extractor.
pub fn extract_features<'a>(
    frames: impl IntoIterator<Item = &'a LandmarkFrame>,
    origin: OriginIndex,
    strict: bool,
) -> Result<Vec<AngleVector>, PipelineError> {
    Ok(AngleExtractor::new(origin, strict).extract_all(frames)?)
}

/// Augment, extract, fit PCA, project, fit the forest.
pub fn train(data: &LabeledDataset, config: &TrainConfig) -> Result<ModelBundle, PipelineError> {
    if data.is_empty() {
        return Err(ForestError::EmptyTrainingSet.into());
    }
    let augmented;
    let training = match &config.augmentation {
        Some(aug) => {
            augmented = augment_dataset(data, aug)?;
            &augmented
        }
        None => data,
    };
    let angles = extract_features(training.frames(), config.origin, config.strict_degenerate)?;
    let pca = fit_pca(&angles, config.k)?;
    let projected = angles
        .iter()
        .map(|a| pca.transform(a.angles()))
        .collect::<Result<Vec<_>, _>>()?;
    let forest = train_forest(&projected, &training.labels(), &config.forest)?;
    Ok(ModelBundle {
        format_version: FORMAT_VERSION,
        origin: config.origin,
        strict_degenerate: config.strict_degenerate,
        pca,
        forest,
        training_manifest: data.frame_ids().map(String::from).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub frame_id: String,
    pub class: SentenceClass,
    /// Vote fractions in the order (AS, ST).
    pub proba: [f64; 2],
}

pub fn predict(
    bundle: &ModelBundle,
    frames: &[LandmarkFrame],
) -> Result<Vec<Prediction>, PipelineError> {
    frames.iter().map(|f| bundle.predict_frame(f)).collect()
}

pub fn write_predictions(
    writer: impl std::io::Write,
    predictions: &[Prediction],
) -> Result<(), PipelineError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["frame_id", "predicted", "p_as", "p_st"])
        .map_err(IngestError::from)?;
    for p in predictions {
        csv.write_record([
            p.frame_id.clone(),
            p.class.to_string(),
            p.proba[0].to_string(),
            p.proba[1].to_string(),
        ])
        .map_err(IngestError::from)?;
    }
    csv.flush()?;
    Ok(())
}

/// Rejects test sets that share ids with the training manifest or carry
/// augmented frames.
pub fn check_test_protocol(
    bundle: &ModelBundle,
    test: &LabeledDataset,
) -> Result<(), PipelineError> {
    if let Some(id) = test.frame_ids().find(|id| id.contains(AUGMENTED_MARKER)) {
        return Err(PipelineError::AugmentedTestFrame(id.to_string()));
    }
    let trained: std::collections::HashSet<&str> = bundle
        .training_manifest
        .iter()
        .map(String::as_str)
        .collect();
    let overlap: Vec<String> = test
        .frame_ids()
        .filter(|id| trained.contains(id))
        .map(String::from)
        .collect();
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::TrainTestOverlap(overlap))
    }
}

/// Features, projection and forest vote for each test frame, scored against its label.
pub fn evaluate(bundle: &ModelBundle, test: &LabeledDataset) -> Result<EvalReport, PipelineError> {
    if test.is_empty() {
        return Err(PipelineError::EmptyTestSet);
    }
    check_test_protocol(bundle, test)?;
    let predicted = predict(bundle, test.frames())?
        .into_iter()
        .map(|p| p.class)
        .collect::<Vec<_>>();
    Ok(EvalReport::from_predictions(&test.labels(), &predicted)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                PipelineError::from(IngestError::MissingFile(path.to_path_buf()))
            }
            _ => e.into(),
        })?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        })
    }

    /// Fails if the file no longer matches the recorded digest.
    pub fn verify(&self) -> Result<(), PipelineError> {
        let now = Self::of(&self.path)?;
        if now.sha256 == self.sha256 {
            Ok(())
        } else {
            Err(PipelineError::DigestMismatch {
                path: self.path.clone(),
                recorded: self.sha256.clone(),
                actual: now.sha256,
            })
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Everything needed to reproduce one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    #[serde(default)]
    pub train_fraction: Option<f64>,
    #[serde(default)]
    pub stratified: bool,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub augmentation: Option<AugmentationConfig>,
    #[serde(default)]
    pub origin: Option<OriginIndex>,
    #[serde(default)]
    pub strict_degenerate: bool,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            seed,
            train_fraction: None,
            stratified: false,
            train: None,
            augmentation: None,
            origin: None,
            strict_degenerate: false,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Manifest path written next to `output`: `<output>.manifest.json`.
    pub fn path_for(output: impl AsRef<Path>) -> PathBuf {
        let mut name = output.as_ref().as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let manifest: Self = serde_json::from_str(&read_text(path.as_ref())?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(PipelineError::FormatVersionMismatch {
                found: manifest.format_version,
            });
        }
        Ok(manifest)
    }
}

/// Trains on a labeled landmark CSV, writes the model and its manifest.
pub fn train_file(
    train_csv: impl AsRef<Path>,
    config: &TrainConfig,
    model_out: impl AsRef<Path>,
) -> Result<(ModelBundle, RunManifest), PipelineError> {
    let input = InputDigest::of(&train_csv)?;
    let data = ingestion::read_labeled_landmark_csv(&train_csv)?;
    let bundle = train(&data, config)?;
    bundle.save(&model_out)?;
    let mut manifest = RunManifest::new("train", config.forest.seed);
    manifest.train = Some(*config);
    manifest.inputs.push(input);
    manifest
        .outputs
        .push(model_out.as_ref().display().to_string());
    manifest.save(RunManifest::path_for(&model_out))?;
    Ok((bundle, manifest))
}

/// Re-runs a recorded training run after checking its input digest.
pub fn replay_train(
    manifest: &RunManifest,
    model_out: impl AsRef<Path>,
) -> Result<ModelBundle, PipelineError> {
    let config = manifest
        .train
        .ok_or(PipelineError::IncompleteManifest("train"))?;
    let input = manifest
        .inputs
        .first()
        .ok_or(PipelineError::IncompleteManifest("inputs"))?;
    input.verify()?;
    let data = ingestion::read_labeled_landmark_csv(&input.path)?;
    let bundle = train(&data, &config)?;
    bundle.save(model_out)?;
    Ok(bundle)
}

/// Loads a bundle and a labeled test CSV and evaluates.
pub fn evaluate_file(
    model: impl AsRef<Path>,
    test_csv: impl AsRef<Path>,
) -> Result<EvalReport, PipelineError> {
    let bundle = ModelBundle::load(model)?;
    let test = ingestion::read_labeled_landmark_csv(test_csv)?;
    evaluate(&bundle, &test)
}
