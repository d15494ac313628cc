//! The demo's three operations as plain Rust, so they can be tested natively.

use facecue::pipeline::{self, split};
use facecue::synthetic::{face_with_brow_raise, synthetic_dataset, SyntheticConfig};
use facecue::{
    angles_from_frame, augment_dataset, AugmentationConfig, ForestConfig, LabeledDataset,
    LandmarkFrame, OriginIndex, Point2, SentenceClass, TrainConfig,
};
use serde::Serialize;

/// Canvas placement of the demo face.
const FACE_SIZE: f64 = 90.0;
const FACE_CENTER: (f64, f64) = (160.0, 150.0);

#[derive(Debug, Serialize)]
pub struct FaceView {
    pub points: Vec<[f64; 2]>,
    pub angles: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct AugmentView {
    pub original: Vec<[f64; 2]>,
    pub copies: Vec<Vec<[f64; 2]>>,
    /// Largest angle change of each copy against the original, radians.
    pub max_angle_change: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub truth: SentenceClass,
    pub predicted: SentenceClass,
}

#[derive(Debug, Serialize)]
pub struct RateRow {
    pub class: SentenceClass,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fnr: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct TrainView {
    pub train_frames: usize,
    pub augmented_frames: usize,
    pub test_frames: usize,
    pub accuracy: f64,
    pub confusion: [[u64; 2]; 2],
    pub rates: Vec<RateRow>,
    pub explained_variance: Vec<f64>,
    /// Test frames on the first two principal components.
    pub scatter: Vec<ScatterPoint>,
}

fn xy(points: &[Point2]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p.x, p.y]).collect()
}

fn demo_frame(brow_raise: f64, roll: f64) -> LandmarkFrame {
    let (sin, cos) = roll.sin_cos();
    let points = face_with_brow_raise(brow_raise)
        .into_iter()
        .map(|p| {
            let (x, y) = (cos * p.x - sin * p.y, sin * p.x + cos * p.y);
            Point2::new(FACE_CENTER.0 + FACE_SIZE * x, FACE_CENTER.1 + FACE_SIZE * y)
        })
        .collect();
    LandmarkFrame::new("demo", points, Some(SentenceClass::AS)).expect("template is finite")
}

/// The template face with raised brows and head roll, and its 67 angles.
pub fn face(brow_raise: f64, roll: f64) -> FaceView {
    let frame = demo_frame(brow_raise, roll);
    FaceView {
        angles: angles_from_frame(&frame, OriginIndex::default())
            .angles()
            .to_vec(),
        points: xy(&frame.points),
    }
}

pub fn augment_preview(
    seed: u64,
    rotation_range: f64,
    scale_range: f64,
    shift_range: f64,
    copies: usize,
) -> Result<AugmentView, String> {
    let frame = demo_frame(0.0, 0.0);
    let config = AugmentationConfig {
        rotation_range,
        scale_range,
        shift_range,
        copies_per_frame: copies,
        seed,
    };
    let data = LabeledDataset::new(vec![frame]).map_err(|e| e.to_string())?;
    let augmented = augment_dataset(&data, &config).map_err(|e| e.to_string())?;
    let frames = augmented.frames();
    let base = angles_from_frame(&frames[0], OriginIndex::default());
    let max_angle_change = frames[1..]
        .iter()
        .map(|f| {
            let a = angles_from_frame(f, OriginIndex::default());
            base.angles()
                .iter()
                .zip(a.angles())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(AugmentView {
        original: xy(&frames[0].points),
        copies: frames[1..].iter().map(|f| xy(&f.points)).collect(),
        max_angle_change,
    })
}

/// Generates a synthetic population, runs the full pipeline and scores the
/// held-out 30%.
pub fn train_demo(
    seed: u64,
    brow_offset: f64,
    copies: usize,
    n_trees: usize,
) -> Result<TrainView, String> {
    let population = SyntheticConfig {
        brow_offset,
        seed,
        ..SyntheticConfig::default()
    };
    let data = synthetic_dataset(&population);
    let (train, test) = split(&data, 0.7, seed).map_err(|e| e.to_string())?;
    let mut config = TrainConfig {
        augmentation: (copies > 0).then(|| AugmentationConfig {
            copies_per_frame: copies,
            ..AugmentationConfig::default()
        }),
        forest: ForestConfig {
            n_trees,
            ..ForestConfig::default()
        },
        ..TrainConfig::default()
    };
    config.set_seed(seed);
    let bundle = pipeline::train(&train, &config).map_err(|e| e.to_string())?;
    let report = pipeline::evaluate(&bundle, &test).map_err(|e| e.to_string())?;

    let scatter = test
        .iter()
        .map(|(frame, truth)| {
            let z = bundle.project(frame).map_err(|e| e.to_string())?;
            let predicted = bundle.forest.predict(&z).map_err(|e| e.to_string())?;
            Ok(ScatterPoint {
                x: z[0],
                y: z[1],
                truth,
                predicted,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let value = |r: Option<facecue::metrics::Rate>| r.map(|r| r.value());
    Ok(TrainView {
        train_frames: train.len(),
        augmented_frames: train.len() * (copies + 1),
        test_frames: test.len(),
        accuracy: report.accuracy.value(),
        confusion: report.confusion.counts,
        rates: report
            .per_class
            .iter()
            .map(|c| RateRow {
                class: c.class,
                tpr: value(c.tpr),
                fpr: value(c.fpr),
                tnr: value(c.tnr),
                fnr: value(c.fnr),
            })
            .collect(),
        explained_variance: bundle.pca.explained_variance.clone(),
        scatter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raising_brows_moves_only_brow_angles() {
        let flat = face(0.0, 0.0);
        let raised = face(0.3, 0.0);
        assert_eq!(flat.points.len(), 68);
        for (j, (a, b)) in flat.angles.iter().zip(&raised.angles).enumerate() {
            // feature j is landmark j+1 from the chin on
            let landmark = if j < 8 { j } else { j + 1 };
            assert_eq!(a != b, (17..27).contains(&landmark), "feature {j}");
        }
    }

    #[test]
    fn roll_moves_every_angle() {
        let flat = face(0.0, 0.0);
        let rolled = face(0.0, 0.2);
        assert!(flat.angles.iter().zip(&rolled.angles).all(|(a, b)| a != b));
    }

    #[test]
    fn still_augmentation_is_identity() {
        let view = augment_preview(1, 0.0, 0.0, 0.0, 3).unwrap();
        assert_eq!(view.copies.len(), 3);
        assert!(view.copies.iter().all(|c| *c == view.original));
        assert!(view.max_angle_change.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn rotation_shows_up_in_angles() {
        let view = augment_preview(1, 0.26, 0.0, 0.0, 5).unwrap();
        assert!(view.max_angle_change.iter().all(|&d| d > 0.0));
        assert!(augment_preview(1, -1.0, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn small_training_run() {
        let view = train_demo(4, 0.4, 4, 20).unwrap();
        assert_eq!(
            (view.train_frames, view.test_frames, view.augmented_frames),
            (122, 53, 610)
        );
        assert_eq!(view.scatter.len(), 53);
        assert_eq!(view.explained_variance.len(), 4);
        let correct = view
            .scatter
            .iter()
            .filter(|p| p.truth == p.predicted)
            .count();
        assert!((view.accuracy - correct as f64 / 53.0).abs() < 1e-12);
        assert!(view.accuracy > 0.8);
    }
}
