//! Synthetic two-class landmark populations.
//!
//! Faces are drawn from a parametric 68-point template. Statement (ST)
//! frames have their brows raised by `brow_offset` relative to assertion
//! (AS) frames. Every frame also gets per-subject shape variation, brow
//! jitter, landmark noise and a random head pose (roll, size, position).
//! Coordinates are rounded to whole pixels like a shape predictor's output.
//!
//! Template units: face half-width 1, x to the right, y down, chin at (0, 1).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::landmark::{LabeledDataset, LandmarkFrame, Point2, SentenceClass, LANDMARK_COUNT};
use crate::rng::{self, Stage};

/// The neutral 68-point face in template units.
pub fn template() -> Vec<Point2> {
    let mut pts = Vec::with_capacity(LANDMARK_COUNT);
    // jaw 0-16, ear to ear through the chin (8)
    for i in 0..17 {
        let t = PI * i as f64 / 16.0;
        pts.push(Point2::new(-t.cos(), -0.1 + 1.1 * t.sin()));
    }
    pts[8] = Point2::new(0.0, 1.0);
    // brows 17-21 (image left) and 22-26
    for side in [-1.0, 1.0] {
        for j in 0..5 {
            let u = j as f64 / 4.0;
            let x = if side < 0.0 {
                -0.8 + 0.6 * u
            } else {
                0.2 + 0.6 * u
            };
            let arch = (PI * u).sin();
            pts.push(Point2::new(x, -0.55 - 0.1 * arch));
        }
    }
    // nose bridge 27-30, nostrils 31-35
    for j in 0..4 {
        pts.push(Point2::new(0.0, -0.35 + 0.5 * j as f64 / 3.0));
    }
    for j in 0..5 {
        pts.push(Point2::new(
            -0.2 + 0.1 * j as f64,
            0.25 + 0.03 * (1.0 - (j as f64 - 2.0).abs() / 2.0),
        ));
    }
    // eyes 36-41, 42-47; 36 and 45 are the outer corners
    let right_eye = [
        (-0.65, -0.3),
        (-0.52, -0.37),
        (-0.38, -0.37),
        (-0.25, -0.3),
        (-0.38, -0.24),
        (-0.52, -0.24),
    ];
    let left_eye = [
        (0.25, -0.3),
        (0.38, -0.37),
        (0.52, -0.37),
        (0.65, -0.3),
        (0.52, -0.24),
        (0.38, -0.24),
    ];
    pts.extend(
        right_eye
            .iter()
            .chain(&left_eye)
            .map(|&(x, y)| Point2::new(x, y)),
    );
    // outer lip 48-59, inner lip 60-67, clockwise from the left corner
    for j in 0..12 {
        let phi = PI + 2.0 * PI * j as f64 / 12.0;
        pts.push(Point2::new(0.35 * phi.cos(), 0.55 + 0.12 * phi.sin()));
    }
    for j in 0..8 {
        let phi = PI + 2.0 * PI * j as f64 / 8.0;
        pts.push(Point2::new(0.25 * phi.cos(), 0.55 + 0.05 * phi.sin()));
    }
    debug_assert_eq!(pts.len(), LANDMARK_COUNT);
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub frames: usize,
    /// Extra brow raise of ST frames, template units. The angle features
    /// respond weakly to vertical brow motion (about 0.18 rad per unit for
    /// the outer brow), so the raise has to be large before it outweighs
    /// head roll in the leading principal components.
    pub brow_offset: f64,
    /// Standard deviation of the shared brow height per frame.
    pub brow_jitter: f64,
    /// Standard deviation of independent per-landmark noise.
    pub landmark_noise: f64,
    /// Standard deviation of per-subject width/height scaling.
    pub shape_variation: f64,
    /// Maximum absolute head roll, radians.
    pub max_roll: f64,
    /// Face half-width range in pixels.
    pub face_size: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            frames: 175,
            brow_offset: 0.4,
            brow_jitter: 0.04,
            landmark_noise: 0.01,
            shape_variation: 0.04,
            max_roll: 0.12,
            face_size: (70.0, 130.0),
            seed: 2024,
        }
    }
}

/// Class of synthetic frame `index`: alternating, starting with AS.
pub fn class_of(index: usize) -> SentenceClass {
    SentenceClass::ALL[index % 2]
}

/// Template face with brows lifted by `raise` (template units, upward).
pub fn face_with_brow_raise(raise: f64) -> Vec<Point2> {
    let mut pts = template();
    pts[17..27].iter_mut().for_each(|p| p.y -= raise);
    pts
}

/// Frame `index` of the population described by `config`.
pub fn synthetic_frame(config: &SyntheticConfig, index: usize) -> LandmarkFrame {
    let mut rng = rng::stream(config.seed, Stage::Synthetic, index as u64);
    let label = class_of(index);
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng, sd: f64| {
        if sd > 0.0 {
            Normal::new(0.0, sd).expect("finite sd").sample(rng)
        } else {
            0.0
        }
    };

    let raise = match label {
        SentenceClass::AS => 0.0,
        SentenceClass::ST => config.brow_offset,
    } + gauss(&mut rng, config.brow_jitter);
    let width = 1.0 + gauss(&mut rng, config.shape_variation);
    let height = 1.0 + gauss(&mut rng, config.shape_variation);
    let roll = config.max_roll * rng::symmetric_unit(&mut rng);
    let size = rng.gen_range(config.face_size.0..=config.face_size.1);
    let center = Point2::new(rng.gen_range(200.0..440.0), rng.gen_range(160.0..320.0));
    let (sin, cos) = roll.sin_cos();

    let points = face_with_brow_raise(raise)
        .into_iter()
        .map(|p| {
            let x = p.x * width + gauss(&mut rng, config.landmark_noise);
            let y = p.y * height + gauss(&mut rng, config.landmark_noise);
            let (rx, ry) = (cos * x - sin * y, sin * x + cos * y);
            Point2::new(
                (center.x + size * rx).round(),
                (center.y + size * ry).round(),
            )
        })
        .collect();
    LandmarkFrame::new(format!("synth-{index:04}"), points, Some(label))
        .expect("synthetic frames are finite")
}

pub fn synthetic_dataset(config: &SyntheticConfig) -> LabeledDataset {
    LabeledDataset::new(
        (0..config.frames)
            .map(|i| synthetic_frame(config, i))
            .collect(),
    )
    .expect("synthetic ids are unique")
}
