//! Landmark-space data augmentation.
//!
//! Each augmented copy is the source frame rotated and scaled about its
//! landmark centroid and then shifted:
//!
//! ```text
//! p' = A (p - c) + c + t,   A = s R(angle)
//! ```
//!
//! with `angle ~ U[-rotation_range, rotation_range]`,
//! `s ~ U[1 - scale_range, 1 + scale_range]` and each component of `t`
//! drawn from `U[-b, b]`, `b = shift_range * inter-ocular distance`.
//! Shifts are rounded to 1/1024 px so that a pure shift of integer-pixel
//! landmarks is exact in floating point.
//!
//! Random draws come from the ChaCha8 stream of the source frame's index,
//! four per copy in the order rotation, scale, shift x, shift y.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::landmark::{LabeledDataset, LandmarkError, LandmarkFrame, Point2};
use crate::rng::{self, Stage};

const SHIFT_QUANTUM: f64 = 1024.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("cannot augment an empty dataset")]
    EmptyDataset,
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Landmark(#[from] LandmarkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Maximum absolute rotation, radians.
    pub rotation_range: f64,
    /// Maximum shift per axis as a fraction of the inter-ocular distance.
    pub shift_range: f64,
    /// Scale factor is drawn from `[1 - scale_range, 1 + scale_range]`.
    pub scale_range: f64,
    pub copies_per_frame: usize,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            rotation_range: 0.26,
            shift_range: 0.1,
            scale_range: 0.1,
            // 29 copies + the original turns 122 frames into 3660
            copies_per_frame: 29,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let ranges = [self.rotation_range, self.shift_range, self.scale_range];
        if ranges.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(AugmentError::InvalidConfig(
                "ranges must be finite and non-negative",
            ));
        }
        if self.scale_range >= 1.0 {
            return Err(AugmentError::InvalidConfig("scale_range must be below 1"));
        }
        if self.copies_per_frame == 0 {
            return Err(AugmentError::InvalidConfig(
                "copies_per_frame must be at least 1",
            ));
        }
        Ok(())
    }
}

/// One sampled similarity transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDraw {
    pub rotation: f64,
    pub scale: f64,
    pub shift: Point2,
}

impl AffineDraw {
    pub fn sample(config: &AugmentationConfig, inter_ocular: f64, rng: &mut impl Rng) -> Self {
        let rotation = config.rotation_range * rng::symmetric_unit(rng);
        let scale = 1.0 + config.scale_range * rng::symmetric_unit(rng);
        let bound = config.shift_range * inter_ocular;
        let mut shift =
            || (bound * rng::symmetric_unit(rng) * SHIFT_QUANTUM).round() / SHIFT_QUANTUM;
        let shift = Point2::new(shift(), shift());
        Self {
            rotation,
            scale,
            shift,
        }
    }

    /// Applies the transform about `center`.
    pub fn apply(&self, p: Point2, center: Point2) -> Point2 {
        let (sin, cos) = self.rotation.sin_cos();
        let (a, b, c, d) = (
            self.scale * cos,
            -self.scale * sin,
            self.scale * sin,
            self.scale * cos,
        );
        // p' = A p + (c - A c) + t; with A = I the offset is exactly zero.
        let off_x = center.x - (a * center.x + b * center.y);
        let off_y = center.y - (c * center.x + d * center.y);
        Point2::new(
            (a * p.x + b * p.y) + off_x + self.shift.x,
            (c * p.x + d * p.y) + off_y + self.shift.y,
        )
    }
}

/// Draws one transform from `rng` and applies it to `frame`.
///
/// The copy keeps the label and gets the id `<frame_id>#aug<counter>`.
pub fn augment_frame(
    frame: &LandmarkFrame,
    config: &AugmentationConfig,
    rng: &mut impl Rng,
    counter: usize,
) -> LandmarkFrame {
    let draw = AffineDraw::sample(config, frame.inter_ocular_distance(), rng);
    let center = frame.centroid();
    let mut out = frame.map_points(|p| draw.apply(p, center));
    out.frame_id = format!("{}#aug{}", frame.frame_id, counter);
    out
}

/// Original frames, each followed by its `copies_per_frame` augmented copies.
pub fn augment_dataset(
    data: &LabeledDataset,
    config: &AugmentationConfig,
) -> Result<LabeledDataset, AugmentError> {
    config.validate()?;
    if data.is_empty() {
        return Err(AugmentError::EmptyDataset);
    }
    let expand = |(index, frame): (usize, &LandmarkFrame)| {
        let mut rng = rng::stream(config.seed, Stage::Augment, index as u64);
        let mut group = Vec::with_capacity(config.copies_per_frame + 1);
        group.push(frame.clone());
        group.extend(
            (1..=config.copies_per_frame).map(|n| augment_frame(frame, config, &mut rng, n)),
        );
        group
    };
    #[cfg(feature = "parallel")]
    let groups: Vec<Vec<LandmarkFrame>> =
        data.frames().par_iter().enumerate().map(expand).collect();
    #[cfg(not(feature = "parallel"))]
    let groups: Vec<Vec<LandmarkFrame>> = data.frames().iter().enumerate().map(expand).collect();
    Ok(LabeledDataset::new(groups.into_iter().flatten().collect())?)
}
