//! Chin-relative angle features.
//!
//! Every landmark other than the origin is re-expressed as the displacement
//! `(x0 - xi, y0 - yi)` from the origin landmark, and reduced to
//!
//! ```text
//! theta_i = arccos((x0 - xi) / sqrt((x0 - xi)^2 + (y0 - yi)^2))
//! ```
//!
//! Feature `j` is landmark `j` for `j < origin` and landmark `j + 1` after it.
//!
//! The formula keeps only the normalized horizontal component, so it is
//! invariant to translation and uniform scaling, and it cannot tell a point
//! above the origin from its mirror image below. It is *not* invariant to
//! rotation about the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landmark::{LandmarkFrame, Point2, CHIN_INDEX, LANDMARK_COUNT};

/// Length of an [`AngleVector`].
pub const ANGLE_COUNT: usize = LANDMARK_COUNT - 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("origin index {0} is outside 0..={max}", max = LANDMARK_COUNT - 1)]
    OriginOutOfRange(usize),
    #[error("frame `{frame_id}`: landmark {landmark} coincides with the origin")]
    DegenerateLandmark { frame_id: String, landmark: usize },
    #[error("angle vector has {0} entries, expected {ANGLE_COUNT}")]
    WrongLength(usize),
    #[error("angle {value} at position {position} is outside [0, pi]")]
    OutOfRange { position: usize, value: f64 },
}

/// Landmark index used as the coordinate origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct OriginIndex(usize);

impl OriginIndex {
    pub fn new(index: usize) -> Result<Self, FeatureError> {
        if index < LANDMARK_COUNT {
            Ok(Self(index))
        } else {
            Err(FeatureError::OriginOutOfRange(index))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Landmark index described by feature position `j`.
    pub fn landmark_for_feature(self, j: usize) -> usize {
        if j < self.0 {
            j
        } else {
            j + 1
        }
    }
}

impl Default for OriginIndex {
    fn default() -> Self {
        Self(CHIN_INDEX)
    }
}

impl TryFrom<usize> for OriginIndex {
    type Error = FeatureError;

    fn try_from(index: usize) -> Result<Self, Self::Error> {
        Self::new(index)
    }
}

impl From<OriginIndex> for usize {
    fn from(origin: OriginIndex) -> Self {
        origin.0
    }
}

/// The 67 angles of one frame, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleVector {
    pub source_frame_id: String,
    angles: Vec<f64>,
}

impl AngleVector {
    /// Checks length and the `[0, pi]` range.
    pub fn new(source_frame_id: impl Into<String>, angles: Vec<f64>) -> Result<Self, FeatureError> {
        if angles.len() != ANGLE_COUNT {
            return Err(FeatureError::WrongLength(angles.len()));
        }
        if let Some((position, &value)) = angles
            .iter()
            .enumerate()
            .find(|(_, a)| !(0.0..=PI).contains(*a))
        {
            return Err(FeatureError::OutOfRange { position, value });
        }
        Ok(Self {
            source_frame_id: source_frame_id.into(),
            angles,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

impl AsRef<[f64]> for AngleVector {
    fn as_ref(&self) -> &[f64] {
        &self.angles
    }
}

/// Displacements `(x0 - xi, y0 - yi)` for every landmark except the origin,
/// in ascending landmark order.
pub fn to_origin_frame(frame: &LandmarkFrame, origin: OriginIndex) -> Vec<Point2> {
    let o = frame.point(origin.get());
    frame
        .points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != origin.get())
        .map(|(_, p)| Point2::new(o.x - p.x, o.y - p.y))
        .collect()
}

/// Angle of one displacement, or `None` when it has zero length.
pub fn displacement_angle(d: Point2) -> Option<f64> {
    let norm = (d.x * d.x + d.y * d.y).sqrt();
    if norm == 0.0 {
        return None;
    }
    Some((d.x / norm).clamp(-1.0, 1.0).acos())
}

/// Angle vector plus the landmarks that coincided with the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub vector: AngleVector,
    /// Landmark indices that were substituted with angle 0.
    pub degenerate: Vec<usize>,
}

/// Computes angle vectors with a fixed origin and degenerate-point policy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AngleExtractor {
    pub origin: OriginIndex,
    /// Fail on a landmark coinciding with the origin instead of emitting 0.
    pub strict: bool,
}

impl AngleExtractor {
    pub fn new(origin: OriginIndex, strict: bool) -> Self {
        Self { origin, strict }
    }

    pub fn extract(&self, frame: &LandmarkFrame) -> Result<Extraction, FeatureError> {
        let mut degenerate = Vec::new();
        let mut angles = Vec::with_capacity(ANGLE_COUNT);
        for (j, d) in to_origin_frame(frame, self.origin).into_iter().enumerate() {
            match displacement_angle(d) {
                Some(theta) => angles.push(theta),
                None => {
                    let landmark = self.origin.landmark_for_feature(j);
                    if self.strict {
                        return Err(FeatureError::DegenerateLandmark {
                            frame_id: frame.frame_id.clone(),
                            landmark,
                        });
                    }
                    degenerate.push(landmark);
                    angles.push(0.0);
                }
            }
        }
        if !degenerate.is_empty() {
            log::warn!(
                "frame `{}`: landmarks {:?} coincide with origin {}; angle set to 0",
                frame.frame_id,
                degenerate,
                self.origin.get()
            );
        }
        Ok(Extraction {
            vector: AngleVector {
                source_frame_id: frame.frame_id.clone(),
                angles,
            },
            degenerate,
        })
    }

    /// Extracts every frame, failing on the first error.
    pub fn extract_all<'a>(
        &self,
        frames: impl IntoIterator<Item = &'a LandmarkFrame>,
    ) -> Result<Vec<AngleVector>, FeatureError> {
        frames
            .into_iter()
            .map(|f| self.extract(f).map(|e| e.vector))
            .collect()
    }
}

/// Angle vector with degenerate landmarks substituted by 0 (logged).
pub fn angles_from_frame(frame: &LandmarkFrame, origin: OriginIndex) -> AngleVector {
    AngleExtractor::new(origin, false)
        .extract(frame)
        .expect("lenient extraction never fails")
        .vector
}
