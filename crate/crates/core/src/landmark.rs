//! Landmark frames, sentence classes and datasets.
//!
//! A [`LandmarkFrame`] holds the 68 image-plane points a shape predictor
//! emits for one video frame, in the standard 68-landmark ordering
//! (jaw 0–16, brows 17–26, nose 27–35, eyes 36–47, mouth 48–67).
//! Coordinates are pixels with the origin at the top-left of the image.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of landmarks per frame.
pub const LANDMARK_COUNT: usize = 68;

/// Conventional chin-center landmark (jawline midpoint).
pub const CHIN_INDEX: usize = 8;

/// Outer corner of the subject's right eye (image left).
pub const RIGHT_EYE_OUTER: usize = 36;
/// Outer corner of the subject's left eye (image right).
pub const LEFT_EYE_OUTER: usize = 45;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LandmarkError {
    #[error("frame `{frame_id}` has {count} points, expected {LANDMARK_COUNT}")]
    WrongPointCount { frame_id: String, count: usize },
    #[error("frame `{frame_id}` has a non-finite coordinate at landmark {index}")]
    NonFiniteCoordinate { frame_id: String, index: usize },
    #[error("frame `{frame_id}` has no label")]
    MissingLabel { frame_id: String },
    #[error("duplicate frame id `{0}`")]
    DuplicateFrameId(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unknown sentence class `{0}` (expected AS or ST)")]
    UnknownClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Sentence type carried by a signed sentence.
///
/// The derived ordering `AS < ST` is the tie-breaking order used by every
/// vote in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SentenceClass {
    /// Assertion: the signer declares an action will occur.
    AS,
    /// Statement: the sentence states a fact.
    ST,
}

impl SentenceClass {
    pub const ALL: [SentenceClass; 2] = [SentenceClass::AS, SentenceClass::ST];

    pub fn index(self) -> usize {
        match self {
            SentenceClass::AS => 0,
            SentenceClass::ST => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn other(self) -> Self {
        match self {
            SentenceClass::AS => SentenceClass::ST,
            SentenceClass::ST => SentenceClass::AS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentenceClass::AS => "AS",
            SentenceClass::ST => "ST",
        }
    }
}

impl fmt::Display for SentenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentenceClass {
    type Err = LandmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AS" => Ok(SentenceClass::AS),
            "ST" => Ok(SentenceClass::ST),
            other => Err(LandmarkError::UnknownClass(other.to_string())),
        }
    }
}

/// The 68 landmarks of one frame plus identity metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub frame_id: String,
    pub points: Vec<Point2>,
    pub label: Option<SentenceClass>,
}

impl LandmarkFrame {
    /// Builds a frame and validates it.
    pub fn new(
        frame_id: impl Into<String>,
        points: Vec<Point2>,
        label: Option<SentenceClass>,
    ) -> Result<Self, LandmarkError> {
        validate_frame(Self {
            frame_id: frame_id.into(),
            points,
            label,
        })
    }

    pub fn point(&self, index: usize) -> Point2 {
        self.points[index]
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point2::new(sx / n, sy / n)
    }

    /// Distance between the outer eye corners.
    pub fn inter_ocular_distance(&self) -> f64 {
        self.points[RIGHT_EYE_OUTER].distance(&self.points[LEFT_EYE_OUTER])
    }

    /// Returns a copy with every point passed through `f`.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Self {
        Self {
            frame_id: self.frame_id.clone(),
            points: self.points.iter().copied().map(f).collect(),
            label: self.label,
        }
    }
}

/// Returns the frame unchanged if it has exactly 68 finite points.
pub fn validate_frame(frame: LandmarkFrame) -> Result<LandmarkFrame, LandmarkError> {
    if frame.points.len() != LANDMARK_COUNT {
        return Err(LandmarkError::WrongPointCount {
            frame_id: frame.frame_id,
            count: frame.points.len(),
        });
    }
    if let Some(index) = frame.points.iter().position(|p| !p.is_finite()) {
        return Err(LandmarkError::NonFiniteCoordinate {
            frame_id: frame.frame_id,
            index,
        });
    }
    Ok(frame)
}

/// Frames whose every member carries a label, with unique frame ids.
///
/// Iteration order is insertion order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<LandmarkFrame>", into = "Vec<LandmarkFrame>")]
pub struct LabeledDataset {
    frames: Vec<LandmarkFrame>,
}

impl LabeledDataset {
    /// Validates every frame, and checks labels and id uniqueness.
    ///
    /// An empty dataset is legal here; training operations reject it.
    pub fn new(frames: Vec<LandmarkFrame>) -> Result<Self, LandmarkError> {
        let mut seen = HashSet::with_capacity(frames.len());
        let frames = frames
            .into_iter()
            .map(|frame| {
                let frame = validate_frame(frame)?;
                if frame.label.is_none() {
                    return Err(LandmarkError::MissingLabel {
                        frame_id: frame.frame_id,
                    });
                }
                if !seen.insert(frame.frame_id.clone()) {
                    return Err(LandmarkError::DuplicateFrameId(frame.frame_id));
                }
                Ok(frame)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<LandmarkFrame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LandmarkFrame, SentenceClass)> {
        self.frames
            .iter()
            .map(|f| (f, f.label.expect("labeled dataset invariant")))
    }

    pub fn labels(&self) -> Vec<SentenceClass> {
        self.iter().map(|(_, label)| label).collect()
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = &str> {
        self.frames.iter().map(|f| f.frame_id.as_str())
    }

    /// Number of frames per class, indexed by [`SentenceClass::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for (_, label) in self.iter() {
            counts[label.index()] += 1;
        }
        counts
    }
}

impl TryFrom<Vec<LandmarkFrame>> for LabeledDataset {
    type Error = LandmarkError;

    fn try_from(frames: Vec<LandmarkFrame>) -> Result<Self, Self::Error> {
        Self::new(frames)
    }
}

impl From<LabeledDataset> for Vec<LandmarkFrame> {
    fn from(data: LabeledDataset) -> Self {
        data.frames
    }
}
