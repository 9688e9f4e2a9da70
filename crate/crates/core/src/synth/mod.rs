//! Synthetic detection samples and tracking pairs.
//!
//! A detection sample is a body image with lesions placed by descriptor
//! matching and composited by seamless cloning; its label mask marks every
//! blended lesion support with the lesion's class. A tracking pair takes such a
//! sample, deforms it with a known flow field and optionally rescales some
//! lesions, so the generating flow is exact dense correspondence ground truth.

mod augment;
mod deform;
mod detection;
pub mod fixtures;
mod pair;
mod placement;

pub use augment::{apply_photometric, augment_lesion, AugmentParams, AugmentRanges, PhotometricRanges};
pub use deform::{elastic_noise_field, make_deformation, DeformParams};
pub use detection::{synth_detection_sample, SynthConfig};
pub use pair::{synth_tracking_pair, PairParams, PerturbParams, TrackingPair};
pub use placement::{
    greedy_select, lesion_ring_descriptor, score_placements, score_placements_masked, select_placements,
    Descriptor, PlacementRanges, ScoreMap, DESCRIPTOR_SCALE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{BinaryMask, ImageError, ImageRgb, LabelMask, LesionClass};
use crate::poissonblend::BlendError;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("no valid placement candidate for lesion {lesion_id}")]
    NoValidCandidate { lesion_id: String },
    #[error("lesion {lesion_id} ({width}x{height}) does not fit in the body ({body_w}x{body_h})")]
    LesionTooLarge { lesion_id: String, width: usize, height: usize, body_w: usize, body_h: usize },
    #[error("augmented lesion is {width}x{height}, above the {max} pixel footprint limit")]
    FootprintExceeded { width: usize, height: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid asset {id}: {reason}")]
    InvalidAsset { id: String, reason: String },
    #[error("no lesion assets supplied")]
    NoLesions,
    #[error(transparent)]
    Blend(#[from] BlendError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// A lesion crop with its support mask and diagnosis.
#[derive(Clone, Debug, PartialEq)]
pub struct LesionAsset {
    pub id: String,
    pub image: ImageRgb,
    pub alpha: BinaryMask,
    pub label: LesionClass,
}

impl LesionAsset {
    pub fn new(id: impl Into<String>, image: ImageRgb, alpha: BinaryMask, label: LesionClass) -> Result<Self, SynthError> {
        let id = id.into();
        if alpha.dimensions() != image.dimensions() {
            return Err(SynthError::InvalidAsset { id, reason: "alpha size differs from image".into() });
        }
        if alpha.is_empty() {
            return Err(SynthError::InvalidAsset { id, reason: "empty alpha".into() });
        }
        Ok(LesionAsset { id, image, alpha, label })
    }

    /// Anchor pixel: placements position this lesion pixel on the candidate center.
    pub fn anchor(&self) -> (usize, usize) {
        (self.image.width() / 2, self.image.height() / 2)
    }
}

/// A body photograph with its segmented skin region.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyAsset {
    pub id: String,
    pub image: ImageRgb,
    pub skin: BinaryMask,
}

impl BodyAsset {
    pub fn new(id: impl Into<String>, image: ImageRgb, skin: BinaryMask) -> Result<Self, SynthError> {
        let id = id.into();
        if skin.dimensions() != image.dimensions() {
            return Err(SynthError::InvalidAsset { id, reason: "skin mask size differs from image".into() });
        }
        if skin.is_empty() {
            return Err(SynthError::InvalidAsset { id, reason: "empty skin mask".into() });
        }
        Ok(BodyAsset { id, image, skin })
    }
}

/// Where and how one lesion was blended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub lesion_id: String,
    /// Body pixel under the lesion anchor.
    pub center: (usize, usize),
    pub scale: f64,
    pub rotation: f64,
    pub label: LesionClass,
    pub score: f64,
    /// Inclusive bounding box of the blended support, in body pixels.
    #[serde(default)]
    pub bbox: (usize, usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub body_id: String,
    pub lesion_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub image: ImageRgb,
    pub labels: LabelMask,
    /// Skin mask of the body the sample was generated from.
    pub skin: BinaryMask,
    pub placements: Vec<Placement>,
    pub seed: u64,
    pub provenance: Provenance,
    /// Lesion slots that found no admissible position.
    pub dropped: usize,
}
