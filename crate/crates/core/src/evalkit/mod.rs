//! Region proposals from heatmaps, detection ROC and keypoint PCK.

mod components;
mod pck;
mod roc;

pub use components::{connected_components, Component};
pub use pck::{default_alphas, pck, PckCurve};
pub use roc::{
    heatmap_to_proposals, match_proposals, roc_curve, suppress_overlapping, truth_regions, MatchCriterion, MatchResult, RegionProposal,
    RocCurve, RocPoint, TruthRegion, DEFAULT_IOU,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no ground-truth lesions in the evaluation set")]
    NoTruth,
    #[error("no images to evaluate")]
    NoImages,
    #[error("{predicted} predictions for {truth} truth points")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}
