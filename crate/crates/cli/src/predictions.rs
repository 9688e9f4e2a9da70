//! Prediction and metrics files exchanged between `baseline` and `eval`.

use lesionforge::baseline::SoftmaxModel;
use lesionforge::evalkit::{PckCurve, RegionProposal, RocCurve};
use serde::{Deserialize, Serialize};

use crate::config::CriterionKind;

pub const PREDICTIONS_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageProposals {
    /// Detection sample index in the manifest.
    pub sample: usize,
    pub proposals: Vec<RegionProposal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectPredictions {
    pub task: String,
    pub schema_version: u32,
    pub manifest_config_hash: String,
    pub train_samples: Vec<usize>,
    pub model: SoftmaxModel,
    pub loss_initial: f64,
    pub loss_final: f64,
    pub images: Vec<ImageProposals>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keypoint {
    /// Query pixel in image B.
    pub query: (usize, usize),
    /// Predicted corresponding pixel in image A; null when flagged invalid.
    pub predicted: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairKeypoints {
    pub pair: usize,
    pub keypoints: Vec<Keypoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPredictions {
    pub task: String,
    pub schema_version: u32,
    pub manifest_config_hash: String,
    pub pairs: Vec<PairKeypoints>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectMetrics {
    pub task: String,
    pub criterion: CriterionKind,
    pub iou: Option<f64>,
    pub roc: RocCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackMetrics {
    pub task: String,
    pub pck: PckCurve,
    pub invalid: usize,
}
