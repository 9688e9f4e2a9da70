//! Pipeline configuration: one strict JSON document shared by every command.
//! Missing keys take their defaults; unknown keys are rejected.

use std::path::Path;

use lesionforge::baseline::TrainHyper;
use lesionforge::evalkit::{default_alphas, MatchCriterion, RocCurve, DEFAULT_IOU};
use lesionforge::synth::fixtures::FixtureSpec;
use lesionforge::synth::{PairParams, SynthConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssetCounts {
    pub bodies: usize,
    pub lesions: usize,
}

impl Default for AssetCounts {
    fn default() -> Self {
        AssetCounts { bodies: 8, lesions: 24 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// Half-size of the classifier window.
    pub radius: usize,
    pub stride: usize,
    pub train: TrainHyper,
    /// Support pixels sampled per lesion in addition to its center.
    pub extra_per_lesion: usize,
    /// Share of background negatives drawn near lesion rims; 0 is uniform.
    pub ring_fraction: f64,
    /// Retraining rounds, each adding confidently misclassified background cells.
    pub hard_negative_rounds: usize,
    pub hard_negatives_per_image: usize,
    /// Cell probability threshold for region proposals.
    pub prob_threshold: f64,
    /// Spacing of the extra, higher thresholds; 1 or more disables them.
    pub level_step: f64,
    /// Minimum proposal size, in heatmap cells.
    pub min_area: usize,
    /// NCC window side (odd).
    pub ncc_window: usize,
    pub ncc_search: usize,
    pub keypoints_per_pair: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            radius: 10,
            stride: 4,
            train: TrainHyper { epochs: 1000, ..TrainHyper::default() },
            extra_per_lesion: 8,
            ring_fraction: 0.5,
            hard_negative_rounds: 3,
            hard_negatives_per_image: 20,
            prob_threshold: 0.4,
            level_step: 0.1,
            min_area: 2,
            ncc_window: 15,
            ncc_search: 8,
            keypoints_per_pair: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    Centroid,
    Iou,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub criterion: CriterionKind,
    pub iou: f64,
    pub thresholds: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            criterion: CriterionKind::Centroid,
            iou: DEFAULT_IOU,
            thresholds: RocCurve::default_thresholds(),
            alphas: default_alphas(),
        }
    }
}

impl EvalConfig {
    pub fn criterion(&self) -> MatchCriterion {
        match self.criterion {
            CriterionKind::Centroid => MatchCriterion::Centroid,
            CriterionKind::Iou => MatchCriterion::Iou(self.iou),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub fixtures: FixtureSpec,
    pub assets: AssetCounts,
    pub synth: SynthConfig,
    pub pair: PairParams,
    pub baseline: BaselineConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Config::from_json(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.synth.validate().map_err(|e| CliError::Config(format!("synth: {e}")))?;
        self.pair.validate().map_err(|e| CliError::Config(format!("pair: {e}")))?;
        let f = &self.fixtures;
        if f.body_width < 16 || f.body_height < 16 || f.lesion_size < 16 {
            return bad("fixtures: bodies and lesions must be at least 16 px".into());
        }
        let b = &self.baseline;
        if b.stride == 0 || b.radius == 0 {
            return bad("baseline: radius and stride must be >= 1".into());
        }
        if b.ncc_window % 2 == 0 {
            return bad(format!("baseline.ncc_window: {} is not odd", b.ncc_window));
        }
        if !(b.prob_threshold > 0.0 && b.prob_threshold < 1.0) {
            return bad("baseline.prob_threshold must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&b.ring_fraction) {
            return bad("baseline.ring_fraction must lie in [0, 1]".into());
        }
        if !(b.level_step > 0.0) {
            return bad("baseline.level_step must be > 0".into());
        }
        if !(b.train.lr > 0.0) || !(b.train.l2 >= 0.0) {
            return bad("baseline.train: lr must be > 0 and l2 >= 0".into());
        }
        let e = &self.eval;
        if e.thresholds.is_empty() || e.thresholds.iter().any(|t| !t.is_finite()) {
            return bad("eval.thresholds must be a non-empty list of numbers".into());
        }
        if e.alphas.is_empty() || e.alphas.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return bad("eval.alphas must be a non-empty list of numbers >= 0".into());
        }
        if !(e.iou > 0.0 && e.iou <= 1.0) {
            return bad("eval.iou must lie in (0, 1]".into());
        }
        Ok(())
    }

    /// Canonical JSON of the fully defaulted config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Config::canonical_json`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn unknown_keys_rejected_with_field_name() {
        let err = Config::from_json(r#"{"synth": {"lesions_per_imag": [1, 2]}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("lesions_per_imag"), "{err}");
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(Config::from_json(r#"{"synth": {"lesions_per_image": [4, 2]}}"#).is_err());
        assert!(Config::from_json(r#"{"baseline": {"ncc_window": 8}}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = a.clone();
        b.baseline.radius += 1;
        assert_eq!(a.hash(), Config::default().hash());
        assert_ne!(a.hash(), b.hash());
        let back = Config::from_json(&a.canonical_json()).unwrap();
        assert_eq!(back.hash(), a.hash());
    }
}
