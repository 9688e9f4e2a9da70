//! Classical detection and tracking baselines: a sliding-window softmax patch
//! classifier producing class heatmaps, and an NCC block-matching tracker.

mod features;
mod heatmap;
mod ncc;
mod softmax;

pub use features::{extract_patch_features, orientation_bin, PatchFeatures, FEATURE_LEN, ORIENTATION_BINS};
pub use heatmap::{sliding_window_heatmap, Heatmap};
pub use ncc::{ncc_track, TrackMatch};
pub use softmax::{
    argmax, loss_and_gradient, softmax, train_softmax, Params, SoftmaxModel, TrainHyper, TrainOutcome, FEATURE_VERSION,
    NUM_CLASSES, STABLE_LR_BOUND,
};

use rand::Rng;
use thiserror::Error;

use crate::evalkit::truth_regions;
use crate::imagecore::{ImageRgb, LabelMask};
use crate::rng;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training set has no samples of class {0}")]
    MissingClass(u8),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Labelled training patches from one image.
///
/// Every lesion contributes its centermost pixel plus `extra_per_lesion`
/// random pixels of its support; background contributes twice as many
/// pixels that lie at least `radius / 2` (4-neighborhood distance) from any
/// lesion. A `ring_fraction` share of those is drawn from within `2 * radius`
/// of a lesion, the rest uniformly.
pub fn sample_training_patches(
    image: &ImageRgb,
    labels: &LabelMask,
    radius: usize,
    extra_per_lesion: usize,
    ring_fraction: f64,
    seed: u64,
) -> Result<Vec<(PatchFeatures, u8)>, BaselineError> {
    if image.dimensions() != labels.dimensions() {
        return Err(BaselineError::InvalidParams("label mask size differs from image".into()));
    }
    if !(0.0..=1.0).contains(&ring_fraction) {
        return Err(BaselineError::InvalidParams("ring_fraction must lie in [0, 1]".into()));
    }
    let mut r = rng::stream(seed, "training-patches", 0);
    let mut centers: Vec<((usize, usize), u8)> = Vec::new();
    for region in truth_regions(labels) {
        let (cx, cy) = region.centroid;
        let &center = region
            .pixels
            .iter()
            .min_by(|a, b| {
                let da = (a.0 as f64 - cx).powi(2) + (a.1 as f64 - cy).powi(2);
                let db = (b.0 as f64 - cx).powi(2) + (b.1 as f64 - cy).powi(2);
                da.total_cmp(&db)
            })
            .expect("regions are non-empty");
        let id = region.class.id();
        centers.push((center, id));
        for _ in 0..extra_per_lesion {
            centers.push((region.pixels[r.gen_range(0..region.pixels.len())], id));
        }
    }

    // ring negatives sit where windows straddle a lesion rim
    let lesions = labels.nonzero_mask();
    let clear = lesions.dilated(radius / 2);
    let halo = lesions.dilated(2 * radius);
    let pixels = || (0..labels.height()).flat_map(|y| (0..labels.width()).map(move |x| (x, y)));
    let background: Vec<(usize, usize)> = pixels().filter(|&(x, y)| !clear.get(x, y)).collect();
    let ring: Vec<(usize, usize)> = pixels().filter(|&(x, y)| halo.get(x, y) && !clear.get(x, y)).collect();
    let negatives = if centers.is_empty() { 2 } else { 2 * centers.len() };
    let from_ring = if ring.is_empty() { 0 } else { (negatives as f64 * ring_fraction).round() as usize };
    for _ in 0..from_ring {
        centers.push((ring[r.gen_range(0..ring.len())], LabelMask::BACKGROUND));
    }
    if !background.is_empty() {
        for _ in from_ring..negatives {
            centers.push((background[r.gen_range(0..background.len())], LabelMask::BACKGROUND));
        }
    }
    Ok(centers.into_iter().map(|(c, y)| (extract_patch_features(image, c, radius), y)).collect())
}

/// Background cells that `model` scores as lesion with probability at least
/// `threshold`, strongest first, at most `max` of them. Cells within
/// `radius / 2` of a lesion are never returned.
pub fn mine_hard_negatives(
    image: &ImageRgb,
    labels: &LabelMask,
    model: &SoftmaxModel,
    radius: usize,
    stride: usize,
    threshold: f64,
    max: usize,
) -> Result<Vec<(PatchFeatures, u8)>, BaselineError> {
    if image.dimensions() != labels.dimensions() {
        return Err(BaselineError::InvalidParams("label mask size differs from image".into()));
    }
    let heat = sliding_window_heatmap(image, model, radius, stride)?;
    let clear = labels.nonzero_mask().dilated(radius / 2);
    let mut found: Vec<(f64, (usize, usize))> = Vec::new();
    for j in 0..heat.rows {
        for i in 0..heat.cols {
            let c = heat.cell_center(i, j);
            let p = heat.get(i, j);
            let lesion = p[1].max(p[2]);
            if lesion >= threshold && !clear.get(c.0, c.1) {
                found.push((lesion, c));
            }
        }
    }
    // stable: row-major order among equal scores
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    found.truncate(max);
    Ok(found.into_iter().map(|(_, c)| (extract_patch_features(image, c, radius), LabelMask::BACKGROUND)).collect())
}
