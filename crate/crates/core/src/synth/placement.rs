//! Blend-position search by local descriptor matching.
//!
//! The lesion is summarized by the luminance statistics of the skin ring
//! around its support; each candidate body position by the same statistics of
//! the body patch the lesion would cover. Positions whose patch looks most like
//! the lesion's own surroundings score highest.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LesionAsset, Placement, SynthError};
use crate::imagecore::{gradient_magnitude, BinaryMask, GrayImage, ImageRgb, LesionClass};
use crate::rng;

/// `(luminance mean, luminance std, mean gradient magnitude)`.
pub type Descriptor = [f64; 3];

/// Per-component normalization applied before the Euclidean distance.
pub const DESCRIPTOR_SCALE: Descriptor = [0.1, 0.05, 0.05];

fn descriptor_distance(a: &Descriptor, b: &Descriptor) -> f64 {
    a.iter()
        .zip(b)
        .zip(&DESCRIPTOR_SCALE)
        .map(|((x, y), s)| ((x - y) / s).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn stats(values: impl Iterator<Item = (f64, f64)>) -> Descriptor {
    let values: Vec<(f64, f64)> = values.collect();
    if values.is_empty() {
        return [0.0; 3];
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|v| v.0).sum::<f64>() / n;
    let var = values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / n;
    let grad = values.iter().map(|v| v.1).sum::<f64>() / n;
    [mean, var.sqrt(), grad]
}

/// Descriptor of the skin ring two to three pixels outside the lesion
/// support. The one-pixel gap keeps the gradient stencil off the lesion edge.
pub fn lesion_ring_descriptor(lesion: &LesionAsset) -> Descriptor {
    let lum = lesion.image.luminance();
    let grad = gradient_magnitude(&lum);
    let inner = lesion.alpha.dilated(1);
    let outer = lesion.alpha.dilated(3);
    stats(
        outer
            .pixels()
            .filter(|&(x, y)| !inner.get(x, y))
            .map(|(x, y)| (lum.get(x, y), grad.get(x, y))),
    )
}

struct SummedArea {
    stride: usize,
    data: Vec<f64>,
}

impl SummedArea {
    fn new(width: usize, height: usize, value: impl Fn(usize, usize) -> f64) -> Self {
        let stride = width + 1;
        let mut data = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += value(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        SummedArea { stride, data }
    }

    /// Sum over the inclusive rectangle.
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.stride;
        self.data[(y1 + 1) * s + x1 + 1] - self.data[y0 * s + x1 + 1] - self.data[(y1 + 1) * s + x0]
            + self.data[y0 * s + x0]
    }
}

/// Candidate scores on a strided grid of body positions.
#[derive(Clone, Debug)]
pub struct ScoreMap {
    pub stride: usize,
    /// `-distance`, meaningful only where `valid` is set.
    pub scores: GrayImage,
    pub valid: BinaryMask,
    pub lesion_id: String,
    pub label: LesionClass,
    /// Lesion pixel placed on the candidate center.
    pub anchor: (usize, usize),
    /// Inclusive lesion support bounding box in lesion coordinates.
    pub support_bbox: (usize, usize, usize, usize),
}

impl ScoreMap {
    pub fn center(&self, i: usize, j: usize) -> (usize, usize) {
        (i * self.stride, j * self.stride)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.count()
    }

    /// Offset that places the lesion's anchor on `center`.
    pub fn offset_for(&self, center: (usize, usize)) -> (i64, i64) {
        (center.0 as i64 - self.anchor.0 as i64, center.1 as i64 - self.anchor.1 as i64)
    }
}

pub fn score_placements(body: &super::BodyAsset, lesion: &LesionAsset, stride: usize) -> Result<ScoreMap, SynthError> {
    score_placements_masked(&body.image, &body.skin, lesion, stride)
}

/// Scores every stride-spaced center. A candidate is valid when the lesion
/// support bounding box, grown by one pixel, lies on `available` pixels and at
/// least one pixel inside the frame.
pub fn score_placements_masked(
    image: &ImageRgb,
    available: &BinaryMask,
    lesion: &LesionAsset,
    stride: usize,
) -> Result<ScoreMap, SynthError> {
    if stride == 0 {
        return Err(SynthError::InvalidParams("placement stride must be at least 1".into()));
    }
    let (w, h) = image.dimensions();
    let (lw, lh) = lesion.image.dimensions();
    if lw + 2 > w || lh + 2 > h {
        return Err(SynthError::LesionTooLarge {
            lesion_id: lesion.id.clone(),
            width: lw,
            height: lh,
            body_w: w,
            body_h: h,
        });
    }
    let (bx0, by0, bx1, by1) = lesion.alpha.bounding_box().ok_or_else(|| SynthError::InvalidAsset {
        id: lesion.id.clone(),
        reason: "empty alpha".into(),
    })?;
    let anchor = lesion.anchor();
    let ring = lesion_ring_descriptor(lesion);

    let lum = image.luminance();
    let grad = gradient_magnitude(&lum);
    // centered on the global mean to limit cancellation in the variance
    let bias = lum.data().iter().sum::<f64>() / lum.data().len() as f64;
    let sum_l = SummedArea::new(w, h, |x, y| lum.get(x, y) - bias);
    let sum_l2 = SummedArea::new(w, h, |x, y| (lum.get(x, y) - bias).powi(2));
    let sum_g = SummedArea::new(w, h, |x, y| grad.get(x, y));
    let blocked = SummedArea::new(w, h, |x, y| if available.get(x, y) { 0.0 } else { 1.0 });

    let cols = w.div_ceil(stride);
    let rows = h.div_ceil(stride);
    let mut scores = GrayImage::new(cols, rows);
    let mut valid = BinaryMask::new(cols, rows);
    for j in 0..rows {
        for i in 0..cols {
            let (cx, cy) = (i * stride, j * stride);
            // support box in body coordinates, grown by one for the Poisson ring
            let x0 = cx as i64 - anchor.0 as i64 + bx0 as i64 - 1;
            let y0 = cy as i64 - anchor.1 as i64 + by0 as i64 - 1;
            let x1 = cx as i64 - anchor.0 as i64 + bx1 as i64 + 1;
            let y1 = cy as i64 - anchor.1 as i64 + by1 as i64 + 1;
            if x0 < 1 || y0 < 1 || x1 > w as i64 - 2 || y1 > h as i64 - 2 {
                continue;
            }
            let (x0, y0, x1, y1) = (x0 as usize, y0 as usize, x1 as usize, y1 as usize);
            if blocked.sum(x0, y0, x1, y1) > 0.5 {
                continue;
            }
            // statistics over the support box itself
            let (px0, py0, px1, py1) = (x0 + 1, y0 + 1, x1 - 1, y1 - 1);
            let n = ((px1 - px0 + 1) * (py1 - py0 + 1)) as f64;
            let centered = sum_l.sum(px0, py0, px1, py1) / n;
            let mut var = sum_l2.sum(px0, py0, px1, py1) / n - centered * centered;
            // summed-area cancellation noise; far below 8-bit quantization
            if var < 1e-12 {
                var = 0.0;
            }
            let d = [centered + bias, var.sqrt(), sum_g.sum(px0, py0, px1, py1) / n];
            scores.set(i, j, -descriptor_distance(&ring, &d));
            valid.set(i, j, true);
        }
    }
    if valid.is_empty() {
        return Err(SynthError::NoValidCandidate { lesion_id: lesion.id.clone() });
    }
    Ok(ScoreMap {
        stride,
        scores,
        valid,
        lesion_id: lesion.id.clone(),
        label: lesion.label,
        anchor,
        support_bbox: (bx0, by0, bx1, by1),
    })
}

/// Greedy score-ordered pick with separation suppression against both the
/// picks so far and `existing` centers. Ties go to the row-major-first cell.
pub fn greedy_select(scores: &ScoreMap, k: usize, min_sep: f64, existing: &[(usize, usize)]) -> Vec<((usize, usize), f64)> {
    let (cols, rows) = scores.valid.dimensions();
    let mut cands: Vec<(usize, f64)> = (0..rows * cols)
        .filter(|&idx| scores.valid.get(idx % cols, idx / cols))
        .map(|idx| (idx, scores.scores.get(idx % cols, idx / cols)))
        .collect();
    // stable sort keeps row-major order among equal scores
    cands.sort_by(|a, b| b.1.total_cmp(&a.1));
    let far = |a: (usize, usize), b: (usize, usize)| {
        (a.0 as f64 - b.0 as f64).hypot(a.1 as f64 - b.1 as f64) >= min_sep
    };
    let mut chosen: Vec<((usize, usize), f64)> = Vec::new();
    for (idx, score) in cands {
        if chosen.len() >= k {
            break;
        }
        let c = scores.center(idx % cols, idx / cols);
        if existing.iter().all(|&e| far(c, e)) && chosen.iter().all(|&(e, _)| far(c, e)) {
            chosen.push((c, score));
        }
    }
    chosen
}

/// Ranges for the per-placement scale and rotation draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementRanges {
    pub scale: (f64, f64),
    pub rotation: (f64, f64),
}

impl Default for PlacementRanges {
    fn default() -> Self {
        PlacementRanges { scale: (0.7, 1.4), rotation: (-std::f64::consts::PI, std::f64::consts::PI) }
    }
}

/// Up to `k` placements; fewer when candidates run out.
pub fn select_placements(
    scores: &ScoreMap,
    k: usize,
    min_sep: f64,
    seed: u64,
    ranges: &PlacementRanges,
) -> Result<Vec<Placement>, SynthError> {
    if k == 0 {
        return Err(SynthError::InvalidParams("k must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, "placement", 0);
    let (bx0, by0, bx1, by1) = scores.support_bbox;
    Ok(greedy_select(scores, k, min_sep, &[])
        .into_iter()
        .map(|(center, score)| {
            let scale = rng::uniform(&mut rng, ranges.scale);
            let rotation = rng::uniform(&mut rng, ranges.rotation);
            let _: u64 = rng.gen();
            let ox = center.0 - scores.anchor.0;
            let oy = center.1 - scores.anchor.1;
            Placement {
                lesion_id: scores.lesion_id.clone(),
                center,
                scale,
                rotation,
                label: scores.label,
                score,
                bbox: (ox + bx0, oy + by0, ox + bx1, oy + by1),
            }
        })
        .collect())
}
