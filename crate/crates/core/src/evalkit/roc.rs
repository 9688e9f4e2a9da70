use serde::{Deserialize, Serialize};

use super::components::connected_components;
use super::EvalError;
use crate::baseline::Heatmap;
use crate::imagecore::{LabelMask, LesionClass};

pub const DEFAULT_IOU: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionProposal {
    /// Inclusive pixel box `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
    pub class: LesionClass,
    /// Mean class probability over the proposal's cells.
    pub score: f64,
    /// Pixel coordinates.
    pub centroid: (f64, f64),
}

/// One ground-truth lesion: a 4-connected region of a single label id.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthRegion {
    pub class: LesionClass,
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
    /// Member pixels in row-major order.
    pub pixels: Vec<(usize, usize)>,
}

impl TruthRegion {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels.binary_search_by_key(&(y, x), |&(px, py)| (py, px)).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchCriterion {
    /// Rounded proposal centroid lies on a truth pixel.
    Centroid,
    /// Box intersection-over-union at least the given value.
    Iou(f64),
}

impl Default for MatchCriterion {
    fn default() -> Self {
        MatchCriterion::Centroid
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Per proposal, in input order: the truth index it matched.
    pub matched: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fp_per_image: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Ordered by decreasing threshold.
    pub points: Vec<RocPoint>,
    /// Trapezoid area with the FP axis divided by its largest value over the sweep.
    pub auc: f64,
    pub images: usize,
    pub truths: usize,
}

impl RocCurve {
    /// 1.0, 0.99, ..., 0.0.
    pub fn default_thresholds() -> Vec<f64> {
        (0..=100).rev().map(|k| k as f64 / 100.0).collect()
    }
}

/// Threshold one class plane of `h`, group the surviving cells into 4-connected
/// components and emit those with at least `min_area` cells. Output is ordered
/// by score, highest first, then by first cell in row-major order.
pub fn heatmap_to_proposals(
    h: &Heatmap,
    class: LesionClass,
    prob_threshold: f64,
    min_area: usize,
) -> Result<Vec<RegionProposal>, EvalError> {
    if !(prob_threshold > 0.0 && prob_threshold < 1.0) {
        return Err(EvalError::InvalidParams("prob_threshold must lie in (0, 1)".into()));
    }
    let k = class.id() as usize;
    let comps = connected_components(h.cols, h.rows, |i, j| h.get(i, j)[k] >= prob_threshold);
    let mut out: Vec<RegionProposal> = comps
        .into_iter()
        .filter(|c| c.area() >= min_area.max(1))
        .map(|c| {
            let n = c.area() as f64;
            let score = c.cells.iter().map(|&(i, j)| h.get(i, j)[k]).sum::<f64>() / n;
            let (sx, sy) = c.cells.iter().fold((0.0, 0.0), |(a, b), &(i, j)| {
                let p = h.cell_center(i, j);
                (a + p.0 as f64, b + p.1 as f64)
            });
            let (i0, j0, i1, j1) = c.bbox;
            let lo = h.cell_block(i0, j0);
            let hi = h.cell_block(i1, j1);
            RegionProposal { bbox: (lo.0, lo.1, hi.2, hi.3), class, score, centroid: (sx / n, sy / n) }
        })
        .collect();
    // components arrive in row-major order; the stable sort keeps it for ties
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}

/// Greedy suppression in order of decreasing score: a proposal is dropped when
/// its rounded centroid falls inside the box of an already kept proposal of
/// any class, or a kept centroid falls inside its box. Input order breaks
/// score ties.
pub fn suppress_overlapping(proposals: &[RegionProposal]) -> Vec<RegionProposal> {
    fn inside(c: (f64, f64), b: (usize, usize, usize, usize)) -> bool {
        let (x, y) = (c.0.round(), c.1.round());
        x >= b.0 as f64 && x <= b.2 as f64 && y >= b.1 as f64 && y <= b.3 as f64
    }
    let mut order: Vec<usize> = (0..proposals.len()).collect();
    order.sort_by(|&a, &b| proposals[b].score.total_cmp(&proposals[a].score));
    let mut kept: Vec<RegionProposal> = Vec::new();
    for i in order {
        let p = &proposals[i];
        if !kept.iter().any(|k| inside(p.centroid, k.bbox) || inside(k.centroid, p.bbox)) {
            kept.push(p.clone());
        }
    }
    kept
}

/// Lesion regions of a label mask, ordered by first pixel in row-major order.
pub fn truth_regions(labels: &LabelMask) -> Vec<TruthRegion> {
    let (w, h) = labels.dimensions();
    let mut out = Vec::new();
    for class in [LesionClass::Benign, LesionClass::Malignant] {
        let id = class.id();
        for c in connected_components(w, h, |x, y| labels.get(x, y) == id) {
            out.push(TruthRegion { class, bbox: c.bbox, centroid: c.centroid(), pixels: c.cells });
        }
    }
    out.sort_by_key(|r| (r.pixels[0].1, r.pixels[0].0));
    out
}

fn box_iou(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> f64 {
    let area = |r: (usize, usize, usize, usize)| ((r.2 - r.0 + 1) * (r.3 - r.1 + 1)) as f64;
    let ix0 = a.0.max(b.0);
    let iy0 = a.1.max(b.1);
    let ix1 = a.2.min(b.2);
    let iy1 = a.3.min(b.3);
    if ix0 > ix1 || iy0 > iy1 {
        return 0.0;
    }
    let inter = area((ix0, iy0, ix1, iy1));
    inter / (area(a) + area(b) - inter)
}

fn hits(p: &RegionProposal, t: &TruthRegion, criterion: MatchCriterion) -> bool {
    match criterion {
        MatchCriterion::Centroid => {
            let (x, y) = (p.centroid.0.round(), p.centroid.1.round());
            x >= 0.0 && y >= 0.0 && t.contains(x as usize, y as usize)
        }
        MatchCriterion::Iou(tau) => box_iou(p.bbox, t.bbox) >= tau,
    }
}

/// Greedy one-to-one matching in order of decreasing proposal score. A
/// proposal matches the first unmatched truth region satisfying `criterion`;
/// matching is purely geometric, the proposal class is not scored.
pub fn match_proposals(proposals: &[RegionProposal], truth: &[TruthRegion], criterion: MatchCriterion) -> MatchResult {
    let mut order: Vec<usize> = (0..proposals.len()).collect();
    order.sort_by(|&a, &b| proposals[b].score.total_cmp(&proposals[a].score));
    let mut taken = vec![false; truth.len()];
    let mut matched = vec![None; proposals.len()];
    for i in order {
        if let Some(t) = (0..truth.len()).find(|&t| !taken[t] && hits(&proposals[i], &truth[t], criterion)) {
            taken[t] = true;
            matched[i] = Some(t);
        }
    }
    let tp = matched.iter().filter(|m| m.is_some()).count();
    MatchResult { tp, fp: proposals.len() - tp, fn_: truth.len() - tp, matched }
}

/// Free-response ROC: at each threshold keep proposals scoring at least the
/// threshold, match per image, and report overall TPR against mean false
/// positives per image.
pub fn roc_curve(
    images: &[(Vec<RegionProposal>, Vec<TruthRegion>)],
    thresholds: &[f64],
    criterion: MatchCriterion,
) -> Result<RocCurve, EvalError> {
    if images.is_empty() {
        return Err(EvalError::NoImages);
    }
    let truths: usize = images.iter().map(|(_, t)| t.len()).sum();
    if truths == 0 {
        return Err(EvalError::NoTruth);
    }
    let mut ts = thresholds.to_vec();
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(EvalError::InvalidParams("non-finite threshold".into()));
    }
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();

    let n = images.len() as f64;
    let points: Vec<RocPoint> = ts
        .iter()
        .map(|&thr| {
            let (mut tp, mut fp) = (0, 0);
            for (props, truth) in images {
                let kept: Vec<RegionProposal> = props.iter().filter(|p| p.score >= thr).cloned().collect();
                let m = match_proposals(&kept, truth, criterion);
                tp += m.tp;
                fp += m.fp;
            }
            RocPoint { threshold: thr, fp_per_image: fp as f64 / n, tpr: tp as f64 / truths as f64 }
        })
        .collect();

    let max_fp = points.iter().map(|p| p.fp_per_image).fold(0.0, f64::max);
    let auc = if max_fp == 0.0 {
        points.last().map_or(0.0, |p| p.tpr)
    } else {
        let mut prev = (0.0, 0.0);
        let mut area = 0.0;
        for p in &points {
            let x = p.fp_per_image / max_fp;
            area += (x - prev.0) * (p.tpr + prev.1) / 2.0;
            prev = (x, p.tpr);
        }
        area
    };
    Ok(RocCurve { points, auc, images: images.len(), truths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::Heatmap;

    fn region(class: LesionClass, x0: usize, y0: usize, x1: usize, y1: usize) -> TruthRegion {
        let mut pixels = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                pixels.push((x, y));
            }
        }
        TruthRegion { class, bbox: (x0, y0, x1, y1), centroid: ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0), pixels }
    }

    fn proposal(score: f64, cx: f64, cy: f64) -> RegionProposal {
        let (x, y) = (cx as usize, cy as usize);
        RegionProposal { bbox: (x, y, x, y), class: LesionClass::Malignant, score, centroid: (cx, cy) }
    }

    #[test]
    fn block_of_cells_gives_one_proposal() {
        let mut h = Heatmap::uniform(40, 40, 4, [1.0, 0.0, 0.0]);
        for j in 3..6 {
            for i in 4..7 {
                h.set(i, j, [0.05, 0.05, 0.9]);
            }
        }
        let p = heatmap_to_proposals(&h, LesionClass::Malignant, 0.5, 2).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].score - 0.9).abs() < 1e-12);
        assert_eq!(p[0].centroid, (5.0 * 4.0 + 2.0, 4.0 * 4.0 + 2.0));
        assert_eq!(p[0].bbox, (16, 12, 27, 23));
        assert!(heatmap_to_proposals(&h, LesionClass::Benign, 0.5, 1).unwrap().is_empty());
    }

    #[test]
    fn diagonal_blobs_stay_separate() {
        let mut h = Heatmap::uniform(16, 16, 1, [1.0, 0.0, 0.0]);
        for (i, j, p) in [(2, 2, 0.7), (3, 3, 0.8)] {
            h.set(i, j, [1.0 - p, 0.0, p]);
        }
        let p = heatmap_to_proposals(&h, LesionClass::Malignant, 0.5, 1).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].bbox, (3, 3, 3, 3));
    }

    #[test]
    fn greedy_matching_by_score() {
        let truth = vec![region(LesionClass::Malignant, 10, 10, 20, 20)];
        let props = vec![proposal(0.8, 15.0, 15.0), proposal(0.9, 12.0, 12.0)];
        let m = match_proposals(&props, &truth, MatchCriterion::Centroid);
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 0));
        assert_eq!(m.matched, vec![None, Some(0)]);
        let miss = match_proposals(&[proposal(0.5, 1.0, 1.0)], &truth, MatchCriterion::Centroid);
        assert_eq!((miss.tp, miss.fp, miss.fn_), (0, 1, 1));
    }

    #[test]
    fn hand_enumerated_sweep() {
        let truth = vec![region(LesionClass::Malignant, 0, 0, 9, 9), region(LesionClass::Malignant, 30, 30, 39, 39)];
        let props = vec![proposal(0.9, 5.0, 5.0), proposal(0.6, 20.0, 20.0), proposal(0.4, 35.0, 35.0)];
        let roc = roc_curve(&[(props, truth)], &[0.95, 0.8, 0.5, 0.3], MatchCriterion::Centroid).unwrap();
        let tpr: Vec<f64> = roc.points.iter().map(|p| p.tpr).collect();
        let fp: Vec<f64> = roc.points.iter().map(|p| p.fp_per_image).collect();
        assert_eq!(tpr, vec![0.0, 0.5, 0.5, 1.0]);
        assert_eq!(fp, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(roc.auc, 0.5);
    }

    #[test]
    fn perfect_and_silent_detectors() {
        let truth = vec![region(LesionClass::Malignant, 0, 0, 9, 9)];
        let perfect = roc_curve(&[(vec![proposal(1.0, 4.0, 4.0)], truth.clone())], &RocCurve::default_thresholds(), MatchCriterion::Centroid).unwrap();
        assert!(perfect.points.iter().all(|p| p.tpr == 1.0));
        assert_eq!(perfect.auc, 1.0);
        let silent = roc_curve(&[(vec![], truth)], &RocCurve::default_thresholds(), MatchCriterion::Centroid).unwrap();
        assert_eq!(silent.auc, 0.0);
        assert_eq!(roc_curve(&[(vec![], vec![])], &[0.5], MatchCriterion::Centroid), Err(EvalError::NoTruth));
    }

    #[test]
    fn iou_criterion_ignores_class() {
        let t = region(LesionClass::Benign, 0, 0, 9, 9);
        let mut p = proposal(0.9, 4.0, 4.0);
        p.bbox = (0, 0, 9, 4);
        assert_eq!(match_proposals(&[p.clone()], &[t.clone()], MatchCriterion::Centroid).tp, 1);
        assert_eq!(match_proposals(&[p.clone()], &[t.clone()], MatchCriterion::Iou(0.5)).tp, 1);
        assert_eq!(match_proposals(&[p], &[t], MatchCriterion::Iou(0.6)).tp, 0);
    }

    #[test]
    fn suppression_keeps_the_strongest() {
        let mut a = proposal(0.9, 10.0, 10.0);
        a.bbox = (5, 5, 15, 15);
        let mut b = proposal(0.7, 12.0, 12.0);
        b.class = LesionClass::Benign;
        let c = proposal(0.8, 30.0, 30.0);
        // a weaker box enclosing a kept centroid goes too
        let mut d = proposal(0.6, 40.0, 20.0);
        d.bbox = (25, 10, 45, 35);
        let kept = suppress_overlapping(&[b, a.clone(), c.clone(), d]);
        assert_eq!(kept, vec![a, c]);
    }

    #[test]
    fn truth_regions_from_labels() {
        let mut l = LabelMask::new(10, 10);
        l.set(1, 1, 2);
        l.set(2, 1, 2);
        l.set(6, 6, 1);
        l.set(7, 7, 1);
        let r = truth_regions(&l);
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].class, LesionClass::Malignant);
        assert_eq!(r[0].pixels.len(), 2);
        assert!(r[0].contains(2, 1) && !r[0].contains(3, 1));
    }
}
