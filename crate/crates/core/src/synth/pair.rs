use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    apply_photometric, augment_lesion, make_deformation, AugmentParams, DeformParams, LesionAsset, PhotometricRanges,
    SynthError, SyntheticSample,
};
use crate::imagecore::{
    warp_image, warp_labels_nearest, warp_mask_nearest, BinaryMask, FlowField, ImageRgb, LabelMask,
};
use crate::poissonblend::{seamless_clone, BlendRequest, DEFAULT_TOLERANCE};
use crate::rng;

/// Per-lesion size change between the two images of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbParams {
    /// Chance that a given lesion is rescaled.
    pub probability: f64,
    pub scale: (f64, f64),
}

impl Default for PerturbParams {
    fn default() -> Self {
        PerturbParams { probability: 0.5, scale: (0.75, 1.25) }
    }
}

impl PerturbParams {
    pub fn none() -> Self {
        PerturbParams { probability: 0.0, scale: (1.0, 1.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairParams {
    pub deform: DeformParams,
    pub perturb: PerturbParams,
    pub jitter: PhotometricRanges,
}

impl Default for PairParams {
    fn default() -> Self {
        PairParams { deform: DeformParams::default(), perturb: PerturbParams::default(), jitter: PhotometricRanges::default() }
    }
}

impl PairParams {
    /// `image_b` equals `image_a` and the flow is zero.
    pub fn identity() -> Self {
        PairParams { deform: DeformParams::zero(), perturb: PerturbParams::none(), jitter: PhotometricRanges::none() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.deform.validate().map_err(SynthError::InvalidParams)?;
        let p = &self.perturb;
        if !(0.0..=1.0).contains(&p.probability) || !(p.scale.0 > 0.0 && p.scale.0 <= p.scale.1) {
            return Err(SynthError::InvalidParams("perturb: probability in [0,1] and 0 < scale lo <= hi".into()));
        }
        Ok(())
    }
}

/// Two views of one sample with exact dense correspondence.
///
/// `flow_ab` is backward: pixel `x` of `image_b` corresponds to `x + flow(x)`
/// in `image_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingPair {
    pub image_a: ImageRgb,
    pub image_b: ImageRgb,
    pub labels_a: LabelMask,
    pub labels_b: LabelMask,
    pub flow_ab: FlowField,
    /// Pixels of `image_b` altered by lesion rescaling; photometric
    /// consistency does not hold there.
    pub changed: BinaryMask,
    pub seed: u64,
    /// Placement indices whose lesion was rescaled in `image_b`.
    pub perturbed: Vec<usize>,
    /// Placement indices selected for rescaling but left alone because the
    /// rescaled lesion would leave the skin or collide with another lesion.
    pub dropped: Vec<usize>,
}

fn locate_in_b(flow: &FlowField, target: (f64, f64)) -> (f64, f64) {
    let (w, h) = flow.dimensions();
    let mut p = target;
    for _ in 0..4 {
        let (ix, iy) = (
            p.0.round().clamp(0.0, (w - 1) as f64) as usize,
            p.1.round().clamp(0.0, (h - 1) as f64) as usize,
        );
        let v = flow.get(ix, iy);
        p = (target.0 - v[0], target.1 - v[1]);
    }
    p
}

/// Builds the pair. With identity parameters `image_b == image_a` bit-exact.
pub fn synth_tracking_pair(sample: &SyntheticSample, params: &PairParams, seed: u64) -> Result<TrackingPair, SynthError> {
    params.validate()?;
    let (w, h) = sample.image.dimensions();
    let mut r = rng::stream(seed, "pair", 0);
    let flow = make_deformation(w, h, &params.deform, r.gen());
    let mut image_b = warp_image(&sample.image, &flow)?;
    let mut labels_b = warp_labels_nearest(&sample.labels, &flow)?;
    let skin_b = warp_mask_nearest(&sample.skin, &flow)?;
    let mut changed = BinaryMask::new(w, h);
    let mut perturbed = Vec::new();
    let mut dropped = Vec::new();

    for (k, placement) in sample.placements.iter().enumerate() {
        let pick: f64 = r.gen();
        let factor = rng::uniform(&mut r, params.perturb.scale);
        if pick >= params.perturb.probability {
            continue;
        }
        let class = placement.label.id();
        let (bx0, by0, bx1, by1) = placement.bbox;
        if bx1 < bx0 || by1 < by0 {
            dropped.push(k);
            continue;
        }

        // crop of the blended lesion with some surrounding skin
        let m = 4;
        let (cx0, cy0) = (bx0.saturating_sub(m), by0.saturating_sub(m));
        let (cx1, cy1) = ((bx1 + m).min(w - 1), (by1 + m).min(h - 1));
        let (cw, ch) = (cx1 - cx0 + 1, cy1 - cy0 + 1);
        let crop_img = ImageRgb::from_fn(cw, ch, |x, y| sample.image.get(cx0 + x, cy0 + y));
        let in_box = |x: usize, y: usize| (bx0..=bx1).contains(&x) && (by0..=by1).contains(&y);
        let crop_alpha = BinaryMask::from_fn(cw, ch, |x, y| {
            in_box(cx0 + x, cy0 + y) && sample.labels.get(cx0 + x, cy0 + y) == class
        });
        if crop_alpha.is_empty() {
            dropped.push(k);
            continue;
        }
        let crop = LesionAsset::new(placement.lesion_id.clone(), crop_img, crop_alpha, placement.label)?;
        let scaled = augment_lesion(&crop, &AugmentParams { scale: factor, ..Default::default() }, 0)?;

        // the lesion's old support as seen in image_b
        let old_b = BinaryMask::from_fn(w, h, |x, y| {
            if labels_b.get(x, y) != class {
                return false;
            }
            let (sx, sy) = flow.target(x, y);
            let (nx, ny) = (sx.round(), sy.round());
            nx >= 0.0 && ny >= 0.0 && in_box(nx as usize, ny as usize)
        });
        let center_a = ((cx0 + cw / 2) as f64, (cy0 + ch / 2) as f64);
        let center_b = locate_in_b(&flow, center_a);
        let anchor = scaled.anchor();
        let offset = (center_b.0.round() as i64 - anchor.0 as i64, center_b.1.round() as i64 - anchor.1 as i64);

        // admissibility: new support (plus Poisson ring) on skin, in frame, clear of other lesions
        let mut new_b = BinaryMask::new(w, h);
        let mut ok = !old_b.is_empty();
        for (x, y) in scaled.alpha.dilated(1).pixels() {
            let (tx, ty) = (x as i64 + offset.0, y as i64 + offset.1);
            if tx < 1 || ty < 1 || tx > w as i64 - 2 || ty > h as i64 - 2 {
                ok = false;
                break;
            }
            let (tx, ty) = (tx as usize, ty as usize);
            if !skin_b.get(tx, ty) || (labels_b.get(tx, ty) != 0 && !old_b.get(tx, ty)) {
                ok = false;
                break;
            }
            if scaled.alpha.get(x, y) {
                new_b.set(tx, ty, true);
            }
        }
        let erase_region = old_b.dilated(1);
        if ok {
            ok = erase_region.pixels().all(|(x, y)| x >= 1 && y >= 1 && x + 2 <= w && y + 2 <= h);
        }
        if !ok {
            dropped.push(k);
            continue;
        }

        // harmonic fill over the old support, then clone the rescaled lesion
        let flat = ImageRgb::new(w, h);
        image_b = seamless_clone(&BlendRequest::new(&image_b, &flat, &erase_region, (0, 0)), DEFAULT_TOLERANCE)?;
        image_b = seamless_clone(&BlendRequest::new(&image_b, &scaled.image, &scaled.alpha, offset), DEFAULT_TOLERANCE)?;
        for (x, y) in old_b.pixels() {
            labels_b.set(x, y, 0);
        }
        for (x, y) in new_b.pixels() {
            labels_b.set(x, y, class);
        }
        let touched = BinaryMask::from_fn(w, h, |x, y| erase_region.get(x, y) || new_b.get(x, y)).dilated(2);
        for (x, y) in touched.pixels() {
            changed.set(x, y, true);
        }
        perturbed.push(k);
    }

    let (b, c) = params.jitter.sample(&mut r);
    let image_b = apply_photometric(&image_b, b, c);
    Ok(TrackingPair {
        image_a: sample.image.clone(),
        image_b,
        labels_a: sample.labels.clone(),
        labels_b,
        flow_ab: flow,
        changed,
        seed,
        perturbed,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{bilinear_sample, LesionClass};
    use crate::synth::fixtures::{make_body, make_lesion};
    use crate::synth::{synth_detection_sample, SynthConfig};

    fn sample(seed: u64) -> SyntheticSample {
        let body = make_body("b", 128, 128, 2);
        let lesions = vec![
            make_lesion("l0", 32, LesionClass::Benign, 1),
            make_lesion("l1", 32, LesionClass::Malignant, 2),
        ];
        let cfg = SynthConfig { lesions_per_image: (3, 3), min_separation: 20.0, ..Default::default() };
        synth_detection_sample(&body, &lesions, &cfg, seed).unwrap()
    }

    #[test]
    fn identity_params_copy_the_sample() {
        let s = sample(1);
        let p = synth_tracking_pair(&s, &PairParams::identity(), 4).unwrap();
        assert_eq!(p.image_b, p.image_a);
        assert_eq!(p.labels_b, p.labels_a);
        assert!(p.flow_ab.vectors().iter().all(|v| *v == [0.0, 0.0]));
        assert!(p.changed.is_empty());
    }

    #[test]
    fn translation_pair_follows_index_arithmetic() {
        let s = sample(2);
        let params = PairParams {
            deform: DeformParams { translation_x: (4.0, 4.0), ..DeformParams::zero() },
            perturb: PerturbParams::none(),
            jitter: PhotometricRanges::none(),
        };
        let p = synth_tracking_pair(&s, &params, 1).unwrap();
        for y in 0..128 {
            for x in 0..124 {
                assert_eq!(p.image_b.get(x, y), p.image_a.get(x + 4, y));
                assert_eq!(p.labels_b.get(x, y), p.labels_a.get(x + 4, y));
            }
        }
    }

    #[test]
    fn labels_follow_backward_convention() {
        let mut s = sample(3);
        let mut labels = LabelMask::new(128, 128);
        for y in 48..=52 {
            for x in 60..=64 {
                labels.set(x, y, 1);
            }
        }
        s.labels = labels;
        s.placements.clear();
        let params = PairParams {
            deform: DeformParams { translation_x: (4.0, 4.0), ..DeformParams::zero() },
            ..PairParams::identity()
        };
        let p = synth_tracking_pair(&s, &params, 1).unwrap();
        let m = p.labels_b.nonzero_mask();
        let (sx, sy, n) = m.pixels().fold((0, 0, 0), |(a, b, n), (x, y)| (a + x, b + y, n + 1));
        assert_eq!((sx / n, sy / n), (58, 50));
    }

    #[test]
    fn photometric_consistency_without_perturbation() {
        let s = sample(4);
        let params = PairParams { perturb: PerturbParams::none(), jitter: PhotometricRanges::none(), ..Default::default() };
        let p = synth_tracking_pair(&s, &params, 9).unwrap();
        let mut errs = Vec::new();
        for (x, y) in p.flow_ab.valid().pixels() {
            let (sx, sy) = p.flow_ab.target(x, y);
            let a = bilinear_sample(&p.image_a, sx, sy);
            let b = p.image_b.get(x, y);
            errs.extend((0..3).map(|c| (a[c] - b[c]).abs()));
        }
        errs.sort_by(f64::total_cmp);
        assert!(errs[errs.len() / 2] <= 2.0 / 255.0);
    }

    #[test]
    fn perturbation_rescales_some_lesions() {
        let s = sample(5);
        let params = PairParams {
            deform: DeformParams { elastic_magnitude: 2.0, smoothness_sigma: 10.0, ..DeformParams::zero() },
            perturb: PerturbParams { probability: 1.0, scale: (1.25, 1.25) },
            jitter: PhotometricRanges::none(),
        };
        let p = synth_tracking_pair(&s, &params, 2).unwrap();
        assert_eq!(p.perturbed.len() + p.dropped.len(), s.placements.len());
        assert!(!p.perturbed.is_empty());
        assert!(p.labels_b.count_nonzero() > p.labels_a.count_nonzero());
        // outside the changed zone labels are the warped labels
        let warped = warp_labels_nearest(&p.labels_a, &p.flow_ab).unwrap();
        for (x, y) in p.flow_ab.valid().pixels() {
            if !p.changed.get(x, y) {
                assert_eq!(p.labels_b.get(x, y), warped.get(x, y));
            }
        }
    }

    #[test]
    fn pair_is_deterministic() {
        let s = sample(6);
        let a = synth_tracking_pair(&s, &PairParams::default(), 3).unwrap();
        let b = synth_tracking_pair(&s, &PairParams::default(), 3).unwrap();
        assert_eq!(a, b);
    }
}
