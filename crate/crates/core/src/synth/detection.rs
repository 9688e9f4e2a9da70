use rand::Rng;
use serde::{Deserialize, Serialize};

use super::placement::{greedy_select, score_placements_masked};
use super::{
    apply_photometric, augment_lesion, AugmentRanges, BodyAsset, LesionAsset, PhotometricRanges, Placement,
    Provenance, SynthError, SyntheticSample,
};
use crate::imagecore::{BinaryMask, LabelMask};
use crate::poissonblend::{seamless_clone, BlendRequest, GuidanceMode, DEFAULT_TOLERANCE};
use crate::rng;

/// Generator settings for detection samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Inclusive range of lesion slots per image.
    pub lesions_per_image: (usize, usize),
    /// Minimum distance between placement centers, pixels.
    pub min_separation: f64,
    pub placement_stride: usize,
    pub augment: AugmentRanges,
    pub body_jitter: PhotometricRanges,
    pub blend_mode: GuidanceMode,
    pub blend_tolerance: f64,
    /// Largest augmented lesion side accepted.
    pub max_lesion_side: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            lesions_per_image: (3, 6),
            min_separation: 28.0,
            placement_stride: 4,
            augment: AugmentRanges::default(),
            body_jitter: PhotometricRanges::default(),
            blend_mode: GuidanceMode::Import,
            blend_tolerance: DEFAULT_TOLERANCE,
            max_lesion_side: 96,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.lesions_per_image.0 > self.lesions_per_image.1 {
            return Err(SynthError::InvalidParams("lesions_per_image: min > max".into()));
        }
        if self.placement_stride == 0 {
            return Err(SynthError::InvalidParams("placement_stride must be >= 1".into()));
        }
        if !(self.min_separation >= 0.0) {
            return Err(SynthError::InvalidParams("min_separation must be >= 0".into()));
        }
        if !(self.blend_tolerance > 0.0) {
            return Err(SynthError::InvalidParams("blend_tolerance must be > 0".into()));
        }
        self.augment.validate()
    }
}

/// One detection sample, fully determined by `(body, lesions, config, seed)`.
///
/// The body gets a global photometric jitter; then for each lesion slot a
/// lesion is drawn, augmented, positioned on the best-matching free skin patch
/// and seamlessly cloned in. Slots with no admissible position are skipped and
/// counted in `dropped`.
pub fn synth_detection_sample(
    body: &BodyAsset,
    lesions: &[LesionAsset],
    config: &SynthConfig,
    seed: u64,
) -> Result<SyntheticSample, SynthError> {
    config.validate()?;
    let (w, h) = body.image.dimensions();
    let mut r = rng::stream(seed, "detection", 0);
    let (b, c) = config.body_jitter.sample(&mut r);
    let mut image = apply_photometric(&body.image, b, c);
    let mut labels = LabelMask::new(w, h);
    let (lo, hi) = config.lesions_per_image;
    let slots = if hi > lo { r.gen_range(lo..=hi) } else { lo };
    if slots > 0 && lesions.is_empty() {
        return Err(SynthError::NoLesions);
    }

    let mut occupied = BinaryMask::new(w, h);
    let mut placements: Vec<Placement> = Vec::new();
    let mut dropped = 0;
    for _ in 0..slots {
        let lesion = &lesions[r.gen_range(0..lesions.len())];
        let mut params = config.augment.sample(&mut r);
        params.max_side = Some(config.max_lesion_side);
        let aug_seed: u64 = r.gen();
        let aug = augment_lesion(lesion, &params, aug_seed)?;

        let available = BinaryMask::from_fn(w, h, |x, y| body.skin.get(x, y) && !occupied.get(x, y));
        let map = match score_placements_masked(&image, &available, &aug, config.placement_stride) {
            Ok(m) => m,
            Err(SynthError::NoValidCandidate { .. }) | Err(SynthError::LesionTooLarge { .. }) => {
                dropped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let existing: Vec<(usize, usize)> = placements.iter().map(|p| p.center).collect();
        let Some(&(center, score)) = greedy_select(&map, 1, config.min_separation, &existing).first() else {
            dropped += 1;
            continue;
        };
        let offset = map.offset_for(center);
        let request = BlendRequest::new(&image, &aug.image, &aug.alpha, offset).with_mode(config.blend_mode);
        let region = request.prepare()?.mask;
        image = seamless_clone(&request, config.blend_tolerance)?;

        let class = aug.label.id();
        let mut bbox = (usize::MAX, usize::MAX, 0, 0);
        for (x, y) in region.pixels() {
            let (tx, ty) = ((x as i64 + offset.0) as usize, (y as i64 + offset.1) as usize);
            labels.set(tx, ty, class);
            bbox = (bbox.0.min(tx), bbox.1.min(ty), bbox.2.max(tx), bbox.3.max(ty));
        }
        // keep later lesions off this one and off its Poisson boundary ring
        let footprint = region.dilated(2);
        for (x, y) in footprint.pixels() {
            let (tx, ty) = (x as i64 + offset.0, y as i64 + offset.1);
            if tx >= 0 && ty >= 0 && (tx as usize) < w && (ty as usize) < h {
                occupied.set(tx as usize, ty as usize, true);
            }
        }
        placements.push(Placement {
            lesion_id: lesion.id.clone(),
            center,
            scale: params.scale,
            rotation: params.rotation,
            label: aug.label,
            score,
            bbox,
        });
    }

    let provenance = Provenance {
        body_id: body.id.clone(),
        lesion_ids: placements.iter().map(|p| p.lesion_id.clone()).collect(),
    };
    Ok(SyntheticSample { image, labels, skin: body.skin.clone(), placements, seed, provenance, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::LesionClass;
    use crate::synth::fixtures::{make_body, make_lesion};

    fn assets() -> (BodyAsset, Vec<LesionAsset>) {
        let body = make_body("b0", 128, 128, 4);
        let lesions = vec![
            make_lesion("l0", 32, LesionClass::Benign, 1),
            make_lesion("l1", 32, LesionClass::Malignant, 2),
        ];
        (body, lesions)
    }

    #[test]
    fn zero_lesions_gives_jittered_body_and_empty_labels() {
        let (body, lesions) = assets();
        let cfg = SynthConfig { lesions_per_image: (0, 0), ..Default::default() };
        let s = synth_detection_sample(&body, &lesions, &cfg, 5).unwrap();
        assert_eq!(s.labels.count_nonzero(), 0);
        assert!(s.placements.is_empty());
        let cfg_none = SynthConfig { lesions_per_image: (0, 0), body_jitter: PhotometricRanges::none(), ..Default::default() };
        let s = synth_detection_sample(&body, &lesions, &cfg_none, 5).unwrap();
        assert_eq!(s.image, body.image);
    }

    #[test]
    fn single_malignant_lesion_labels_its_support() {
        let (body, lesions) = assets();
        let cfg = SynthConfig {
            lesions_per_image: (1, 1),
            augment: AugmentRanges::none(),
            ..Default::default()
        };
        let s = synth_detection_sample(&body, &lesions[1..], &cfg, 5).unwrap();
        assert_eq!(s.placements.len(), 1);
        // independent count of the lesion's own alpha (unaugmented, eroded by nothing)
        assert_eq!(s.labels.count_nonzero(), lesions[1].alpha.count());
        assert!(s.labels.data().iter().all(|&v| v == 0 || v == 2));
    }

    #[test]
    fn same_seed_same_sample() {
        let (body, lesions) = assets();
        let cfg = SynthConfig::default();
        let a = synth_detection_sample(&body, &lesions, &cfg, 77).unwrap();
        let b = synth_detection_sample(&body, &lesions, &cfg, 77).unwrap();
        assert_eq!(a, b);
        let c = synth_detection_sample(&body, &lesions, &cfg, 78).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn labels_stay_on_skin_and_match_placements() {
        let (body, lesions) = assets();
        let cfg = SynthConfig { lesions_per_image: (4, 4), min_separation: 20.0, ..Default::default() };
        for seed in 0..4 {
            let s = synth_detection_sample(&body, &lesions, &cfg, seed).unwrap();
            for (x, y) in s.labels.nonzero_mask().pixels() {
                assert!(body.skin.get(x, y));
            }
            for p in &s.placements {
                let (x0, y0, x1, y1) = p.bbox;
                let mut n = 0;
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let v = s.labels.get(x, y);
                        assert!(v == 0 || v == p.label.id());
                        n += usize::from(v != 0);
                    }
                }
                assert!(n > 0);
            }
            for (i, a) in s.placements.iter().enumerate() {
                for b in &s.placements[i + 1..] {
                    let d = (a.center.0 as f64 - b.center.0 as f64).hypot(a.center.1 as f64 - b.center.1 as f64);
                    assert!(d >= 20.0);
                }
            }
            assert_eq!(s.placements.len() + s.dropped, 4);
        }
    }

    #[test]
    fn blended_lesions_are_visible() {
        let (body, lesions) = assets();
        let cfg = SynthConfig {
            lesions_per_image: (1, 1),
            augment: AugmentRanges::none(),
            body_jitter: PhotometricRanges::none(),
            ..Default::default()
        };
        let s = synth_detection_sample(&body, &lesions[1..], &cfg, 3).unwrap();
        let lum_b = body.image.luminance();
        let lum_s = s.image.luminance();
        let m = s.labels.nonzero_mask();
        let mean = |l: &crate::imagecore::GrayImage| m.pixels().map(|(x, y)| l.get(x, y)).sum::<f64>() / m.count() as f64;
        assert!(mean(&lum_s) < mean(&lum_b) - 0.15);
    }
}
