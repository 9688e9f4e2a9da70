use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{elastic_noise_field, LesionAsset, SynthError};
use crate::imagecore::{bilinear_sample, bilinear_sample_gray, BinaryMask, GrayImage, ImageRgb};
use crate::rng;

/// Concrete augmentation applied to one lesion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentParams {
    pub rotation: f64,
    pub flip: bool,
    pub scale: f64,
    pub brightness: f64,
    pub contrast: f64,
    /// Peak displacement, in pixels, of a smooth random warp of the lesion shape.
    pub shape_jitter: f64,
    /// Largest allowed output side; `None` disables the check.
    pub max_side: Option<usize>,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            rotation: 0.0,
            flip: false,
            scale: 1.0,
            brightness: 0.0,
            contrast: 1.0,
            shape_jitter: 0.0,
            max_side: None,
        }
    }
}

impl AugmentParams {
    fn is_geometric_identity(&self) -> bool {
        self.rotation == 0.0 && !self.flip && self.scale == 1.0 && self.shape_jitter == 0.0
    }

    fn is_photometric_identity(&self) -> bool {
        self.brightness == 0.0 && self.contrast == 1.0
    }
}

/// Ranges from which [`AugmentParams`] are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentRanges {
    pub rotation: (f64, f64),
    pub flip_probability: f64,
    pub scale: (f64, f64),
    pub brightness: (f64, f64),
    pub contrast: (f64, f64),
    pub shape_jitter: (f64, f64),
}

impl Default for AugmentRanges {
    fn default() -> Self {
        AugmentRanges {
            rotation: (-std::f64::consts::PI, std::f64::consts::PI),
            flip_probability: 0.5,
            scale: (0.7, 1.4),
            brightness: (-0.1, 0.1),
            contrast: (0.8, 1.25),
            shape_jitter: (0.0, 1.5),
        }
    }
}

impl AugmentRanges {
    /// No augmentation at all.
    pub fn none() -> Self {
        AugmentRanges {
            rotation: (0.0, 0.0),
            flip_probability: 0.0,
            scale: (1.0, 1.0),
            brightness: (0.0, 0.0),
            contrast: (1.0, 1.0),
            shape_jitter: (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if ![self.rotation, self.scale, self.brightness, self.contrast, self.shape_jitter]
            .into_iter()
            .all(ordered)
        {
            return Err(SynthError::InvalidParams("augmentation range with lo > hi or non-finite bound".into()));
        }
        if self.scale.0 <= 0.0 || self.contrast.0 < 0.0 || self.shape_jitter.0 < 0.0 {
            return Err(SynthError::InvalidParams("scale must be > 0, contrast and jitter >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(SynthError::InvalidParams("flip_probability outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> AugmentParams {
        let rotation = rng::uniform(rng, self.rotation);
        let flip = rng.gen::<f64>() < self.flip_probability;
        let scale = rng::uniform(rng, self.scale);
        let brightness = rng::uniform(rng, self.brightness);
        let contrast = rng::uniform(rng, self.contrast);
        let shape_jitter = rng::uniform(rng, self.shape_jitter);
        AugmentParams { rotation, flip, scale, brightness, contrast, shape_jitter, max_side: None }
    }
}

/// Global brightness/contrast ranges for whole-image jitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhotometricRanges {
    pub brightness: (f64, f64),
    pub contrast: (f64, f64),
}

impl Default for PhotometricRanges {
    fn default() -> Self {
        PhotometricRanges { brightness: (-0.05, 0.05), contrast: (0.9, 1.1) }
    }
}

impl PhotometricRanges {
    pub fn none() -> Self {
        PhotometricRanges { brightness: (0.0, 0.0), contrast: (1.0, 1.0) }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        (rng::uniform(rng, self.brightness), rng::uniform(rng, self.contrast))
    }
}

/// `v ← clamp((v − ½)·contrast + ½ + brightness)`; the identity setting
/// returns the input unchanged.
pub fn apply_photometric(img: &ImageRgb, brightness: f64, contrast: f64) -> ImageRgb {
    if brightness == 0.0 && contrast == 1.0 {
        return img.clone();
    }
    img.map(|v| ((v - 0.5) * contrast + 0.5 + brightness).clamp(0.0, 1.0))
}

fn output_side(input: usize, needed: f64) -> usize {
    let needed = (needed - 1e-6).ceil().max(1.0) as usize;
    if needed <= input {
        input
    } else {
        // keep the difference even so the centers stay pixel-aligned
        input + (needed - input).div_ceil(2) * 2
    }
}

/// Rotates, flips, scales and shape-warps the lesion about its center, then
/// applies brightness/contrast jitter. The alpha mask goes through the same
/// resampling (bilinear, thresholded at ½) and is cleared on the canvas edge.
pub fn augment_lesion(lesion: &LesionAsset, p: &AugmentParams, seed: u64) -> Result<LesionAsset, SynthError> {
    if !(p.scale > 0.0) || !p.scale.is_finite() || !p.rotation.is_finite() || p.shape_jitter < 0.0 {
        return Err(SynthError::InvalidParams(format!("bad augmentation {p:?}")));
    }
    let mut out = if p.is_geometric_identity() {
        lesion.clone()
    } else {
        warp_lesion(lesion, p, seed)?
    };
    if !p.is_photometric_identity() {
        out.image = apply_photometric(&out.image, p.brightness, p.contrast);
    }
    if let Some(max) = p.max_side {
        let (w, h) = out.image.dimensions();
        if w > max || h > max {
            return Err(SynthError::FootprintExceeded { width: w, height: h, max });
        }
    }
    Ok(out)
}

fn warp_lesion(lesion: &LesionAsset, p: &AugmentParams, seed: u64) -> Result<LesionAsset, SynthError> {
    let (w, h) = lesion.image.dimensions();
    let (sin, cos) = p.rotation.sin_cos();
    let (hw, hh) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let margin = 2.0 * p.shape_jitter.ceil();
    let need_w = 2.0 * p.scale * (cos.abs() * hw + sin.abs() * hh) + 1.0 + margin;
    let need_h = 2.0 * p.scale * (sin.abs() * hw + cos.abs() * hh) + 1.0 + margin;
    let (ow, oh) = (output_side(w, need_w), output_side(h, need_h));
    let (ocx, ocy) = ((ow as f64 - 1.0) / 2.0, (oh as f64 - 1.0) / 2.0);

    let jitter = if p.shape_jitter > 0.0 {
        let mut r = rng::stream(seed, "shape-jitter", 0);
        let sigma = (ow.min(oh) as f64 / 6.0).max(1.0);
        Some(elastic_noise_field(ow, oh, p.shape_jitter, sigma, &mut r))
    } else {
        None
    };

    let alpha_plane = GrayImage::from_fn(w, h, |x, y| if lesion.alpha.get(x, y) { 1.0 } else { 0.0 });
    let mut image = ImageRgb::new(ow, oh);
    let mut alpha = BinaryMask::new(ow, oh);
    for y in 0..oh {
        for x in 0..ow {
            let (mut dx, mut dy) = (x as f64 - ocx, y as f64 - ocy);
            if let Some(j) = &jitter {
                let v = j[y * ow + x];
                dx += v[0];
                dy += v[1];
            }
            // inverse rotation and scale: output → source
            let mut sx = (cos * dx + sin * dy) / p.scale + hw;
            let sy = (-sin * dx + cos * dy) / p.scale + hh;
            if p.flip {
                sx = 2.0 * hw - sx;
            }
            image.set(x, y, bilinear_sample(&lesion.image, sx, sy));
            let edge = x == 0 || y == 0 || x + 1 == ow || y + 1 == oh;
            alpha.set(x, y, !edge && bilinear_sample_gray(&alpha_plane, sx, sy) >= 0.5);
        }
    }
    if alpha.is_empty() {
        return Err(SynthError::InvalidAsset { id: lesion.id.clone(), reason: "augmentation removed the support".into() });
    }
    Ok(LesionAsset { id: lesion.id.clone(), image, alpha, label: lesion.label })
}
