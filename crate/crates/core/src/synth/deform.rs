use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imagecore::{gaussian_blur, FlowField, GrayImage};
use crate::rng;

/// Random pose change plus smooth elastic distortion between the two images
/// of a tracking pair. Each range is sampled uniformly; a degenerate range
/// `(v, v)` yields exactly `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeformParams {
    /// Radians, about the image center.
    pub rotation: (f64, f64),
    pub translation_x: (f64, f64),
    pub translation_y: (f64, f64),
    /// Relative scale change; the applied factor is `1 + d`.
    pub scale: (f64, f64),
    /// Upper bound on the elastic component's vector norm, in pixels.
    pub elastic_magnitude: f64,
    /// Gaussian sigma applied to the white-noise field.
    pub smoothness_sigma: f64,
}

impl Default for DeformParams {
    fn default() -> Self {
        DeformParams {
            rotation: (-0.05, 0.05),
            translation_x: (-6.0, 6.0),
            translation_y: (-6.0, 6.0),
            scale: (-0.05, 0.05),
            elastic_magnitude: 4.0,
            smoothness_sigma: 12.0,
        }
    }
}

impl DeformParams {
    pub fn zero() -> Self {
        DeformParams {
            rotation: (0.0, 0.0),
            translation_x: (0.0, 0.0),
            translation_y: (0.0, 0.0),
            scale: (0.0, 0.0),
            elastic_magnitude: 0.0,
            smoothness_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [
            ("rotation", self.rotation),
            ("translation_x", self.translation_x),
            ("translation_y", self.translation_y),
            ("scale", self.scale),
        ] {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
                return Err(format!("deform.{name}: expected finite lo <= hi"));
            }
        }
        if self.scale.0 <= -1.0 {
            return Err("deform.scale: factor 1 + d must stay positive".into());
        }
        if !(self.elastic_magnitude >= 0.0) {
            return Err("deform.elastic_magnitude must be >= 0".into());
        }
        if self.elastic_magnitude > 0.0 && !(self.smoothness_sigma > 0.0) {
            return Err("deform.smoothness_sigma must be > 0 when elastic_magnitude > 0".into());
        }
        Ok(())
    }
}

/// Gaussian-smoothed uniform white noise, rescaled so the largest vector has
/// norm `magnitude`. Row-major `[dx, dy]`.
pub fn elastic_noise_field<R: Rng>(width: usize, height: usize, magnitude: f64, sigma: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let mut noise_x = GrayImage::new(width, height);
    let mut noise_y = GrayImage::new(width, height);
    for y in 0..height {
        for x in 0..width {
            noise_x.set(x, y, rng.gen_range(-1.0..1.0));
            noise_y.set(x, y, rng.gen_range(-1.0..1.0));
        }
    }
    let sx = gaussian_blur(&noise_x, sigma);
    let sy = gaussian_blur(&noise_y, sigma);
    let peak = sx
        .data()
        .iter()
        .zip(sy.data())
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    let k = if peak > 0.0 { magnitude / peak } else { 0.0 };
    sx.data().iter().zip(sy.data()).map(|(a, b)| [a * k, b * k]).collect()
}

/// Ground-truth backward flow for one pair: `flow(p) = (sR − I)(p − c) + t`
/// plus the elastic component.
pub fn make_deformation(width: usize, height: usize, p: &DeformParams, seed: u64) -> FlowField {
    let mut r = rng::stream(seed, "deformation", 0);
    let theta = rng::uniform(&mut r, p.rotation);
    let tx = rng::uniform(&mut r, p.translation_x);
    let ty = rng::uniform(&mut r, p.translation_y);
    let s = 1.0 + rng::uniform(&mut r, p.scale);
    let (sin, cos) = theta.sin_cos();
    let m = [[s * cos - 1.0, -s * sin], [s * sin, s * cos - 1.0]];
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);

    let elastic = if p.elastic_magnitude > 0.0 {
        Some(elastic_noise_field(width, height, p.elastic_magnitude, p.smoothness_sigma, &mut r))
    } else {
        None
    };
    FlowField::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let mut v = [m[0][0] * dx + m[0][1] * dy + tx, m[1][0] * dx + m[1][1] * dy + ty];
        if let Some(e) = &elastic {
            let ev = e[y * width + x];
            v[0] += ev[0];
            v[1] += ev[1];
        }
        v
    })
}
