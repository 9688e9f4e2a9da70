//! Procedural stand-ins for photographed assets: textured skin regions on a
//! cloth-like background, and round light-brown (benign) or dark irregular
//! mottled (malignant) lesion crops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BodyAsset, LesionAsset};
use crate::imagecore::{gaussian_blur, BinaryMask, GrayImage, ImageRgb, LesionClass};
use crate::rng;

fn smooth_noise<R: Rng>(w: usize, h: usize, sigma: f64, rng: &mut R) -> GrayImage {
    let raw = GrayImage::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0));
    let g = gaussian_blur(&raw, sigma);
    let peak = g.data().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    GrayImage::from_fn(w, h, |x, y| g.get(x, y) / peak)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixtureSpec {
    pub body_width: usize,
    pub body_height: usize,
    /// Side of the square lesion canvas.
    pub lesion_size: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec { body_width: 256, body_height: 256, lesion_size: 40 }
    }
}

/// Rounded-rectangle skin region with a wavy outline, covering most of the frame.
pub fn make_body(id: &str, width: usize, height: usize, seed: u64) -> BodyAsset {
    let mut r = rng::stream(seed, "body", 0);
    let tone = {
        let t = r.gen_range(0.0..1.0);
        // light to medium skin tones
        [0.93 - 0.25 * t, 0.76 - 0.25 * t, 0.64 - 0.22 * t]
    };
    let cloth = [r.gen_range(0.15..0.35), r.gen_range(0.2..0.4), r.gen_range(0.3..0.5)];
    let (cx, cy) = (width as f64 / 2.0 + r.gen_range(-8.0..8.0), height as f64 / 2.0 + r.gen_range(-8.0..8.0));
    let (ax, ay) = (width as f64 * r.gen_range(0.36..0.44), height as f64 * r.gen_range(0.38..0.46));
    let waves: Vec<(f64, f64, f64)> = (2..6).map(|k| (k as f64, r.gen_range(0.0..0.04), r.gen_range(0.0..6.3))).collect();
    let shade_dir = r.gen_range(0.0..std::f64::consts::TAU);

    let coarse = smooth_noise(width, height, 8.0, &mut r);
    let medium = smooth_noise(width, height, 2.5, &mut r);
    let fine = GrayImage::from_fn(width, height, |_, _| r.gen_range(-1.0..1.0));
    let weave = smooth_noise(width, height, 1.2, &mut r);

    let skin = BinaryMask::from_fn(width, height, |x, y| {
        let (dx, dy) = ((x as f64 - cx) / ax, (y as f64 - cy) / ay);
        let theta = dy.atan2(dx);
        let bound = 1.0 + waves.iter().map(|(k, a, ph)| a * (k * theta + ph).cos()).sum::<f64>();
        dx.abs().powi(4) + dy.abs().powi(4) <= bound.powi(4)
    });
    let image = ImageRgb::from_fn(width, height, |x, y| {
        let shade = 0.9
            + 0.1 * (((x as f64 / width as f64) - 0.5) * shade_dir.cos() + ((y as f64 / height as f64) - 0.5) * shade_dir.sin());
        if skin.get(x, y) {
            let t = 1.0 + 0.07 * coarse.get(x, y) + 0.05 * medium.get(x, y) + 0.02 * fine.get(x, y);
            tone.map(|c| (c * t * shade).clamp(0.0, 1.0))
        } else {
            let stripe = 0.08 * ((x as f64 * 0.7 + y as f64 * 0.3).sin());
            let t = 1.0 + 0.25 * weave.get(x, y) + stripe + 0.05 * fine.get(x, y);
            cloth.map(|c| (c * t * shade).clamp(0.0, 1.0))
        }
    });
    BodyAsset { id: id.to_string(), image, skin }
}

/// Lesion crop on a square canvas of side `size`, with at least a 5-pixel
/// skin margin around the support.
pub fn make_lesion(id: &str, size: usize, class: LesionClass, seed: u64) -> LesionAsset {
    let mut r = rng::stream(seed, "lesion", 0);
    let c = (size as f64 - 1.0) / 2.0;
    let max_radius = c - 5.0;
    let (base_radius, harmonics, amp) = match class {
        LesionClass::Benign => (r.gen_range(0.35..0.55) * max_radius, 2..4, 0.06),
        LesionClass::Malignant => (r.gen_range(0.55..0.8) * max_radius, 3..9, 0.14),
    };
    let waves: Vec<(f64, f64, f64)> = harmonics
        .map(|k| (k as f64, r.gen_range(0.3..1.0) * amp, r.gen_range(0.0..6.3)))
        .collect();
    let skin_tone = {
        let t = r.gen_range(0.0..1.0);
        [0.9 - 0.2 * t, 0.74 - 0.2 * t, 0.62 - 0.18 * t]
    };
    let mottle = smooth_noise(size, size, 1.8, &mut r);
    let blotch = smooth_noise(size, size, 3.0, &mut r);
    let grain = GrayImage::from_fn(size, size, |_, _| r.gen_range(-1.0..1.0));
    let benign_color = [r.gen_range(0.52..0.62), r.gen_range(0.36..0.44), r.gen_range(0.26..0.32)];

    let radius_at = |theta: f64| {
        let w: f64 = waves.iter().map(|(k, a, ph)| a * (k * theta + ph).cos()).sum();
        (base_radius * (1.0 + w)).min(max_radius)
    };
    let alpha = BinaryMask::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        dx.hypot(dy) <= radius_at(dy.atan2(dx))
    });
    let image = ImageRgb::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        let skin = skin_tone.map(|v| v * (1.0 + 0.03 * grain.get(x, y)));
        let rr = dx.hypot(dy) / radius_at(dy.atan2(dx));
        if rr > 1.0 {
            return skin;
        }
        let lesion = match class {
            LesionClass::Benign => benign_color.map(|v| v * (1.0 + 0.04 * mottle.get(x, y))),
            LesionClass::Malignant => {
                let b = blotch.get(x, y);
                let m = mottle.get(x, y);
                // dark brown base with near-black and reddish blotches
                if b > 0.35 {
                    [0.1 + 0.05 * m, 0.06, 0.05]
                } else if b < -0.35 {
                    [0.45 + 0.1 * m, 0.15, 0.13]
                } else {
                    [0.28 + 0.08 * m, 0.17 + 0.05 * m, 0.12]
                }
            }
        };
        // soft rim over the last ~10% of the radius
        let t = ((1.0 - rr) / 0.1).clamp(0.0, 1.0);
        [0, 1, 2].map(|i| t * lesion[i] + (1.0 - t) * skin[i])
    });
    LesionAsset { id: id.to_string(), image, alpha, label: class }
}

/// `bodies` bodies and `lesions` lesions (alternating benign / malignant).
pub fn catalog(spec: &FixtureSpec, bodies: usize, lesions: usize, seed: u64) -> (Vec<BodyAsset>, Vec<LesionAsset>) {
    let b = (0..bodies)
        .map(|i| make_body(&format!("body-{i:04}"), spec.body_width, spec.body_height, rng::derive_seed(seed, "body-asset", i as u64)))
        .collect();
    let l = (0..lesions)
        .map(|i| {
            let class = if i % 2 == 0 { LesionClass::Benign } else { LesionClass::Malignant };
            make_lesion(&format!("lesion-{i:04}"), spec.lesion_size, class, rng::derive_seed(seed, "lesion-asset", i as u64))
        })
        .collect();
    (b, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_is_mostly_skin_and_textured() {
        let b = make_body("b", 128, 128, 1);
        let frac = b.skin.count() as f64 / (128.0 * 128.0);
        assert!((0.35..0.9).contains(&frac), "{frac}");
        assert!(!b.skin.get(0, 0));
        let lum = b.image.luminance();
        let (x, y) = (64, 64);
        let vals: Vec<f64> = (0..9).map(|k| lum.get(x + k % 3, y + k / 3)).collect();
        assert!(vals.iter().any(|v| (v - vals[0]).abs() > 1e-4));
    }

    #[test]
    fn lesion_has_margin_and_class_styles() {
        let benign = make_lesion("a", 40, LesionClass::Benign, 3);
        let malignant = make_lesion("b", 40, LesionClass::Malignant, 3);
        for l in [&benign, &malignant] {
            let (x0, y0, x1, y1) = l.alpha.bounding_box().unwrap();
            assert!(x0 >= 5 && y0 >= 5 && x1 <= 34 && y1 <= 34);
        }
        let mean_lum = |l: &LesionAsset| {
            let lum = l.image.luminance();
            l.alpha.pixels().map(|(x, y)| lum.get(x, y)).sum::<f64>() / l.alpha.count() as f64
        };
        assert!(mean_lum(&malignant) < mean_lum(&benign));
        assert!(malignant.alpha.count() > benign.alpha.count());
    }

    #[test]
    fn catalog_is_deterministic() {
        let spec = FixtureSpec { body_width: 64, body_height: 64, lesion_size: 32 };
        let (b1, l1) = catalog(&spec, 2, 4, 9);
        let (b2, l2) = catalog(&spec, 2, 4, 9);
        assert_eq!(b1, b2);
        assert_eq!(l1, l2);
        assert_eq!(l1[1].label, LesionClass::Malignant);
    }
}
