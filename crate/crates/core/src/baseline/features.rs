use std::f64::consts::TAU;

use crate::imagecore::ImageRgb;

pub const FEATURE_LEN: usize = 15;
pub const ORIENTATION_BINS: usize = 8;

/// Fixed-length patch descriptor:
///
/// | index  | content                                              |
/// |--------|------------------------------------------------------|
/// | 0..3   | per-channel mean                                     |
/// | 3..6   | per-channel standard deviation                       |
/// | 6..14  | magnitude-weighted signed gradient orientation histogram |
/// | 14     | inner-disc minus outer-ring luminance                |
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchFeatures(pub [f64; FEATURE_LEN]);

impl PatchFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn histogram(&self) -> &[f64] {
        &self.0[6..6 + ORIENTATION_BINS]
    }

    pub fn contrast(&self) -> f64 {
        self.0[14]
    }
}

#[inline]
fn luma(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

/// Orientation bin of a gradient; bin 0 is centered on angle 0 (pointing +x).
#[inline]
pub fn orientation_bin(gx: f64, gy: f64) -> usize {
    let angle = gy.atan2(gx).rem_euclid(TAU);
    let width = TAU / ORIENTATION_BINS as f64;
    ((angle + width / 2.0) / width) as usize % ORIENTATION_BINS
}

/// Features of the square window of half-size `radius` around `center`,
/// restricted to the frame.
pub fn extract_patch_features(img: &ImageRgb, center: (usize, usize), radius: usize) -> PatchFeatures {
    let (w, h) = img.dimensions();
    let (cx, cy) = (center.0.min(w - 1), center.1.min(h - 1));
    let x0 = cx.saturating_sub(radius);
    let y0 = cy.saturating_sub(radius);
    let x1 = (cx + radius).min(w - 1);
    let y1 = (cy + radius).min(h - 1);
    let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;

    // statistics of deviations from the center pixel, so flat windows give exact zeros
    let reference = img.get(cx, cy);
    let mut f = [0.0; FEATURE_LEN];
    let mut dev_mean = [0.0; 3];
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = img.get(x, y);
            for c in 0..3 {
                dev_mean[c] += p[c] - reference[c];
            }
        }
    }
    for c in 0..3 {
        dev_mean[c] /= n;
        f[c] = reference[c] + dev_mean[c];
    }
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = img.get(x, y);
            for c in 0..3 {
                f[3 + c] += (p[c] - reference[c] - dev_mean[c]).powi(2);
            }
        }
    }
    for c in 0..3 {
        f[3 + c] = (f[3 + c] / n).sqrt();
    }

    // central differences inside the window
    let lum = |x: usize, y: usize| luma(img.get(x, y));
    let mut hist = [0.0; ORIENTATION_BINS];
    for y in y0..=y1 {
        for x in x0..=x1 {
            let gx = if x > x0 && x < x1 { 0.5 * (lum(x + 1, y) - lum(x - 1, y)) } else { 0.0 };
            let gy = if y > y0 && y < y1 { 0.5 * (lum(x, y + 1) - lum(x, y - 1)) } else { 0.0 };
            let mag = gx.hypot(gy);
            if mag > 0.0 {
                hist[orientation_bin(gx, gy)] += mag;
            }
        }
    }
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for (i, v) in hist.iter().enumerate() {
            f[6 + i] = v / total;
        }
    }

    let inner_r2 = (radius as f64 / 2.0).powi(2);
    let outer_r2 = (radius as f64).powi(2);
    let lum_ref = luma(reference);
    let (mut si, mut ni, mut so, mut no) = (0.0, 0.0, 0.0, 0.0);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d2 = (x as f64 - cx as f64).powi(2) + (y as f64 - cy as f64).powi(2);
            if d2 <= inner_r2 {
                si += lum(x, y) - lum_ref;
                ni += 1.0;
            } else if d2 <= outer_r2 {
                so += lum(x, y) - lum_ref;
                no += 1.0;
            }
        }
    }
    if ni > 0.0 && no > 0.0 {
        f[14] = si / ni - so / no;
    }
    PatchFeatures(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_patch() {
        let img = ImageRgb::filled(20, 20, [0.5; 3]);
        let f = extract_patch_features(&img, (10, 10), 5);
        assert_eq!(&f.0[0..3], &[0.5; 3]);
        assert_eq!(&f.0[3..6], &[0.0; 3]);
        assert!(f.histogram().iter().all(|&v| v == 0.0));
        assert_eq!(f.contrast(), 0.0);

        let img = ImageRgb::filled(20, 20, [0.37, 0.21, 0.9]);
        let f = extract_patch_features(&img, (10, 10), 5);
        assert_eq!(&f.0[3..6], &[0.0; 3]);
        assert_eq!(f.contrast(), 0.0);
    }

    #[test]
    fn vertical_edge_fills_horizontal_bins() {
        let img = ImageRgb::from_fn(21, 21, |x, _| if x < 10 { [0.2; 3] } else { [0.8; 3] });
        let f = extract_patch_features(&img, (10, 10), 6);
        let hist = f.histogram();
        assert!((hist[0] + hist[4] - 1.0).abs() < 1e-12, "{hist:?}");
        assert!((hist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // dark to bright along +x
        assert!(hist[0] > 0.99);
    }

    #[test]
    fn deterministic_and_translation_invariant() {
        let pattern = |x: usize, y: usize| {
            let v = ((x * 31 + y * 17) % 23) as f64 / 23.0;
            [v, 1.0 - v, 0.5 * v]
        };
        let img = ImageRgb::from_fn(40, 40, pattern);
        let a = extract_patch_features(&img, (15, 15), 5);
        assert_eq!(a, extract_patch_features(&img, (15, 15), 5));
        let shifted = ImageRgb::from_fn(40, 40, |x, y| if x >= 7 && y >= 3 { pattern(x - 7, y - 3) } else { [0.0; 3] });
        assert_eq!(a, extract_patch_features(&shifted, (22, 18), 5));
    }

    #[test]
    fn bins_cover_the_circle() {
        assert_eq!(orientation_bin(1.0, 0.0), 0);
        assert_eq!(orientation_bin(0.0, 1.0), 2);
        assert_eq!(orientation_bin(-1.0, 0.0), 4);
        assert_eq!(orientation_bin(0.0, -1.0), 6);
        assert_eq!(orientation_bin(1.0, -0.01), 0);
    }
}
