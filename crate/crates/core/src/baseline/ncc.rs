use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::imagecore::{GrayImage, ImageRgb};

/// Windows whose summed squared deviation falls below this are treated as flat.
const FLAT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackMatch {
    /// Query point in image B.
    pub query: (usize, usize),
    /// Matched point in image A; `None` when the match is flagged invalid.
    pub matched: Option<(usize, usize)>,
    pub score: f64,
}

fn window(lum: &GrayImage, cx: isize, cy: isize, half: isize, out: &mut Vec<f64>) -> Option<()> {
    out.clear();
    for dy in -half..=half {
        for dx in -half..=half {
            out.push(lum.get_clamped(cx + dx, cy + dy));
        }
    }
    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    out.iter_mut().for_each(|v| *v -= mean);
    let ss: f64 = out.iter().map(|v| v * v).sum();
    if ss < FLAT_EPS {
        return None;
    }
    let norm = ss.sqrt();
    out.iter_mut().for_each(|v| *v /= norm);
    Some(())
}

/// For each query point in `img_b`, the integer position in `img_a` within
/// `±search` whose luminance window best matches by zero-normalized cross
/// correlation. Ties go to the smallest displacement norm, then row-major
/// order. A flat query window is flagged invalid; flat candidates are skipped.
pub fn ncc_track(
    img_a: &ImageRgb,
    img_b: &ImageRgb,
    points: &[(usize, usize)],
    window_size: usize,
    search: usize,
) -> Result<Vec<TrackMatch>, BaselineError> {
    if window_size % 2 == 0 {
        return Err(BaselineError::InvalidParams(format!("window {window_size} must be odd")));
    }
    let (w, h) = img_b.dimensions();
    if let Some(p) = points.iter().find(|p| p.0 >= w || p.1 >= h) {
        return Err(BaselineError::InvalidParams(format!("query point {p:?} outside image B")));
    }
    let lum_a = img_a.luminance();
    let lum_b = img_b.luminance();
    let (wa, ha) = img_a.dimensions();
    let half = (window_size / 2) as isize;
    let s = search as isize;
    let (mut qb, mut ca) = (Vec::new(), Vec::new());

    Ok(points
        .iter()
        .map(|&(px, py)| {
            let mut out = TrackMatch { query: (px, py), matched: None, score: 0.0 };
            if window(&lum_b, px as isize, py as isize, half, &mut qb).is_none() {
                return out;
            }
            let mut best: Option<(f64, isize, (usize, usize))> = None;
            for dy in -s..=s {
                for dx in -s..=s {
                    let (x, y) = (px as isize + dx, py as isize + dy);
                    if x < 0 || y < 0 || x >= wa as isize || y >= ha as isize {
                        continue;
                    }
                    if window(&lum_a, x, y, half, &mut ca).is_none() {
                        continue;
                    }
                    let score: f64 = qb.iter().zip(&ca).map(|(a, b)| a * b).sum();
                    let norm = dx * dx + dy * dy;
                    let better = match best {
                        None => true,
                        Some((bs, bn, _)) => score > bs || (score == bs && norm < bn),
                    };
                    if better {
                        best = Some((score, norm, (x as usize, y as usize)));
                    }
                }
            }
            if let Some((score, _, m)) = best {
                out.matched = Some(m);
                out.score = score;
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn textured(w: usize, h: usize, seed: u64) -> ImageRgb {
        let mut r = crate::rng::stream(seed, "tex", 0);
        let noise = GrayImage::from_fn(w, h, |_, _| r.gen_range(0.0..1.0));
        let g = crate::imagecore::gaussian_blur(&noise, 1.0);
        ImageRgb::from_fn(w, h, |x, y| [g.get(x, y); 3])
    }

    #[test]
    fn identical_images_give_zero_displacement() {
        let a = textured(48, 48, 1);
        let pts: Vec<_> = (0..5).map(|k| (10 + 6 * k, 12 + 5 * k)).collect();
        for m in ncc_track(&a, &a, &pts, 9, 4).unwrap() {
            assert_eq!(m.matched, Some(m.query));
            assert!((m.score - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_translation() {
        let a = textured(64, 64, 2);
        // B(x) = A(x + (3, 1))
        let b = ImageRgb::from_fn(64, 64, |x, y| a.get((x + 3).min(63), (y + 1).min(63)));
        let pts = [(20, 20), (30, 25), (40, 40), (15, 45)];
        for m in ncc_track(&a, &b, &pts, 11, 5).unwrap() {
            assert_eq!(m.matched, Some((m.query.0 + 3, m.query.1 + 1)));
        }
    }

    #[test]
    fn flat_window_is_invalid() {
        let a = ImageRgb::filled(20, 20, [1.0; 3]);
        let m = ncc_track(&a, &a, &[(10, 10)], 5, 2).unwrap();
        assert_eq!(m[0].matched, None);
    }

    #[test]
    fn even_window_rejected() {
        let a = ImageRgb::filled(8, 8, [0.5; 3]);
        assert!(ncc_track(&a, &a, &[(4, 4)], 4, 1).is_err());
    }

    #[test]
    fn ties_prefer_small_displacement() {
        // periodic stripes: every shift by 4 in x matches perfectly
        let a = ImageRgb::from_fn(40, 40, |x, y| [((x % 4) as f64 + 0.1 * (y % 3) as f64) / 4.0; 3]);
        let m = ncc_track(&a, &a, &[(20, 20)], 5, 8).unwrap();
        assert_eq!(m[0].matched, Some((20, 20)));
    }
}
