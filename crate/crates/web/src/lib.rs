//! Browser demo: Poisson cloning of a lesion onto a body, a synthetic detection
//! sample with its label overlay, and a deformed tracking pair with the exact
//! correspondence of a clicked point. Every export returns RGBA pixels.

use lesionforge::imagecore::LesionClass;
use lesionforge::poissonblend::{seamless_clone, BlendRequest, GuidanceMode, DEFAULT_TOLERANCE};
use lesionforge::synth::{
    fixtures::{catalog, make_body, make_lesion, FixtureSpec}, synth_detection_sample, synth_tracking_pair, PairParams, SynthConfig,
    SyntheticSample,
};
use lesionforge::{ImageRgb, LabelMask};
use wasm_bindgen::prelude::*;

const SIDE: usize = 256;
const LESION_SIDE: usize = 40;
const BENIGN: [f64; 3] = [1.0, 0.85, 0.0];
const MALIGNANT: [f64; 3] = [0.9, 0.05, 0.05];
const QUERY: [f64; 3] = [0.1, 0.9, 1.0];
const MATCH: [f64; 3] = [0.1, 1.0, 0.2];

#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl Frame {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major RGBA bytes, ready for `ImageData`.
    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

impl Frame {
    fn from_image(img: &ImageRgb) -> Frame {
        let (w, h) = img.dimensions();
        let mut rgba = Vec::with_capacity(w * h * 4);
        for y in 0..h {
            for x in 0..w {
                let p = img.get(x, y);
                rgba.extend(p.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
                rgba.push(255);
            }
        }
        Frame { width: w as u32, height: h as u32, rgba }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let i = (y * self.width as usize + x) * 4;
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }
}

/// Blends a generated lesion centered on body pixel `(x, y)`. `paste` skips the
/// solve and copies the lesion pixels, for comparison.
#[wasm_bindgen]
pub fn clone_lesion(seed: u64, x: u32, y: u32, malignant: bool, mixed: bool, paste: bool) -> Result<Frame, String> {
    let body = make_body("demo-body", SIDE, SIDE, seed);
    let class = if malignant { LesionClass::Malignant } else { LesionClass::Benign };
    let lesion = make_lesion("demo-lesion", LESION_SIDE, class, seed ^ 0x9e37_79b9);
    let offset = (x as i64 - (LESION_SIDE / 2) as i64, y as i64 - (LESION_SIDE / 2) as i64);
    let mode = if mixed { GuidanceMode::Mixed } else { GuidanceMode::Import };
    let request = BlendRequest::new(&body.image, &lesion.image, &lesion.alpha, offset).with_mode(mode);
    let region = request.prepare().map_err(|e| e.to_string())?;
    let out = if paste {
        let mut img = body.image.clone();
        for (sx, sy) in region.mask.pixels() {
            let (tx, ty) = ((sx as i64 + offset.0) as usize, (sy as i64 + offset.1) as usize);
            img.set(tx, ty, lesion.image.get(sx, sy));
        }
        img
    } else {
        seamless_clone(&request, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?
    };
    Ok(Frame::from_image(&out))
}

fn demo_sample(seed: u64) -> Result<SyntheticSample, String> {
    let (bodies, lesions) = catalog(&FixtureSpec::default(), 1, 8, seed);
    synth_detection_sample(&bodies[0], &lesions, &SynthConfig::default(), seed).map_err(|e| e.to_string())
}

fn tint_labels(img: &ImageRgb, labels: &LabelMask, alpha: f64) -> ImageRgb {
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let color = match LesionClass::from_id(labels.get(x, y)) {
                Some(LesionClass::Benign) => BENIGN,
                Some(LesionClass::Malignant) => MALIGNANT,
                None => continue,
            };
            let p = img.get(x, y);
            out.set(x, y, [0, 1, 2].map(|c| (1.0 - alpha) * p[c] + alpha * color[c]));
        }
    }
    out
}

/// A synthetic detection sample; `overlay` tints lesion labels yellow (benign)
/// and red (malignant).
#[wasm_bindgen]
pub fn detection_sample(seed: u64, overlay: bool) -> Result<Frame, String> {
    let s = demo_sample(seed)?;
    let img = if overlay { tint_labels(&s.image, &s.labels, 0.5) } else { s.image };
    Ok(Frame::from_image(&img))
}

fn draw_cross(img: &mut ImageRgb, cx: f64, cy: f64, color: [f64; 3]) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (cx, cy) = (cx.round() as i64, cy.round() as i64);
    for d in -5..=5i64 {
        for (x, y) in [(cx + d, cy), (cx, cy + d)] {
            if x >= 0 && y >= 0 && x < w && y < h {
                img.set(x as usize, y as usize, color);
            }
        }
    }
}

/// Where query pixel `(qx, qy)` of view B lands in view A, or `None` when the
/// flow there is invalid.
pub fn pair_match(seed: u64, strength: f64, qx: usize, qy: usize) -> Result<Option<(f64, f64)>, String> {
    let pair = demo_pair(seed, strength)?;
    Ok(pair.flow_ab.is_valid(qx, qy).then(|| {
        let v = pair.flow_ab.get(qx, qy);
        (qx as f64 + v[0], qy as f64 + v[1])
    }))
}

fn demo_pair(seed: u64, strength: f64) -> Result<lesionforge::synth::TrackingPair, String> {
    if !(0.0..=3.0).contains(&strength) {
        return Err("strength must lie in [0, 3]".into());
    }
    let s = demo_sample(seed)?;
    let mut params = PairParams::default();
    let d = &mut params.deform;
    let scale = |r: (f64, f64)| (r.0 * strength, r.1 * strength);
    d.rotation = scale(d.rotation);
    d.translation_x = scale(d.translation_x);
    d.translation_y = scale(d.translation_y);
    d.scale = scale(d.scale);
    d.elastic_magnitude *= strength;
    synth_tracking_pair(&s, &params, seed).map_err(|e| e.to_string())
}

/// Views A and B of a tracking pair side by side. The query pixel is marked in
/// B (right) and its ground-truth match in A (left).
#[wasm_bindgen]
pub fn tracking_pair(seed: u64, strength: f64, qx: u32, qy: u32) -> Result<Frame, String> {
    let pair = demo_pair(seed, strength)?;
    let (w, h) = pair.image_a.dimensions();
    let (qx, qy) = ((qx as usize).min(w - 1), (qy as usize).min(h - 1));
    let mut a = pair.image_a.clone();
    let mut b = pair.image_b.clone();
    draw_cross(&mut b, qx as f64, qy as f64, QUERY);
    if pair.flow_ab.is_valid(qx, qy) {
        let v = pair.flow_ab.get(qx, qy);
        draw_cross(&mut a, qx as f64 + v[0], qy as f64 + v[1], MATCH);
    }
    let gap = 4;
    let joined = ImageRgb::from_fn(2 * w + gap, h, |x, y| {
        if x < w {
            a.get(x, y)
        } else if x < w + gap {
            [1.0; 3]
        } else {
            b.get(x - w - gap, y)
        }
    });
    Ok(Frame::from_image(&joined))
}
