//! Evaluation overlays. Geometry is fixed: 1-pixel box outlines and lines.

use lesionforge::evalkit::RegionProposal;
use lesionforge::imagecore::LesionClass;
use lesionforge::ImageRgb;

pub const BENIGN: [f64; 3] = [1.0, 1.0, 0.0];
pub const MALIGNANT: [f64; 3] = [1.0, 0.0, 0.0];
pub const CORRECT: [f64; 3] = [0.0, 1.0, 0.0];
pub const INCORRECT: [f64; 3] = [1.0, 0.0, 0.0];

pub fn class_color(class: LesionClass) -> [f64; 3] {
    match class {
        LesionClass::Benign => BENIGN,
        LesionClass::Malignant => MALIGNANT,
    }
}

fn put(img: &mut ImageRgb, x: i64, y: i64, c: [f64; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.set(x as usize, y as usize, c);
    }
}

pub fn draw_box(img: &mut ImageRgb, bbox: (usize, usize, usize, usize), color: [f64; 3]) {
    let (x0, y0, x1, y1) = (bbox.0 as i64, bbox.1 as i64, bbox.2 as i64, bbox.3 as i64);
    for x in x0..=x1 {
        put(img, x, y0, color);
        put(img, x, y1, color);
    }
    for y in y0..=y1 {
        put(img, x0, y, color);
        put(img, x1, y, color);
    }
}

/// Bresenham line between two pixels, endpoints included.
pub fn draw_line(img: &mut ImageRgb, from: (i64, i64), to: (i64, i64), color: [f64; 3]) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x, y, color);
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn draw_cross(img: &mut ImageRgb, at: (i64, i64), color: [f64; 3]) {
    draw_line(img, (at.0 - 2, at.1 - 2), (at.0 + 2, at.1 + 2), color);
    draw_line(img, (at.0 - 2, at.1 + 2), (at.0 + 2, at.1 - 2), color);
}

pub fn detection_overlay(img: &ImageRgb, proposals: &[RegionProposal]) -> ImageRgb {
    let mut out = img.clone();
    for p in proposals {
        draw_box(&mut out, p.bbox, class_color(p.class));
    }
    out
}

/// Image A and image B side by side.
pub fn side_by_side(a: &ImageRgb, b: &ImageRgb) -> ImageRgb {
    let h = a.height().max(b.height());
    ImageRgb::from_fn(a.width() + b.width(), h, |x, y| {
        if x < a.width() {
            if y < a.height() { a.get(x, y) } else { [0.0; 3] }
        } else if y < b.height() {
            b.get(x - a.width(), y)
        } else {
            [0.0; 3]
        }
    })
}
