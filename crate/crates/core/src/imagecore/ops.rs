use super::{check_dims, AffineTransform, BinaryMask, FlowField, GrayImage, ImageError, ImageRgb, LabelMask};

#[inline]
fn bilinear_setup(width: usize, height: usize, x: f64, y: f64) -> (usize, usize, usize, usize, f64, f64) {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    (x0, y0, x1, y1, x - x0 as f64, y - y0 as f64)
}

/// Bilinear interpolation with clamp-to-edge borders.
///
/// At integer coordinates the result is the stored pixel, bit-exact.
pub fn bilinear_sample(img: &ImageRgb, x: f64, y: f64) -> [f64; 3] {
    debug_assert!(!img.is_empty());
    let (x0, y0, x1, y1, fx, fy) = bilinear_setup(img.width(), img.height(), x, y);
    let (p00, p10, p01, p11) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = (1.0 - fx) * p00[c] + fx * p10[c];
        let bottom = (1.0 - fx) * p01[c] + fx * p11[c];
        out[c] = (1.0 - fy) * top + fy * bottom;
    }
    out
}

pub fn bilinear_sample_gray(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (x0, y0, x1, y1, fx, fy) = bilinear_setup(img.width(), img.height(), x, y);
    let top = (1.0 - fx) * img.get(x0, y0) + fx * img.get(x1, y0);
    let bottom = (1.0 - fx) * img.get(x0, y1) + fx * img.get(x1, y1);
    (1.0 - fy) * top + fy * bottom
}

/// Backward warp: `out(p) = img(p + flow(p))`, bilinear, clamped.
pub fn warp_image(img: &ImageRgb, flow: &FlowField) -> Result<ImageRgb, ImageError> {
    check_dims(img.dimensions(), flow.dimensions())?;
    Ok(ImageRgb::from_fn(img.width(), img.height(), |x, y| {
        let (sx, sy) = flow.target(x, y);
        bilinear_sample(img, sx, sy)
    }))
}

#[inline]
fn nearest(width: usize, height: usize, sx: f64, sy: f64) -> (usize, usize) {
    let nx = sx.round().clamp(0.0, (width - 1) as f64) as usize;
    let ny = sy.round().clamp(0.0, (height - 1) as f64) as usize;
    (nx, ny)
}

/// Nearest-neighbor backward warp of a label mask.
pub fn warp_labels_nearest(labels: &LabelMask, flow: &FlowField) -> Result<LabelMask, ImageError> {
    check_dims(labels.dimensions(), flow.dimensions())?;
    let (w, h) = labels.dimensions();
    let mut out = LabelMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = flow.target(x, y);
            let (nx, ny) = nearest(w, h, sx, sy);
            out.set(x, y, labels.get(nx, ny));
        }
    }
    Ok(out)
}

pub fn warp_mask_nearest(mask: &BinaryMask, flow: &FlowField) -> Result<BinaryMask, ImageError> {
    check_dims(mask.dimensions(), flow.dimensions())?;
    let (w, h) = mask.dimensions();
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        let (sx, sy) = flow.target(x, y);
        let (nx, ny) = nearest(w, h, sx, sy);
        mask.get(nx, ny)
    }))
}

/// Resamples `img` onto an `out_w × out_h` grid through an output→source transform.
pub fn warp_affine(img: &ImageRgb, transform: &AffineTransform, out_w: usize, out_h: usize) -> ImageRgb {
    ImageRgb::from_fn(out_w, out_h, |x, y| {
        let (sx, sy) = transform.apply(x as f64, y as f64);
        bilinear_sample(img, sx, sy)
    })
}

/// Forward differences. The last column of `dx` and the last row of `dy` are zero.
pub fn gradient(img: &GrayImage) -> Result<(GrayImage, GrayImage), ImageError> {
    let (w, h) = img.dimensions();
    if w < 2 || h < 2 {
        return Err(ImageError::Degenerate { width: w, height: h });
    }
    let dx = GrayImage::from_fn(w, h, |x, y| if x + 1 < w { img.get(x + 1, y) - img.get(x, y) } else { 0.0 });
    let dy = GrayImage::from_fn(w, h, |x, y| if y + 1 < h { img.get(x, y + 1) - img.get(x, y) } else { 0.0 });
    Ok((dx, dy))
}

/// Central-difference gradient magnitude with clamped borders.
pub fn gradient_magnitude(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let gx = 0.5 * (img.get_clamped(xi + 1, yi) - img.get_clamped(xi - 1, yi));
        let gy = 0.5 * (img.get_clamped(xi, yi + 1) - img.get_clamped(xi, yi - 1));
        gx.hypot(gy)
    })
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur, kernel truncated at 3σ, clamped borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = img.dimensions();
    let horiz = GrayImage::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, kv)| kv * img.get_clamped(x as isize + i as isize - r, y as isize))
            .sum()
    });
    GrayImage::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, kv)| kv * horiz.get_clamped(x as isize, y as isize + i as isize - r))
            .sum()
    })
}
