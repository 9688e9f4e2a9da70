//! PNG persistence. Images are 8-bit RGB; label masks are 8-bit gray holding the
//! raw class ids 0/1/2; binary masks are 8-bit gray 0/255.

use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use super::{BinaryMask, ImageError, ImageRgb, LabelMask};

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn to_rgb8(img: &ImageRgb) -> Vec<u8> {
    img.data().iter().map(|&v| quantize(v)).collect()
}

pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<ImageRgb, ImageError> {
    ImageRgb::from_raw(width, height, bytes.iter().map(|&b| f64::from(b) / 255.0).collect())
}

pub fn write_rgb_png(img: &ImageRgb, path: &Path) -> Result<(), ImageError> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, to_rgb8(img))
            .expect("buffer sized from dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn read_rgb_png(path: &Path) -> Result<ImageRgb, ImageError> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    from_rgb8(w as usize, h as usize, img.as_raw())
}

pub fn write_label_png(labels: &LabelMask, path: &Path) -> Result<(), ImageError> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(labels.width() as u32, labels.height() as u32, labels.data().to_vec())
            .expect("buffer sized from dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn read_label_png(path: &Path) -> Result<LabelMask, ImageError> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    LabelMask::from_raw(w as usize, h as usize, img.into_raw())
}

pub fn write_mask_png(mask: &BinaryMask, path: &Path) -> Result<(), ImageError> {
    let bytes = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, bytes)
            .expect("buffer sized from dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Any nonzero gray value counts as set.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask, ImageError> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    BinaryMask::from_raw(w as usize, h as usize, img.as_raw().iter().map(|&v| v > 127).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trips_quantized_values() {
        let dir = std::env::temp_dir().join(format!("lf-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let img = ImageRgb::from_fn(5, 3, |x, y| [x as f64 / 4.0, y as f64 / 2.0, 0.5]);
        write_rgb_png(&img, &dir.join("a.png")).unwrap();
        let back = read_rgb_png(&dir.join("a.png")).unwrap();
        assert!(back.max_abs_diff(&img) <= 0.5 / 255.0 + 1e-12);

        let mut labels = LabelMask::new(4, 4);
        labels.set(1, 1, 2);
        labels.set(2, 3, 1);
        write_label_png(&labels, &dir.join("l.png")).unwrap();
        assert_eq!(read_label_png(&dir.join("l.png")).unwrap(), labels);

        let mask = BinaryMask::from_fn(6, 2, |x, _| x % 2 == 0);
        write_mask_png(&mask, &dir.join("m.png")).unwrap();
        assert_eq!(read_mask_png(&dir.join("m.png")).unwrap(), mask);
        std::fs::remove_dir_all(&dir).ok();
    }
}
