//! Raster value types and the sampling, warping and derivative primitives the
//! rest of the crate is built on.
//!
//! Conventions used everywhere:
//! * coordinates are `(x, y)` with `x` the column, origin top-left;
//! * sampling outside the frame clamps to the nearest edge pixel;
//! * warping is backward: `out(p) = src(p + flow(p))`.

mod flow;
pub mod io;
mod ops;
mod raster;

pub use flow::FlowField;
pub use ops::{
    bilinear_sample, bilinear_sample_gray, gaussian_blur, gradient, gradient_magnitude,
    warp_affine, warp_image, warp_labels_nearest, warp_mask_nearest,
};
pub use raster::{AffineTransform, BinaryMask, GrayImage, ImageRgb, LabelMask, LesionClass};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("buffer length {actual} does not match dimensions (expected {expected})")]
    BufferLength { expected: usize, actual: usize },
    #[error("non-finite pixel value")]
    NonFinite,
    #[error("class id {0} outside {{0, 1, 2}}")]
    InvalidClass(u8),
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("image of size {width}x{height} is too small for this operation")]
    Degenerate { width: usize, height: usize },
    #[error("png: {0}")]
    Png(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dims(left: (usize, usize), right: (usize, usize)) -> Result<(), ImageError> {
    if left == right {
        Ok(())
    } else {
        Err(ImageError::DimensionMismatch { left, right })
    }
}
