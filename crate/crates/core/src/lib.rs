//! Synthetic lesion-on-body data generation with dense correspondence ground
//! truth, gradient-domain blending, classical detection/tracking baselines and
//! the evaluation metrics (ROC, PCK) used to score them.

pub mod baseline;
pub mod evalkit;
pub mod imagecore;
pub mod poissonblend;
pub mod rng;
pub mod synth;

pub use imagecore::{
    AffineTransform, BinaryMask, FlowField, GrayImage, ImageError, ImageRgb, LabelMask,
};
