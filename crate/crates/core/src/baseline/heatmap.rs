use serde::{Deserialize, Serialize};

use super::features::extract_patch_features;
use super::softmax::{SoftmaxModel, NUM_CLASSES};
use super::BaselineError;
use crate::imagecore::ImageRgb;

/// Class probabilities on a strided grid.
///
/// Cell `(i, j)` is classified from the window centered on pixel
/// `offset + (i, j) * stride` (clamped to the frame) and stands for the pixel
/// block `[i * stride, (i + 1) * stride)` in each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heatmap {
    pub cols: usize,
    pub rows: usize,
    pub stride: usize,
    pub offset: (usize, usize),
    pub image_width: usize,
    pub image_height: usize,
    pub probs: Vec<[f64; NUM_CLASSES]>,
}

impl Heatmap {
    pub fn uniform(image_width: usize, image_height: usize, stride: usize, p: [f64; NUM_CLASSES]) -> Self {
        let cols = image_width.div_ceil(stride);
        let rows = image_height.div_ceil(stride);
        Heatmap {
            cols,
            rows,
            stride,
            offset: (stride / 2, stride / 2),
            image_width,
            image_height,
            probs: vec![p; cols * rows],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> [f64; NUM_CLASSES] {
        self.probs[j * self.cols + i]
    }

    pub fn set(&mut self, i: usize, j: usize, p: [f64; NUM_CLASSES]) {
        self.probs[j * self.cols + i] = p;
    }

    /// Pixel the cell's window is centered on.
    pub fn cell_center(&self, i: usize, j: usize) -> (usize, usize) {
        (
            (self.offset.0 + i * self.stride).min(self.image_width - 1),
            (self.offset.1 + j * self.stride).min(self.image_height - 1),
        )
    }

    /// Inclusive pixel block covered by the cell.
    pub fn cell_block(&self, i: usize, j: usize) -> (usize, usize, usize, usize) {
        let x0 = i * self.stride;
        let y0 = j * self.stride;
        (x0, y0, (x0 + self.stride - 1).min(self.image_width - 1), (y0 + self.stride - 1).min(self.image_height - 1))
    }

    /// Real pixel coordinates of a (possibly fractional) cell position.
    pub fn cell_to_pixel(&self, i: f64, j: f64) -> (f64, f64) {
        (self.offset.0 as f64 + i * self.stride as f64, self.offset.1 as f64 + j * self.stride as f64)
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.stride == 0 || self.image_width == 0 || self.image_height == 0 {
            return Err(BaselineError::InvalidParams("empty heatmap geometry".into()));
        }
        if self.cols != self.image_width.div_ceil(self.stride)
            || self.rows != self.image_height.div_ceil(self.stride)
            || self.probs.len() != self.cols * self.rows
        {
            return Err(BaselineError::InvalidParams("heatmap grid does not match image size and stride".into()));
        }
        for p in &self.probs {
            if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                return Err(BaselineError::InvalidParams("heatmap cell is not a probability vector".into()));
            }
        }
        Ok(())
    }
}

pub fn sliding_window_heatmap(
    img: &ImageRgb,
    model: &SoftmaxModel,
    radius: usize,
    stride: usize,
) -> Result<Heatmap, BaselineError> {
    if stride == 0 {
        return Err(BaselineError::InvalidParams("stride must be >= 1".into()));
    }
    if img.is_empty() {
        return Err(BaselineError::InvalidParams("empty image".into()));
    }
    model.validate()?;
    let (w, h) = img.dimensions();
    let mut map = Heatmap::uniform(w, h, stride, [0.0; NUM_CLASSES]);
    for j in 0..map.rows {
        for i in 0..map.cols {
            let f = extract_patch_features(img, map.cell_center(i, j), radius);
            map.set(i, j, model.predict_proba(&f));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_equal_to_image_gives_one_cell() {
        let img = ImageRgb::filled(24, 24, [0.5; 3]);
        let h = sliding_window_heatmap(&img, &SoftmaxModel::zeros(), 4, 24).unwrap();
        assert_eq!((h.cols, h.rows), (1, 1));
        assert_eq!(h.cell_center(0, 0), (12, 12));
        assert_eq!(h.cell_block(0, 0), (0, 0, 23, 23));
    }

    #[test]
    fn zero_model_is_uniform() {
        let img = ImageRgb::from_fn(30, 20, |x, y| [x as f64 / 30.0, y as f64 / 20.0, 0.5]);
        let h = sliding_window_heatmap(&img, &SoftmaxModel::zeros(), 3, 4).unwrap();
        assert_eq!((h.cols, h.rows), (8, 5));
        h.validate().unwrap();
        for p in &h.probs {
            assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        }
        assert_eq!(h.cell_center(7, 4), (29, 18));
    }

    #[test]
    fn zero_stride_rejected() {
        let img = ImageRgb::filled(4, 4, [0.5; 3]);
        assert!(sliding_window_heatmap(&img, &SoftmaxModel::zeros(), 1, 0).is_err());
    }
}
