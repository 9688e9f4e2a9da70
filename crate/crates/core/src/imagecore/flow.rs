use super::{BinaryMask, ImageError};

/// Dense per-pixel displacement under the backward convention: pixel `p` of the
/// warped image pulls from `p + flow(p)` of the source.
///
/// `valid` is false wherever `p + flow(p)` leaves `[0, w-1] × [0, h-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<[f64; 2]>,
    valid: BinaryMask,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            vectors: vec![[0.0; 2]; width * height],
            valid: BinaryMask::filled(width, height, true),
        }
    }

    /// Builds a field and derives its validity mask from the vectors.
    pub fn from_vectors(width: usize, height: usize, vectors: Vec<[f64; 2]>) -> Result<Self, ImageError> {
        if vectors.len() != width * height {
            return Err(ImageError::BufferLength { expected: width * height, actual: vectors.len() });
        }
        if vectors.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(ImageError::NonFinite);
        }
        let valid = Self::validity(width, height, &vectors);
        Ok(FlowField { width, height, vectors, valid })
    }

    /// Builds a field with an explicit validity mask, as read from disk.
    pub fn from_parts(
        width: usize,
        height: usize,
        vectors: Vec<[f64; 2]>,
        valid: BinaryMask,
    ) -> Result<Self, ImageError> {
        if vectors.len() != width * height {
            return Err(ImageError::BufferLength { expected: width * height, actual: vectors.len() });
        }
        super::check_dims((width, height), valid.dimensions())?;
        if vectors.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(ImageError::NonFinite);
        }
        Ok(FlowField { width, height, vectors, valid })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut vectors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                vectors.push(f(x, y));
            }
        }
        let valid = Self::validity(width, height, &vectors);
        FlowField { width, height, vectors, valid }
    }

    fn validity(width: usize, height: usize, vectors: &[[f64; 2]]) -> BinaryMask {
        let (wmax, hmax) = (width as f64 - 1.0, height as f64 - 1.0);
        BinaryMask::from_fn(width, height, |x, y| {
            let v = vectors[y * width + x];
            let (sx, sy) = (x as f64 + v[0], y as f64 + v[1]);
            (0.0..=wmax).contains(&sx) && (0.0..=hmax).contains(&sy)
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.vectors[y * self.width + x]
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    pub fn valid(&self) -> &BinaryMask {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid.get(x, y)
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// Target location of pixel `(x, y)` in the source image.
    pub fn target(&self, x: usize, y: usize) -> (f64, f64) {
        let v = self.get(x, y);
        (x as f64 + v[0], y as f64 + v[1])
    }

    pub fn add(&self, other: &FlowField) -> Result<FlowField, ImageError> {
        super::check_dims(self.dimensions(), other.dimensions())?;
        let vectors = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
            .collect();
        FlowField::from_vectors(self.width, self.height, vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_validity_excludes_leaving_pixels() {
        let f = FlowField::from_fn(10, 8, |_, _| [3.0, -2.0]);
        for y in 0..8 {
            for x in 0..10 {
                let expect = x + 3 <= 9 && y >= 2;
                assert_eq!(f.is_valid(x, y), expect, "({x},{y})");
            }
        }
        assert!(FlowField::from_vectors(2, 1, vec![[0.0, 0.0]]).is_err());
        assert!(FlowField::from_vectors(1, 1, vec![[f64::INFINITY, 0.0]]).is_err());
    }
}
