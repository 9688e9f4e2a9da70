//! Gradient-domain compositing.
//!
//! A region of a source image is pasted into a target so that, inside the
//! region, the result follows a guidance gradient field while matching the
//! target exactly on the region's outer boundary. Per color channel this is
//! the discrete Poisson equation on the 5-point stencil
//!
//! ```text
//! 4 f_p - Σ_{q ∈ N(p) ∩ Ω} f_q = Σ_{q ∈ N(p) ∩ ∂Ω} t_q + Σ_{q ∈ N(p)} v_pq
//! ```
//!
//! solved with Jacobi-preconditioned conjugate gradients.

mod cg;
mod system;

pub use cg::{default_max_iter, solve_cg, solve_channel, SolveReport};
pub use system::{assemble, build_guidance, GuidanceField, PoissonSystem, NEIGHBOR_OFFSETS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{BinaryMask, ImageRgb};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuidanceMode {
    /// Guidance is the source gradient.
    #[default]
    #[serde(alias = "import-gradients")]
    Import,
    /// Per pixel pair, the larger-magnitude of source and target gradient.
    #[serde(alias = "mixed-gradients")]
    Mixed,
}

#[derive(Debug, Error)]
pub enum BlendError {
    #[error("region mask is {mask:?} but source is {source_dims:?}")]
    MaskSize { mask: (usize, usize), source_dims: (usize, usize) },
    #[error("blend region is empty")]
    EmptyRegion,
    #[error("region pixel ({x}, {y}) lands at ({tx}, {ty}), outside the target interior")]
    OutOfBounds { x: usize, y: usize, tx: i64, ty: i64 },
    #[error("solver did not converge: {report:?}")]
    NotConverged { report: SolveReport },
}

/// One seamless-cloning job: `region` is over `source`, and source pixel `p`
/// lands on target pixel `p + offset`.
#[derive(Clone, Copy, Debug)]
pub struct BlendRequest<'a> {
    pub target: &'a ImageRgb,
    pub source: &'a ImageRgb,
    pub region: &'a BinaryMask,
    pub offset: (i64, i64),
    pub mode: GuidanceMode,
}

/// The region actually solved for after border erosion.
#[derive(Clone, Debug)]
pub struct PreparedRegion {
    pub mask: BinaryMask,
    /// Pixels dropped because they touched the source frame.
    pub eroded: usize,
}

impl<'a> BlendRequest<'a> {
    pub fn new(target: &'a ImageRgb, source: &'a ImageRgb, region: &'a BinaryMask, offset: (i64, i64)) -> Self {
        BlendRequest { target, source, region, offset, mode: GuidanceMode::Import }
    }

    pub fn with_mode(mut self, mode: GuidanceMode) -> Self {
        self.mode = mode;
        self
    }

    /// Drops region pixels on the source frame edge, then checks that every
    /// remaining pixel has all four neighbors inside the target.
    pub fn prepare(&self) -> Result<PreparedRegion, BlendError> {
        let (sw, sh) = self.source.dimensions();
        if self.region.dimensions() != (sw, sh) {
            return Err(BlendError::MaskSize { mask: self.region.dimensions(), source_dims: (sw, sh) });
        }
        let mut eroded = 0;
        let mask = BinaryMask::from_fn(sw, sh, |x, y| {
            let set = self.region.get(x, y);
            let edge = x == 0 || y == 0 || x + 1 == sw || y + 1 == sh;
            if set && edge {
                eroded += 1;
            }
            set && !edge
        });
        if mask.is_empty() {
            return Err(BlendError::EmptyRegion);
        }
        let (tw, th) = (self.target.width() as i64, self.target.height() as i64);
        for (x, y) in mask.pixels() {
            let (tx, ty) = (x as i64 + self.offset.0, y as i64 + self.offset.1);
            if tx < 1 || ty < 1 || tx > tw - 2 || ty > th - 2 {
                return Err(BlendError::OutOfBounds { x, y, tx, ty });
            }
        }
        Ok(PreparedRegion { mask, eroded })
    }
}

/// Result of a successful clone.
#[derive(Clone, Debug)]
pub struct BlendOutcome {
    pub image: ImageRgb,
    pub report: SolveReport,
    pub eroded: usize,
}

pub fn seamless_clone(request: &BlendRequest<'_>, tol: f64) -> Result<ImageRgb, BlendError> {
    seamless_clone_with_report(request, tol).map(|o| o.image)
}

/// Like [`seamless_clone`] but also returns the solver report. Pixels outside
/// the region are copied from the target untouched; the solved values are
/// clamped to `[0, 1]` once, after the solve.
pub fn seamless_clone_with_report(request: &BlendRequest<'_>, tol: f64) -> Result<BlendOutcome, BlendError> {
    seamless_clone_limited(request, tol, None)
}

/// [`seamless_clone_with_report`] with an explicit iteration cap in place of
/// [`default_max_iter`].
pub fn seamless_clone_limited(
    request: &BlendRequest<'_>,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<BlendOutcome, BlendError> {
    let prepared = request.prepare()?;
    let system = system::assemble_prepared(request, &prepared.mask)?;
    let cap = max_iter.unwrap_or_else(|| default_max_iter(system.len()));
    let (values, report) = solve_cg(&system, tol, cap);
    if !report.converged {
        return Err(BlendError::NotConverged { report });
    }
    let mut image = request.target.clone();
    for (i, &(x, y)) in system.pixels().iter().enumerate() {
        for (c, channel) in values.iter().enumerate() {
            image.set_channel(x, y, c, channel[i].clamp(0.0, 1.0));
        }
    }
    Ok(BlendOutcome { image, report, eroded: prepared.eroded })
}

/// Blends with an unclamped result, for callers that need the raw membrane.
pub fn solve_region(request: &BlendRequest<'_>, tol: f64) -> Result<(PoissonSystem, [Vec<f64>; 3], SolveReport), BlendError> {
    let system = assemble(request)?;
    let (values, report) = solve_cg(&system, tol, default_max_iter(system.len()));
    Ok((system, values, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, seed: u64) -> ImageRgb {
        ImageRgb::from_fn(w, h, |x, y| {
            let v = ((x as u64 * 7919 + y as u64 * 104_729 + seed * 31) % 997) as f64 / 997.0;
            [0.2 + 0.6 * v, 0.5 + 0.3 * (v - 0.5), 0.9 - 0.5 * v]
        })
    }

    fn disc(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (x as f64 - cx).hypot(y as f64 - cy) <= r)
    }

    #[test]
    fn identity_blend_reproduces_target() {
        let img = textured(32, 32, 1);
        let region = disc(32, 32, 16.0, 16.0, 9.0);
        let out = seamless_clone(&BlendRequest::new(&img, &img, &region, (0, 0)), 1e-10).unwrap();
        assert!(out.max_abs_diff(&img) <= 1e-6);
    }

    #[test]
    fn constant_offset_is_absorbed_by_the_membrane() {
        let target = textured(40, 40, 3).map(|v| v * 0.7);
        let source = target.map(|v| v + 0.2);
        let region = disc(40, 40, 20.0, 20.0, 12.0);
        let out = seamless_clone(&BlendRequest::new(&target, &source, &region, (0, 0)), 1e-10).unwrap();
        assert!(out.max_abs_diff(&target) <= 1e-6);
    }

    #[test]
    fn constant_source_takes_the_target_constant() {
        let target = ImageRgb::filled(24, 24, [0.2; 3]);
        let source = ImageRgb::filled(12, 12, [0.8; 3]);
        let region = disc(12, 12, 5.5, 5.5, 4.5);
        let out = seamless_clone(&BlendRequest::new(&target, &source, &region, (6, 6)), 1e-8).unwrap();
        for (x, y) in region.pixels() {
            let v = out.get(x + 6, y + 6);
            assert!(v.iter().all(|c| (c - 0.2).abs() < 1e-6), "{v:?}");
        }
    }

    #[test]
    fn exterior_pixels_are_untouched() {
        let target = textured(30, 30, 5);
        let source = textured(14, 14, 9);
        let region = disc(14, 14, 7.0, 7.0, 5.0);
        let out = seamless_clone(&BlendRequest::new(&target, &source, &region, (8, 9)), 1e-8).unwrap();
        for y in 0..30 {
            for x in 0..30 {
                let inside = x >= 8 && y >= 9 && x - 8 < 14 && y - 9 < 14 && region.get(x - 8, y - 9);
                if !inside {
                    assert_eq!(out.get(x, y), target.get(x, y));
                }
            }
        }
    }

    #[test]
    fn border_touching_mask_is_eroded() {
        let target = textured(30, 30, 5);
        let source = textured(10, 10, 2);
        let region = BinaryMask::filled(10, 10, true);
        let req = BlendRequest::new(&target, &source, &region, (5, 5));
        let prepared = req.prepare().unwrap();
        assert_eq!(prepared.eroded, 36);
        assert_eq!(prepared.mask.count(), 64);
        assert!(seamless_clone(&req, 1e-8).is_ok());
    }

    #[test]
    fn region_outside_target_errors() {
        let target = textured(20, 20, 5);
        let source = textured(10, 10, 2);
        let region = disc(10, 10, 5.0, 5.0, 3.0);
        let req = BlendRequest::new(&target, &source, &region, (12, 0));
        assert!(matches!(req.prepare(), Err(BlendError::OutOfBounds { .. })));
        let empty = BinaryMask::new(10, 10);
        let req = BlendRequest::new(&target, &source, &empty, (0, 0));
        assert!(matches!(req.prepare(), Err(BlendError::EmptyRegion)));
        let wrong = BinaryMask::new(9, 10);
        let req = BlendRequest::new(&target, &source, &wrong, (0, 0));
        assert!(matches!(req.prepare(), Err(BlendError::MaskSize { .. })));
    }

    #[test]
    fn mixed_mode_keeps_target_texture_under_flat_source() {
        let target = textured(30, 30, 8);
        let source = ImageRgb::filled(12, 12, [0.5; 3]);
        let region = disc(12, 12, 6.0, 6.0, 4.0);
        let req = BlendRequest::new(&target, &source, &region, (9, 9)).with_mode(GuidanceMode::Mixed);
        let out = seamless_clone(&req, 1e-10).unwrap();
        // Guidance equals the target gradients and the boundary is the target,
        // so the target itself is the solution.
        assert!(out.max_abs_diff(&target) <= 1e-6);
    }
}
