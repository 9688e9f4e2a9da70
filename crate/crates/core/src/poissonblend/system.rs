use crate::imagecore::BinaryMask;

use super::{BlendError, BlendRequest, GuidanceMode};

/// Stencil order used by every per-neighbor array: left, right, up, down.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

const NONE: u32 = u32::MAX;

/// Guidance `v_pq` for every region pixel `p` and each of its four neighbors
/// `q`, per channel. For imported gradients `v_pq = s_p - s_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceField {
    /// Region pixels in source coordinates, row-major.
    pub pixels: Vec<(usize, usize)>,
    /// `edges[i][k][c]`: guidance from pixel `i` toward neighbor `NEIGHBOR_OFFSETS[k]`.
    pub edges: Vec<[[f64; 3]; 4]>,
}

impl GuidanceField {
    /// Discrete divergence term `Σ_q v_pq` for pixel `i`.
    pub fn divergence(&self, i: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for edge in &self.edges[i] {
            for c in 0..3 {
                out[c] += edge[c];
            }
        }
        out
    }
}

/// Keeps the larger-magnitude difference; ties go to the source.
#[inline]
pub(crate) fn mix(source: f64, target: f64) -> f64 {
    if target.abs() > source.abs() {
        target
    } else {
        source
    }
}

pub fn build_guidance(request: &BlendRequest<'_>) -> Result<GuidanceField, BlendError> {
    let prepared = request.prepare()?;
    Ok(guidance_for(request, &prepared.mask))
}

fn guidance_for(request: &BlendRequest<'_>, mask: &BinaryMask) -> GuidanceField {
    let (ox, oy) = (request.offset.0 as isize, request.offset.1 as isize);
    let pixels: Vec<(usize, usize)> = mask.pixels().collect();
    let edges = pixels
        .iter()
        .map(|&(x, y)| {
            let mut e = [[0.0; 3]; 4];
            let sp = request.source.get(x, y);
            let tp = request.target.get((x as isize + ox) as usize, (y as isize + oy) as usize);
            for (k, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                let (qx, qy) = ((x as isize + dx) as usize, (y as isize + dy) as usize);
                let sq = request.source.get(qx, qy);
                for c in 0..3 {
                    let s = sp[c] - sq[c];
                    e[k][c] = match request.mode {
                        GuidanceMode::Import => s,
                        GuidanceMode::Mixed => {
                            let tq = request
                                .target
                                .channel((qx as isize + ox) as usize, (qy as isize + oy) as usize, c);
                            mix(s, tp[c] - tq)
                        }
                    };
                }
            }
            e
        })
        .collect();
    GuidanceField { pixels, edges }
}

/// The per-channel linear systems of one blend, sharing their structure.
///
/// The matrix is never stored: row `i` has `diag[i]` on the diagonal and `-1`
/// for every neighbor listed in `neighbors[i]`.
#[derive(Clone, Debug)]
pub struct PoissonSystem {
    width: usize,
    height: usize,
    pixels: Vec<(usize, usize)>,
    index: Vec<u32>,
    neighbors: Vec<[u32; 4]>,
    diag: Vec<f64>,
    rhs: [Vec<f64>; 3],
}

impl PoissonSystem {
    /// Number of unknowns per channel.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Unknown pixels in target coordinates, row-major.
    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    /// Unknown index of target pixel `(x, y)`, if it is interior.
    pub fn index_of(&self, x: usize, y: usize) -> Option<usize> {
        if x >= self.width || y >= self.height {
            return None;
        }
        match self.index[y * self.width + x] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// Interior neighbors of unknown `i`, in [`NEIGHBOR_OFFSETS`] order.
    pub fn neighbors(&self, i: usize) -> [Option<usize>; 4] {
        self.neighbors[i].map(|n| if n == NONE { None } else { Some(n as usize) })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn rhs(&self, channel: usize) -> &[f64] {
        &self.rhs[channel]
    }

    pub fn with_rhs(&self, rhs: [Vec<f64>; 3]) -> PoissonSystem {
        assert!(rhs.iter().all(|r| r.len() == self.len()));
        PoissonSystem { rhs, ..self.clone() }
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for &n in &self.neighbors[i] {
                if n != NONE {
                    acc -= x[n as usize];
                }
            }
            *o = acc;
        }
    }

    /// Dense copy of the matrix, for inspection of small systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            for &j in &self.neighbors[i] {
                if j != NONE {
                    m[i][j as usize] -= 1.0;
                }
            }
        }
        m
    }
}

pub fn assemble(request: &BlendRequest<'_>) -> Result<PoissonSystem, BlendError> {
    let prepared = request.prepare()?;
    assemble_prepared(request, &prepared.mask)
}

pub(super) fn assemble_prepared(request: &BlendRequest<'_>, mask: &BinaryMask) -> Result<PoissonSystem, BlendError> {
    let guidance = guidance_for(request, mask);
    if guidance.pixels.is_empty() {
        return Err(BlendError::EmptyRegion);
    }
    let (tw, th) = request.target.dimensions();
    let (ox, oy) = (request.offset.0 as isize, request.offset.1 as isize);
    let to_target = |(x, y): (usize, usize)| ((x as isize + ox) as usize, (y as isize + oy) as usize);

    let pixels: Vec<(usize, usize)> = guidance.pixels.iter().map(|&p| to_target(p)).collect();
    let mut index = vec![NONE; tw * th];
    for (i, &(x, y)) in pixels.iter().enumerate() {
        index[y * tw + x] = i as u32;
    }

    let n = pixels.len();
    let mut neighbors = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut rhs = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (i, &(x, y)) in pixels.iter().enumerate() {
        let mut nb = [NONE; 4];
        let div = guidance.divergence(i);
        for c in 0..3 {
            rhs[c][i] = div[c];
        }
        for (k, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let (qx, qy) = ((x as isize + dx) as usize, (y as isize + dy) as usize);
            match index[qy * tw + qx] {
                NONE => {
                    let t = request.target.get(qx, qy);
                    for c in 0..3 {
                        rhs[c][i] += t[c];
                    }
                }
                j => nb[k] = j,
            }
        }
        neighbors.push(nb);
        diag.push(NEIGHBOR_OFFSETS.len() as f64);
    }
    Ok(PoissonSystem { width: tw, height: th, pixels, index, neighbors, diag, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::ImageRgb;

    fn cross_target() -> ImageRgb {
        // Neighbors of (2, 2): left 0.1, right 0.2, up 0.3, down 0.4.
        let mut t = ImageRgb::filled(5, 5, [0.0; 3]);
        t.set(1, 2, [0.1; 3]);
        t.set(3, 2, [0.2; 3]);
        t.set(2, 1, [0.3; 3]);
        t.set(2, 3, [0.4; 3]);
        t
    }

    #[test]
    fn single_unknown_system() {
        let target = cross_target();
        let source = ImageRgb::filled(5, 5, [0.9; 3]);
        let mut region = BinaryMask::new(5, 5);
        region.set(2, 2, true);
        let sys = assemble(&BlendRequest::new(&target, &source, &region, (0, 0))).unwrap();
        assert_eq!(sys.len(), 1);
        assert_eq!(sys.to_dense(), vec![vec![4.0]]);
        for c in 0..3 {
            assert!((sys.rhs(c)[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_unknowns_in_a_row() {
        let target = ImageRgb::filled(6, 5, [0.3; 3]);
        let source = ImageRgb::filled(6, 5, [0.3; 3]);
        let mut region = BinaryMask::new(6, 5);
        region.set(2, 2, true);
        region.set(3, 2, true);
        let sys = assemble(&BlendRequest::new(&target, &source, &region, (0, 0))).unwrap();
        assert_eq!(sys.to_dense(), vec![vec![4.0, -1.0], vec![-1.0, 4.0]]);
        assert_eq!(sys.neighbors(0), [None, Some(1), None, None]);
        assert_eq!(sys.index_of(3, 2), Some(1));
        assert_eq!(sys.index_of(0, 0), None);
    }

    #[test]
    fn constant_boundary_rhs() {
        let c = 0.35;
        let target = ImageRgb::filled(9, 9, [c; 3]);
        let source = ImageRgb::filled(9, 9, [0.7; 3]);
        let region = BinaryMask::from_fn(9, 9, |x, y| (3..6).contains(&x) && (3..6).contains(&y));
        let sys = assemble(&BlendRequest::new(&target, &source, &region, (0, 0))).unwrap();
        // Corner unknowns touch 2 boundary pixels, edges 1, center 0.
        let corner = sys.index_of(3, 3).unwrap();
        let center = sys.index_of(4, 4).unwrap();
        assert!((sys.rhs(0)[corner] - 2.0 * c).abs() < 1e-15);
        assert_eq!(sys.rhs(0)[center], 0.0);
        let mut single = BinaryMask::new(9, 9);
        single.set(4, 4, true);
        let sys = assemble(&BlendRequest::new(&target, &source, &single, (0, 0))).unwrap();
        assert!((sys.rhs(1)[0] - 4.0 * c).abs() < 1e-15);
    }

    #[test]
    fn constant_source_gives_zero_guidance() {
        let target = ImageRgb::from_fn(10, 10, |x, y| [x as f64 / 10.0, y as f64 / 10.0, 0.1]);
        let source = ImageRgb::filled(10, 10, [0.6; 3]);
        let region = BinaryMask::from_fn(10, 10, |x, y| (2..8).contains(&x) && (2..8).contains(&y));
        let g = build_guidance(&BlendRequest::new(&target, &source, &region, (0, 0))).unwrap();
        assert!(g.edges.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn mixed_guidance_follows_texture_under_flat_source() {
        let target = ImageRgb::from_fn(10, 10, |x, y| [((x * 3 + y * 5) % 7) as f64 / 7.0; 3]);
        let source = ImageRgb::filled(10, 10, [0.6; 3]);
        let region = BinaryMask::from_fn(10, 10, |x, y| (2..8).contains(&x) && (2..8).contains(&y));
        let req = BlendRequest::new(&target, &source, &region, (0, 0)).with_mode(GuidanceMode::Mixed);
        let g = build_guidance(&req).unwrap();
        for (i, &(x, y)) in g.pixels.iter().enumerate() {
            for (k, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                let q = ((x as isize + dx) as usize, (y as isize + dy) as usize);
                let expect = target.channel(x, y, 0) - target.channel(q.0, q.1, 0);
                assert_eq!(g.edges[i][k][0], expect);
            }
        }
    }

    #[test]
    fn mix_picks_larger_magnitude() {
        assert_eq!(mix(0.3, -0.1), 0.3);
        assert_eq!(mix(0.0, -0.1), -0.1);
        assert_eq!(mix(-0.2, 0.2), -0.2);
    }
}
