use serde::{Deserialize, Serialize};

use super::PoissonSystem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b − A f‖₂ / ‖b‖₂`, recomputed from the final iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    fn merge(self, other: SolveReport) -> SolveReport {
        SolveReport {
            iterations: self.iterations.max(other.iterations),
            relative_residual: self.relative_residual.max(other.relative_residual),
            converged: self.converged && other.converged,
        }
    }
}

/// `10·√n + 1000`.
pub fn default_max_iter(unknowns: usize) -> usize {
    (10.0 * (unknowns as f64).sqrt()).ceil() as usize + 1000
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn true_residual(system: &PoissonSystem, b: &[f64], x: &[f64], scratch: &mut [f64], r: &mut [f64]) -> f64 {
    system.apply(x, scratch);
    for i in 0..b.len() {
        r[i] = b[i] - scratch[i];
    }
    dot(r, r).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for one right-hand side,
/// starting from zero. All reductions run in index order, so the result is
/// deterministic.
pub fn solve_channel(system: &PoissonSystem, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, SolveReport) {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = system.len();
    assert_eq!(b.len(), n);
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return (x, SolveReport { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let inv_diag: Vec<f64> = system.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;

    while iterations < max_iter {
        system.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        if dot(&r, &r).sqrt() / b_norm <= tol {
            // The recurrence residual drifts; confirm against b − A x.
            if true_residual(system, b, &x, &mut ap, &mut r) / b_norm <= tol {
                break;
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let mut scratch = vec![0.0; n];
    let mut res = vec![0.0; n];
    let final_rel = true_residual(system, b, &x, &mut scratch, &mut res) / b_norm;
    (x, SolveReport { iterations, relative_residual: final_rel, converged: final_rel <= tol })
}

/// Solves all three channels. The report carries the worst channel.
pub fn solve_cg(system: &PoissonSystem, tol: f64, max_iter: usize) -> ([Vec<f64>; 3], SolveReport) {
    let (x0, r0) = solve_channel(system, system.rhs(0), tol, max_iter);
    let (x1, r1) = solve_channel(system, system.rhs(1), tol, max_iter);
    let (x2, r2) = solve_channel(system, system.rhs(2), tol, max_iter);
    ([x0, x1, x2], r0.merge(r1).merge(r2))
}
