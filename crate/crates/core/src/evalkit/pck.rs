use serde::{Deserialize, Serialize};

use super::EvalError;

/// 0.01, 0.02, ..., 0.20.
pub fn default_alphas() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 100.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PckCurve {
    /// `(alpha, fraction of keypoints within alpha * diag)`.
    pub points: Vec<(f64, f64)>,
    pub keypoints: usize,
    pub diag: f64,
}

impl PckCurve {
    pub fn at(&self, alpha: f64) -> Option<f64> {
        self.points.iter().find(|(a, _)| *a == alpha).map(|p| p.1)
    }
}

/// Fraction of predictions within `alpha * diag` of the truth, per alpha.
/// Missing predictions (`None`) never count as correct.
pub fn pck(
    predicted: &[Option<(f64, f64)>],
    truth: &[(f64, f64)],
    alphas: &[f64],
    diag: f64,
) -> Result<PckCurve, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch { predicted: predicted.len(), truth: truth.len() });
    }
    if truth.is_empty() {
        return Err(EvalError::InvalidParams("no keypoints".into()));
    }
    if !(diag > 0.0) {
        return Err(EvalError::InvalidParams("diag must be > 0".into()));
    }
    let mut errors: Vec<f64> = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| match p {
            Some(p) if p.0.is_finite() && p.1.is_finite() => (p.0 - t.0).hypot(p.1 - t.1),
            _ => f64::INFINITY,
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    let n = truth.len() as f64;
    let points = alphas
        .iter()
        .map(|&a| {
            let thr = a * diag;
            let correct = errors.partition_point(|&e| e <= thr);
            (a, correct as f64 / n)
        })
        .collect();
    Ok(PckCurve { points, keypoints: truth.len(), diag })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let t = [(1.0, 2.0), (5.0, 5.0)];
        let p: Vec<_> = t.iter().map(|&v| Some(v)).collect();
        let c = pck(&p, &t, &[0.0, 0.05, 1.0], 10.0).unwrap();
        assert!(c.points.iter().all(|&(_, f)| f == 1.0));
    }

    #[test]
    fn two_point_threshold_example() {
        let diag = 100f64.hypot(100.0);
        let t = [(50.0, 50.0), (20.0, 20.0)];
        let p = [Some((53.0, 50.0)), Some((20.0, 30.0))];
        let c = pck(&p, &t, &[0.05, 0.1], diag).unwrap();
        assert_eq!(c.points, vec![(0.05, 0.5), (0.1, 1.0)]);
    }

    #[test]
    fn invalid_predictions_are_wrong_and_lengths_checked() {
        let c = pck(&[None, Some((0.0, 0.0))], &[(0.0, 0.0), (0.0, 0.0)], &[0.5], 1.0).unwrap();
        assert_eq!(c.points[0].1, 0.5);
        assert!(matches!(pck(&[None], &[], &[0.1], 1.0), Err(EvalError::LengthMismatch { .. })));
        assert_eq!(default_alphas().len(), 20);
    }
}
