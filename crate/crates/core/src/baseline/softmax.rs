use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{PatchFeatures, FEATURE_LEN};
use super::BaselineError;
use crate::imagecore::LabelMask;
use crate::rng;

pub const NUM_CLASSES: usize = LabelMask::NUM_CLASSES;
pub const FEATURE_VERSION: &str = "patch15-v1";

/// Gradient descent on the standardized features is monotone for any learning
/// rate below this. The cross-entropy Hessian is bounded by half the mean
/// squared norm of the augmented input, which is `FEATURE_LEN + 1` after
/// standardization, so `lr < 2 / (0.5 * 16)`.
pub const STABLE_LR_BOUND: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainHyper {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper { lr: 0.2, epochs: 400, l2: 1e-4, seed: 0 }
    }
}

/// Multinomial logistic regression over standardized patch features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftmaxModel {
    pub version: String,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

impl SoftmaxModel {
    /// All-zero weights and identity standardization.
    pub fn zeros() -> Self {
        SoftmaxModel {
            version: FEATURE_VERSION.to_string(),
            weights: vec![vec![0.0; FEATURE_LEN]; NUM_CLASSES],
            bias: vec![0.0; NUM_CLASSES],
            feature_mean: vec![0.0; FEATURE_LEN],
            feature_scale: vec![1.0; FEATURE_LEN],
        }
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        let shape_ok = self.weights.len() == NUM_CLASSES
            && self.weights.iter().all(|r| r.len() == FEATURE_LEN)
            && self.bias.len() == NUM_CLASSES
            && self.feature_mean.len() == FEATURE_LEN
            && self.feature_scale.len() == FEATURE_LEN;
        if !shape_ok {
            return Err(BaselineError::InvalidModel("parameter shapes".into()));
        }
        if self.version != FEATURE_VERSION {
            return Err(BaselineError::InvalidModel(format!("feature version {:?}", self.version)));
        }
        let all = self.weights.iter().flatten().chain(&self.bias).chain(&self.feature_mean).chain(&self.feature_scale);
        if all.clone().any(|v| !v.is_finite()) || self.feature_scale.iter().any(|&s| s <= 0.0) {
            return Err(BaselineError::InvalidModel("non-finite or non-positive parameters".into()));
        }
        Ok(())
    }

    fn standardize(&self, f: &PatchFeatures) -> [f64; FEATURE_LEN] {
        std::array::from_fn(|j| (f.0[j] - self.feature_mean[j]) / self.feature_scale[j])
    }

    fn params(&self) -> Params {
        let mut p = Params::default();
        for k in 0..NUM_CLASSES {
            p.w[k].copy_from_slice(&self.weights[k]);
            p.b[k] = self.bias[k];
        }
        p
    }

    pub fn predict_proba(&self, f: &PatchFeatures) -> [f64; NUM_CLASSES] {
        softmax(self.params().logits(&self.standardize(f)))
    }

    pub fn predict(&self, f: &PatchFeatures) -> u8 {
        argmax(&self.predict_proba(f)) as u8
    }
}

/// Raw parameters of the linear layer.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Params {
    pub w: [[f64; FEATURE_LEN]; NUM_CLASSES],
    pub b: [f64; NUM_CLASSES],
}

impl Params {
    fn logits(&self, x: &[f64; FEATURE_LEN]) -> [f64; NUM_CLASSES] {
        std::array::from_fn(|k| self.b[k] + self.w[k].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }

    pub fn len() -> usize {
        NUM_CLASSES * (FEATURE_LEN + 1)
    }

    pub fn get(&self, i: usize) -> f64 {
        let (k, j) = (i / (FEATURE_LEN + 1), i % (FEATURE_LEN + 1));
        if j < FEATURE_LEN {
            self.w[k][j]
        } else {
            self.b[k]
        }
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let (k, j) = (i / (FEATURE_LEN + 1), i % (FEATURE_LEN + 1));
        if j < FEATURE_LEN {
            self.w[k][j] = v
        } else {
            self.b[k] = v
        }
    }
}

pub fn softmax(z: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Mean cross-entropy plus `l2/2 * |W|^2` (bias not penalized), and its gradient.
pub fn loss_and_gradient(p: &Params, data: &[([f64; FEATURE_LEN], u8)], l2: f64) -> (f64, Params) {
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut g = Params::default();
    for (x, y) in data {
        let prob = softmax(p.logits(x));
        loss -= prob[*y as usize].max(f64::MIN_POSITIVE).ln();
        for k in 0..NUM_CLASSES {
            let d = prob[k] - f64::from(u8::from(k == *y as usize));
            for j in 0..FEATURE_LEN {
                g.w[k][j] += d * x[j];
            }
            g.b[k] += d;
        }
    }
    loss /= n;
    for k in 0..NUM_CLASSES {
        g.b[k] /= n;
        for j in 0..FEATURE_LEN {
            g.w[k][j] = g.w[k][j] / n + l2 * p.w[k][j];
            loss += 0.5 * l2 * p.w[k][j] * p.w[k][j];
        }
    }
    (loss, g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: SoftmaxModel,
    /// Objective before training followed by the objective after each epoch.
    pub loss_trace: Vec<f64>,
}

/// Full-batch gradient descent from a small seeded random initialization.
pub fn train_softmax(samples: &[(PatchFeatures, u8)], hyper: &TrainHyper) -> Result<TrainOutcome, BaselineError> {
    if !(hyper.lr > 0.0 && hyper.lr.is_finite()) || !(hyper.l2 >= 0.0) {
        return Err(BaselineError::InvalidParams("lr must be > 0 and l2 >= 0".into()));
    }
    let mut counts = [0usize; NUM_CLASSES];
    for (_, y) in samples {
        if *y as usize >= NUM_CLASSES {
            return Err(BaselineError::InvalidParams(format!("class id {y}")));
        }
        counts[*y as usize] += 1;
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(BaselineError::MissingClass(k as u8));
    }

    let n = samples.len() as f64;
    let mut mean = [0.0; FEATURE_LEN];
    for (f, _) in samples {
        for j in 0..FEATURE_LEN {
            mean[j] += f.0[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = [0.0; FEATURE_LEN];
    for (f, _) in samples {
        for j in 0..FEATURE_LEN {
            scale[j] += (f.0[j] - mean[j]).powi(2);
        }
    }
    for s in scale.iter_mut() {
        let sd = (*s / n).sqrt();
        *s = if sd > 1e-12 { sd } else { 1.0 };
    }
    let data: Vec<([f64; FEATURE_LEN], u8)> = samples
        .iter()
        .map(|(f, y)| (std::array::from_fn(|j| (f.0[j] - mean[j]) / scale[j]), *y))
        .collect();

    let mut r = rng::stream(hyper.seed, "softmax-init", 0);
    let mut p = Params::default();
    for i in 0..Params::len() {
        let i_is_bias = i % (FEATURE_LEN + 1) == FEATURE_LEN;
        p.set(i, if i_is_bias { 0.0 } else { r.gen_range(-0.01..0.01) });
    }

    let mut trace = Vec::with_capacity(hyper.epochs + 1);
    let (mut loss, mut g) = loss_and_gradient(&p, &data, hyper.l2);
    trace.push(loss);
    for _ in 0..hyper.epochs {
        for i in 0..Params::len() {
            p.set(i, p.get(i) - hyper.lr * g.get(i));
        }
        (loss, g) = loss_and_gradient(&p, &data, hyper.l2);
        trace.push(loss);
    }

    let model = SoftmaxModel {
        version: FEATURE_VERSION.to_string(),
        weights: p.w.iter().map(|r| r.to_vec()).collect(),
        bias: p.b.to_vec(),
        feature_mean: mean.to_vec(),
        feature_scale: scale.to_vec(),
    };
    Ok(TrainOutcome { model, loss_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn feat(v: f64, u: f64) -> PatchFeatures {
        let mut f = [0.0; FEATURE_LEN];
        f[0] = v;
        f[1] = u;
        f[5] = 0.3 * v - u;
        PatchFeatures(f)
    }

    fn three_clusters(seed: u64) -> Vec<(PatchFeatures, u8)> {
        let mut r = rng::stream(seed, "toy", 0);
        let centers = [(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)];
        (0..90)
            .map(|i| {
                let k = i % 3;
                let (cx, cy) = centers[k];
                (feat(cx + r.gen_range(-0.5..0.5), cy + r.gen_range(-0.5..0.5)), k as u8)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data: Vec<([f64; FEATURE_LEN], u8)> = three_clusters(1)
            .into_iter()
            .map(|(f, y)| (f.0, y))
            .collect();
        let mut r = rng::stream(2, "points", 0);
        for _ in 0..10 {
            let mut p = Params::default();
            for i in 0..Params::len() {
                p.set(i, r.gen_range(-1.0..1.0));
            }
            let (_, g) = loss_and_gradient(&p, &data, 0.01);
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            for i in 0..Params::len() {
                let mut a = p;
                let mut b = p;
                a.set(i, p.get(i) + h);
                b.set(i, p.get(i) - h);
                let fd = (loss_and_gradient(&a, &data, 0.01).0 - loss_and_gradient(&b, &data, 0.01).0) / (2.0 * h);
                let rel = (fd - g.get(i)).abs() / fd.abs().max(g.get(i).abs()).max(1e-6);
                worst = worst.max(rel);
            }
            assert!(worst <= 1e-4, "{worst}");
        }
    }

    #[test]
    fn separable_clusters_reach_full_accuracy() {
        let data = three_clusters(3);
        let out = train_softmax(&data, &TrainHyper { epochs: 200, ..Default::default() }).unwrap();
        for (f, y) in &data {
            assert_eq!(out.model.predict(f), *y);
        }
        assert!(out.loss_trace.last().unwrap() <= &out.loss_trace[0]);
        for w in out.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let data = three_clusters(4);
        let hyper = TrainHyper { epochs: 0, seed: 9, ..Default::default() };
        let a = train_softmax(&data, &hyper).unwrap();
        let b = train_softmax(&data, &hyper).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loss_trace.len(), 1);
        assert!(a.model.bias.iter().all(|&v| v == 0.0));
        assert!(a.model.weights.iter().flatten().all(|v| v.abs() < 0.01));
    }

    #[test]
    fn missing_class_is_an_error() {
        let data: Vec<_> = three_clusters(5).into_iter().filter(|(_, y)| *y != 2).collect();
        assert!(matches!(train_softmax(&data, &TrainHyper::default()), Err(BaselineError::MissingClass(2))));
    }

    #[test]
    fn zero_model_is_uniform_and_json_round_trips() {
        let m = SoftmaxModel::zeros();
        let p = m.predict_proba(&feat(1.0, 2.0));
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let m = train_softmax(&three_clusters(6), &TrainHyper::default()).unwrap().model;
        let s = serde_json::to_string(&m).unwrap();
        let back: SoftmaxModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        back.validate().unwrap();
    }
}
