use lesionforge::baseline::{
    extract_patch_features, ncc_track, sliding_window_heatmap, Heatmap, SoftmaxModel, FEATURE_LEN,
};
use lesionforge::evalkit::{heatmap_to_proposals, match_proposals, pck, roc_curve, MatchCriterion, RegionProposal, TruthRegion};
use lesionforge::imagecore::LesionClass;
use lesionforge::ImageRgb;
use proptest::prelude::*;
use rand::Rng;

fn brute_force_pck(pred: &[Option<(f64, f64)>], truth: &[(f64, f64)], alpha: f64, diag: f64) -> f64 {
    let mut correct = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        if let Some(p) = p {
            let dx = p.0 - t.0;
            let dy = p.1 - t.1;
            if (dx * dx + dy * dy).sqrt() <= alpha * diag {
                correct += 1;
            }
        }
    }
    correct as f64 / truth.len() as f64
}

fn texture(w: usize, h: usize, seed: u64) -> ImageRgb {
    let mut r = lesionforge::rng::stream(seed, "texture", 0);
    ImageRgb::from_fn(w, h, |_, _| [r.gen_range(0.0..1.0), r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pck_matches_counting_oracle(
        pts in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, -15.0..15.0f64, -15.0..15.0f64, any::<bool>()), 1..60),
        diag in 10.0..200.0f64,
    ) {
        let truth: Vec<_> = pts.iter().map(|p| (p.0, p.1)).collect();
        let pred: Vec<_> = pts.iter().map(|p| if p.4 { Some((p.0 + p.2, p.1 + p.3)) } else { None }).collect();
        let alphas: Vec<f64> = (0..20).map(|k| k as f64 * 0.01).collect();
        let c = pck(&pred, &truth, &alphas, diag).unwrap();
        let mut prev = 0.0;
        for &(a, f) in &c.points {
            prop_assert!((f - brute_force_pck(&pred, &truth, a, diag)).abs() <= 1e-12);
            prop_assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn matching_counts_balance(
        props in prop::collection::vec((0.0..1.0f64, 0usize..40, 0usize..40, any::<bool>()), 0..12),
        truths in prop::collection::vec((0usize..30, 0usize..30, 1usize..10, any::<bool>()), 0..6),
        iou in any::<bool>(),
    ) {
        let class = |b: bool| if b { LesionClass::Malignant } else { LesionClass::Benign };
        let proposals: Vec<RegionProposal> = props.iter().map(|&(s, x, y, c)| RegionProposal {
            bbox: (x.saturating_sub(3), y.saturating_sub(3), x + 3, y + 3), class: class(c), score: s, centroid: (x as f64, y as f64),
        }).collect();
        let truth: Vec<TruthRegion> = truths.iter().map(|&(x, y, s, c)| {
            let mut pixels = Vec::new();
            for yy in y..y + s { for xx in x..x + s { pixels.push((xx, yy)); } }
            TruthRegion { class: class(c), bbox: (x, y, x + s - 1, y + s - 1), centroid: (x as f64, y as f64), pixels }
        }).collect();
        let criterion = if iou { MatchCriterion::Iou(0.3) } else { MatchCriterion::Centroid };
        let m = match_proposals(&proposals, &truth, criterion);
        prop_assert_eq!(m.tp + m.fn_, truth.len());
        prop_assert_eq!(m.tp + m.fp, proposals.len());
        let mut used: Vec<usize> = m.matched.iter().flatten().copied().collect();
        used.sort();
        used.dedup();
        prop_assert_eq!(used.len(), m.tp);

        if !truth.is_empty() {
            let roc = roc_curve(&[(proposals, truth)], &[0.9, 0.7, 0.5, 0.3, 0.1, 0.0], criterion).unwrap();
            for w in roc.points.windows(2) {
                prop_assert!(w[1].tpr >= w[0].tpr);
            }
            prop_assert!((0.0..=1.0).contains(&roc.auc));
        }
    }

    #[test]
    fn proposals_survive_affine_score_rescaling(
        cells in prop::collection::vec(0.0..1.0f64, 100),
        gain in 0.2..1.0f64,
    ) {
        // p' = gain * p + (1 - gain) * 0.5 keeps the set {p >= 0.5} unchanged
        let build = |f: &dyn Fn(f64) -> f64| {
            let mut h = Heatmap::uniform(40, 40, 4, [1.0, 0.0, 0.0]);
            for (k, &p) in cells.iter().enumerate() {
                let q = f(p);
                h.set(k % 10, k / 10, [1.0 - q, 0.0, q]);
            }
            heatmap_to_proposals(&h, LesionClass::Malignant, 0.5, 1).unwrap()
        };
        let a = build(&|p| p);
        let b = build(&|p| gain * p + (1.0 - gain) * 0.5);
        let key = |v: &Vec<RegionProposal>| {
            let mut k: Vec<_> = v.iter().map(|p| (p.bbox, p.centroid.0.to_bits(), p.centroid.1.to_bits())).collect();
            k.sort();
            k
        };
        prop_assert_eq!(key(&a), key(&b));
        for p in &b {
            prop_assert!(p.score >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn ncc_ignores_gain_and_offset(gain in 0.2..3.0f64, offset in -0.5..0.5f64, seed in 0u64..50) {
        let a = texture(40, 40, seed);
        let b = ImageRgb::from_fn(40, 40, |x, y| a.get((x + 2).min(39), (y + 1).min(39)));
        let b2 = b.map(|v| gain * v + offset);
        let pts = [(12, 12), (20, 25), (28, 16)];
        let m1 = ncc_track(&a, &b, &pts, 7, 4).unwrap();
        let m2 = ncc_track(&a, &b2, &pts, 7, 4).unwrap();
        let a2 = a.map(|v| gain * v + offset);
        let m3 = ncc_track(&a2, &b, &pts, 7, 4).unwrap();
        for ((x, y), z) in m1.iter().zip(&m2).zip(&m3) {
            prop_assert_eq!(x.matched, y.matched);
            prop_assert_eq!(x.matched, z.matched);
        }
    }

    #[test]
    fn features_follow_translated_content(dx in 0usize..12, dy in 0usize..12, seed in 0u64..50, r in 2usize..7) {
        let base = texture(64, 64, seed);
        let moved = ImageRgb::from_fn(64, 64, |x, y| {
            if x >= dx && y >= dy { base.get(x - dx, y - dy) } else { [0.0; 3] }
        });
        let a = extract_patch_features(&base, (20, 22), r);
        let b = extract_patch_features(&moved, (20 + dx, 22 + dy), r);
        prop_assert_eq!(a, b);
        prop_assert!(a.0.iter().all(|v| v.is_finite()));
        prop_assert_eq!(a.0.len(), FEATURE_LEN);
    }

    #[test]
    fn heatmap_cells_are_distributions(seed in 0u64..20, stride in 1usize..9) {
        let img = texture(32, 24, seed);
        let mut model = SoftmaxModel::zeros();
        for (k, row) in model.weights.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                *w = ((k * 31 + j * 7 + seed as usize) % 11) as f64 - 5.0;
            }
        }
        let h = sliding_window_heatmap(&img, &model, 3, stride).unwrap();
        h.validate().unwrap();
        for p in &h.probs {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }
}
