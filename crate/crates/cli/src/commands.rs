use std::path::{Path, PathBuf};

use lesionforge::baseline::{
    ncc_track, mine_hard_negatives, sample_training_patches, sliding_window_heatmap, train_softmax,
    BaselineError, TrainHyper,
};
use lesionforge::evalkit::{heatmap_to_proposals, pck, roc_curve, suppress_overlapping, truth_regions, RegionProposal};
use lesionforge::imagecore::io::{read_label_png, read_mask_png, read_rgb_png, write_label_png, write_mask_png, write_rgb_png};
use lesionforge::imagecore::{ImageError, LesionClass};
use lesionforge::poissonblend::{seamless_clone_limited, BlendError, BlendRequest, GuidanceMode, SolveReport};
use lesionforge::rng::{derive_seed, stream};
use lesionforge::synth::{synth_detection_sample, synth_tracking_pair, Provenance, SyntheticSample};
use lesionforge::{BinaryMask, FlowField, ImageRgb, LabelMask};
use rand::seq::index;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::assets::{self, AssetCatalog};
use crate::config::{Config, CriterionKind};
use crate::lflo;
use crate::manifest::{DatasetManifest, ManifestKind, PairRecord, SampleRecord, MANIFEST_FILE};
use crate::output::{first_error, to_json_bytes, with_pool, write_atomic, write_atomic_with, Staging};
use crate::overlay;
use crate::predictions::*;
use crate::{CliError, Result};

/// Predictions with at least this score are drawn on detection overlays.
pub const OVERLAY_MIN_SCORE: f64 = 0.5;
/// Correspondences within this fraction of the diagonal are drawn as correct.
pub const OVERLAY_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Detect,
    Track,
}

fn read_image(path: &Path) -> Result<ImageRgb> {
    read_rgb_png(path).map_err(|e| CliError::file(path, e))
}

fn read_labels(path: &Path) -> Result<LabelMask> {
    read_label_png(path).map_err(|e| CliError::file(path, e))
}

fn read_mask(path: &Path) -> Result<BinaryMask> {
    read_mask_png(path).map_err(|e| CliError::file(path, e))
}

fn write_err(path: &Path) -> impl FnOnce(ImageError) -> CliError + '_ {
    move |e| CliError::file(path, e)
}

/// Procedural assets into a fresh directory.
pub fn cmd_gen_assets(config: &Config, out: &Path, seed: u64, bodies: Option<usize>) -> Result<AssetCatalog> {
    let staging = Staging::new(out)?;
    let n_bodies = bodies.unwrap_or(config.assets.bodies);
    let cat = assets::write_generated(staging.path(), &config.fixtures, n_bodies, config.assets.lesions, seed)?;
    staging.commit()?;
    Ok(cat)
}

/// `count` detection samples plus a manifest into a fresh directory. Sample
/// `i` depends only on `(seed, i)` and the inputs, never on `count`.
pub fn cmd_synth_detect(
    config: &Config,
    assets_dir: &Path,
    out: &Path,
    count: usize,
    seed: u64,
    jobs: usize,
) -> Result<DatasetManifest> {
    let assets = assets::load(assets_dir)?;
    let staging = Staging::new(out)?;
    let root = staging.path().to_path_buf();
    let samples_dir = root.join("samples");
    std::fs::create_dir_all(&samples_dir).map_err(CliError::io(&samples_dir))?;

    let records = with_pool(jobs, || {
        (0..count)
            .into_par_iter()
            .map(|i| -> Result<SampleRecord> {
                let sample_seed = derive_seed(seed, "sample", i as u64);
                let body = &assets.bodies[(derive_seed(seed, "sample-body", i as u64) % assets.bodies.len() as u64) as usize];
                let sample = synth_detection_sample(body, &assets.lesions, &config.synth, sample_seed)
                    .map_err(|e| CliError::Generation { seed: sample_seed, message: format!("sample {i}: {e}") })?;
                let rec = SampleRecord {
                    index: i,
                    seed: sample_seed,
                    body_id: body.id.clone(),
                    image: format!("samples/{i:05}.png"),
                    labels: format!("samples/{i:05}_labels.png"),
                    skin: format!("samples/{i:05}_skin.png"),
                    placements: sample.placements.clone(),
                    dropped: sample.dropped,
                };
                let p = root.join(&rec.image);
                write_rgb_png(&sample.image, &p).map_err(write_err(&p))?;
                let p = root.join(&rec.labels);
                write_label_png(&sample.labels, &p).map_err(write_err(&p))?;
                let p = root.join(&rec.skin);
                write_mask_png(&sample.skin, &p).map_err(write_err(&p))?;
                Ok(rec)
            })
            .collect::<Vec<_>>()
    })?;
    let mut manifest = DatasetManifest::new(ManifestKind::Detection, config, seed, assets.ids());
    manifest.samples = first_error(records)?;
    manifest.validate(Some(&root))?;
    let p = root.join(MANIFEST_FILE);
    std::fs::write(&p, manifest.to_json()).map_err(CliError::io(&p))?;
    staging.commit()?;
    Ok(manifest)
}

fn load_sample(dir: &Path, rec: &SampleRecord) -> Result<SyntheticSample> {
    Ok(SyntheticSample {
        image: read_image(&dir.join(&rec.image))?,
        labels: read_labels(&dir.join(&rec.labels))?,
        skin: read_mask(&dir.join(&rec.skin))?,
        placements: rec.placements.clone(),
        seed: rec.seed,
        provenance: Provenance {
            body_id: rec.body_id.clone(),
            lesion_ids: rec.placements.iter().map(|p| p.lesion_id.clone()).collect(),
        },
        dropped: rec.dropped,
    })
}

fn manifest_digest(dir: &Path) -> Result<String> {
    let p = dir.join(MANIFEST_FILE);
    let bytes = std::fs::read(&p).map_err(CliError::io(&p))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn flow_write(path: &Path) -> impl FnOnce(CliError) -> CliError + '_ {
    move |e| match e {
        CliError::Usage(_) => e,
        other => CliError::FlowWrite { path: path.to_path_buf(), message: other.to_string() },
    }
}

/// One tracking pair per sample of a detection manifest. Uses `config` for the
/// pair parameters when given, else the config embedded in the manifest.
pub fn cmd_synth_track(
    config: Option<&Config>,
    manifest_path: &Path,
    out: &Path,
    seed: u64,
    jobs: usize,
) -> Result<DatasetManifest> {
    let (source, dir) = DatasetManifest::load(manifest_path)?;
    if source.kind != ManifestKind::Detection {
        return Err(CliError::Schema("synth-track needs a detection manifest".into()));
    }
    let config = config.cloned().unwrap_or_else(|| source.config.clone());
    config.validate()?;
    let staging = Staging::new(out).map_err(flow_write(out))?;
    let root = staging.path().to_path_buf();
    let pairs_dir = root.join("pairs");
    std::fs::create_dir_all(&pairs_dir).map_err(CliError::io(&pairs_dir)).map_err(flow_write(out))?;

    let records = with_pool(jobs, || {
        source
            .samples
            .par_iter()
            .map(|rec| -> Result<PairRecord> {
                let i = rec.index;
                let sample = load_sample(&dir, rec)?;
                let pair_seed = derive_seed(seed, "pair", i as u64);
                let pair = synth_tracking_pair(&sample, &config.pair, pair_seed)
                    .map_err(|e| CliError::Generation { seed: pair_seed, message: format!("pair {i}: {e}") })?;
                let r = PairRecord {
                    index: i,
                    sample: i,
                    seed: pair_seed,
                    image_a: format!("pairs/{i:05}_a.png"),
                    image_b: format!("pairs/{i:05}_b.png"),
                    labels_a: format!("pairs/{i:05}_labels_a.png"),
                    labels_b: format!("pairs/{i:05}_labels_b.png"),
                    changed: format!("pairs/{i:05}_changed.png"),
                    flow: format!("pairs/{i:05}.lflo"),
                    perturbed: pair.perturbed.clone(),
                    dropped: pair.dropped.clone(),
                };
                let fw = |p: &Path, m: String| CliError::FlowWrite { path: p.to_path_buf(), message: m };
                let p = root.join(&r.image_a);
                write_rgb_png(&pair.image_a, &p).map_err(|e| fw(&p, e.to_string()))?;
                let p = root.join(&r.image_b);
                write_rgb_png(&pair.image_b, &p).map_err(|e| fw(&p, e.to_string()))?;
                let p = root.join(&r.labels_a);
                write_label_png(&pair.labels_a, &p).map_err(|e| fw(&p, e.to_string()))?;
                let p = root.join(&r.labels_b);
                write_label_png(&pair.labels_b, &p).map_err(|e| fw(&p, e.to_string()))?;
                let p = root.join(&r.changed);
                write_mask_png(&pair.changed, &p).map_err(|e| fw(&p, e.to_string()))?;
                let p = root.join(&r.flow);
                lflo::write_flow(&p, &pair.flow_ab).map_err(|e| fw(&p, e.to_string()))?;
                Ok(r)
            })
            .collect::<Vec<_>>()
    })?;
    let mut manifest = DatasetManifest::new(ManifestKind::Tracking, &config, seed, source.assets.clone());
    manifest.source_manifest = Some(manifest_digest(&dir)?);
    manifest.pairs = first_error(records)?;
    manifest.validate(Some(&root))?;
    let p = root.join(MANIFEST_FILE);
    std::fs::write(&p, manifest.to_json()).map_err(|e| CliError::FlowWrite { path: p.clone(), message: e.to_string() })?;
    staging.commit().map_err(flow_write(out))?;
    Ok(manifest)
}

/// Up to `k` query points in image B: valid flow, untouched by lesion
/// perturbation, at least `margin` pixels from the border. Deterministic in `seed`.
/// `start`, `start + step`, ... while below 1.
pub fn proposal_levels(start: f64, step: f64) -> Vec<f64> {
    (0..).map(|k| start + k as f64 * step).take_while(|&t| t < 1.0).collect()
}

pub fn sample_keypoints(flow: &FlowField, changed: &BinaryMask, margin: usize, k: usize, seed: u64) -> Vec<(usize, usize)> {
    let (w, h) = flow.dimensions();
    if w <= 2 * margin || h <= 2 * margin {
        return Vec::new();
    }
    let mut candidates = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            if flow.is_valid(x, y) && !changed.get(x, y) {
                candidates.push((x, y));
            }
        }
    }
    if candidates.len() <= k {
        return candidates;
    }
    let mut r = stream(seed, "keypoints", 0);
    let mut picks = index::sample(&mut r, candidates.len(), k).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| candidates[i]).collect()
}

/// Train on the first `split` samples and predict on the rest (detect), or
/// track sampled keypoints on every pair (track). Writes the predictions JSON.
pub fn cmd_baseline(
    config: &Config,
    manifest_path: &Path,
    task: Task,
    split: Option<usize>,
    seed: u64,
    out: &Path,
    jobs: usize,
) -> Result<()> {
    let (m, dir) = DatasetManifest::load(manifest_path)?;
    let b = config.baseline;
    let bytes = match task {
        Task::Detect => {
            if m.kind != ManifestKind::Detection {
                return Err(CliError::Schema("detect mode needs a detection manifest".into()));
            }
            let split = split.ok_or_else(|| CliError::Usage("detect mode needs --split <train count>".into()))?;
            if split > m.samples.len() {
                return Err(CliError::Usage(format!("--split {split} exceeds {} samples", m.samples.len())));
            }
            let (train, test) = m.samples.split_at(split);
            let patches = with_pool(jobs, || {
                train
                    .par_iter()
                    .map(|rec| -> Result<_> {
                        let img = read_image(&dir.join(&rec.image))?;
                        let labels = read_labels(&dir.join(&rec.labels))?;
                        sample_training_patches(&img, &labels, b.radius, b.extra_per_lesion, b.ring_fraction, derive_seed(seed, "patches", rec.index as u64))
                            .map_err(|e| CliError::Usage(e.to_string()))
                    })
                    .collect::<Vec<_>>()
            })?;
            let mut patches: Vec<_> = first_error(patches)?.into_iter().flatten().collect();
            let hyper = TrainHyper { seed: derive_seed(seed, "train", b.train.seed), ..b.train };
            let fit = |patches: &[_]| {
                train_softmax(patches, &hyper).map_err(|e| match e {
                    BaselineError::MissingClass(k) => CliError::EmptyClass(
                        ["background", "benign", "malignant"].get(k as usize).copied().unwrap_or("?").to_string(),
                    ),
                    other => CliError::Usage(other.to_string()),
                })
            };
            let mut trained = fit(&patches)?;
            for _ in 0..b.hard_negative_rounds {
                let model = &trained.model;
                let mined = with_pool(jobs, || {
                    train
                        .par_iter()
                        .map(|rec| -> Result<_> {
                            let img = read_image(&dir.join(&rec.image))?;
                            let labels = read_labels(&dir.join(&rec.labels))?;
                            mine_hard_negatives(&img, &labels, model, b.radius, b.stride, b.prob_threshold, b.hard_negatives_per_image)
                                .map_err(|e| CliError::Usage(e.to_string()))
                        })
                        .collect::<Vec<_>>()
                })?;
                patches.extend(first_error(mined)?.into_iter().flatten());
                trained = fit(&patches)?;
            }
            let model = trained.model;
            let images = with_pool(jobs, || {
                test.par_iter()
                    .map(|rec| -> Result<ImageProposals> {
                        let img = read_image(&dir.join(&rec.image))?;
                        let heat = sliding_window_heatmap(&img, &model, b.radius, b.stride).map_err(|e| CliError::Usage(e.to_string()))?;
                        let mut proposals = Vec::new();
                        // higher levels split blobs that merge neighbouring lesions
                        for level in proposal_levels(b.prob_threshold, b.level_step) {
                            for class in [LesionClass::Benign, LesionClass::Malignant] {
                                proposals.extend(
                                    heatmap_to_proposals(&heat, class, level, b.min_area)
                                        .map_err(|e| CliError::Config(e.to_string()))?,
                                );
                            }
                        }
                        proposals.sort_by(|a: &RegionProposal, b| b.score.total_cmp(&a.score));
                        Ok(ImageProposals { sample: rec.index, proposals: suppress_overlapping(&proposals) })
                    })
                    .collect::<Vec<_>>()
            })?;
            let preds = DetectPredictions {
                task: "detect".into(),
                schema_version: PREDICTIONS_VERSION,
                manifest_config_hash: m.config_hash.clone(),
                train_samples: train.iter().map(|r| r.index).collect(),
                model,
                loss_initial: trained.loss_trace[0],
                loss_final: *trained.loss_trace.last().unwrap(),
                images: first_error(images)?,
            };
            to_json_bytes(&preds)
        }
        Task::Track => {
            if m.kind != ManifestKind::Tracking {
                return Err(CliError::Schema("track mode needs a tracking manifest".into()));
            }
            let pairs = with_pool(jobs, || {
                m.pairs
                    .par_iter()
                    .map(|rec| -> Result<PairKeypoints> {
                        let a = read_image(&dir.join(&rec.image_a))?;
                        let bimg = read_image(&dir.join(&rec.image_b))?;
                        let flow = lflo::read_flow(&dir.join(&rec.flow))?;
                        let changed = read_mask(&dir.join(&rec.changed))?;
                        let queries = sample_keypoints(&flow, &changed, b.ncc_window / 2, b.keypoints_per_pair, derive_seed(seed, "keypoints", rec.index as u64));
                        let matches = ncc_track(&a, &bimg, &queries, b.ncc_window, b.ncc_search)
                            .map_err(|e| CliError::Usage(e.to_string()))?;
                        let keypoints = matches
                            .iter()
                            .map(|t| Keypoint { query: t.query, predicted: t.matched.map(|(x, y)| (x as f64, y as f64)) })
                            .collect();
                        Ok(PairKeypoints { pair: rec.index, keypoints })
                    })
                    .collect::<Vec<_>>()
            })?;
            let preds = TrackPredictions {
                task: "track".into(),
                schema_version: PREDICTIONS_VERSION,
                manifest_config_hash: m.config_hash.clone(),
                pairs: first_error(pairs)?,
            };
            to_json_bytes(&preds)
        }
    };
    write_atomic(out, &bytes)
}

fn parse_predictions<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("predictions {}: {e}", path.display())))
}

fn check_header(task: &str, expected: &str, version: u32) -> Result<()> {
    if task != expected {
        return Err(CliError::Schema(format!("predictions.task is {task:?}, expected {expected:?}")));
    }
    if version != PREDICTIONS_VERSION {
        return Err(CliError::Schema(format!("predictions.schema_version {version} (expected {PREDICTIONS_VERSION})")));
    }
    Ok(())
}

pub enum Metrics {
    Detect(DetectMetrics),
    Track(TrackMetrics),
}

/// Scores predictions against the manifest's ground truth and writes the
/// metrics JSON; with `overlay`, also renders one PNG per image or pair.
pub fn cmd_eval(
    config: &Config,
    manifest_path: &Path,
    predictions: &Path,
    task: Task,
    out: &Path,
    overlay_dir: Option<&Path>,
) -> Result<Metrics> {
    let (m, dir) = DatasetManifest::load(manifest_path)?;
    let staging = overlay_dir.map(Staging::new).transpose()?;
    let metrics = match task {
        Task::Detect => {
            let preds: DetectPredictions = parse_predictions(predictions)?;
            check_header(&preds.task, "detect", preds.schema_version)?;
            let mut images = Vec::new();
            for (k, ip) in preds.images.iter().enumerate() {
                let rec = m
                    .samples
                    .get(ip.sample)
                    .ok_or_else(|| CliError::Schema(format!("predictions.images[{k}].sample {} not in manifest", ip.sample)))?;
                let labels = read_labels(&dir.join(&rec.labels))?;
                if let Some(s) = &staging {
                    let img = read_image(&dir.join(&rec.image))?;
                    let shown: Vec<_> = ip.proposals.iter().filter(|p| p.score >= OVERLAY_MIN_SCORE).cloned().collect();
                    let p = s.path().join(format!("{:05}.png", ip.sample));
                    write_rgb_png(&overlay::detection_overlay(&img, &shown), &p).map_err(write_err(&p))?;
                }
                images.push((ip.proposals.clone(), truth_regions(&labels)));
            }
            let roc = roc_curve(&images, &config.eval.thresholds, config.eval.criterion())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Metrics::Detect(DetectMetrics {
                task: "detect".into(),
                criterion: config.eval.criterion,
                iou: (config.eval.criterion == CriterionKind::Iou).then_some(config.eval.iou),
                roc,
            })
        }
        Task::Track => {
            let preds: TrackPredictions = parse_predictions(predictions)?;
            check_header(&preds.task, "track", preds.schema_version)?;
            let mut predicted = Vec::new();
            let mut truth = Vec::new();
            let mut diags = Vec::new();
            for (k, pk) in preds.pairs.iter().enumerate() {
                let rec = m
                    .pairs
                    .get(pk.pair)
                    .ok_or_else(|| CliError::Schema(format!("predictions.pairs[{k}].pair {} not in manifest", pk.pair)))?;
                let flow = lflo::read_flow(&dir.join(&rec.flow))?;
                let (w, h) = flow.dimensions();
                let diag = (w as f64).hypot(h as f64);
                let mut lines = Vec::new();
                for (j, kp) in pk.keypoints.iter().enumerate() {
                    let (qx, qy) = kp.query;
                    if qx >= w || qy >= h {
                        return Err(CliError::Schema(format!("predictions.pairs[{k}].keypoints[{j}].query outside the image")));
                    }
                    let t = flow.target(qx, qy);
                    truth.push(t);
                    predicted.push(kp.predicted);
                    diags.push(diag);
                    lines.push((kp.query, kp.predicted, t));
                }
                if let Some(s) = &staging {
                    let a = read_image(&dir.join(&rec.image_a))?;
                    let b = read_image(&dir.join(&rec.image_b))?;
                    let mut canvas = overlay::side_by_side(&a, &b);
                    let wa = a.width() as i64;
                    for (q, p, t) in lines {
                        let qb = (q.0 as i64 + wa, q.1 as i64);
                        match p {
                            Some(p) => {
                                let ok = (p.0 - t.0).hypot(p.1 - t.1) <= OVERLAY_ALPHA * diag;
                                let color = if ok { overlay::CORRECT } else { overlay::INCORRECT };
                                overlay::draw_line(&mut canvas, qb, (p.0.round() as i64, p.1.round() as i64), color);
                            }
                            None => overlay::draw_cross(&mut canvas, qb, overlay::INCORRECT),
                        }
                    }
                    let p = s.path().join(format!("{:05}.png", rec.index));
                    write_rgb_png(&canvas, &p).map_err(write_err(&p))?;
                }
            }
            let invalid = predicted.iter().filter(|p| p.is_none()).count();
            let curve = if diags.windows(2).all(|w| w[0] == w[1]) {
                let diag = diags.first().copied().unwrap_or(1.0);
                pck(&predicted, &truth, &config.eval.alphas, diag)
            } else {
                // mixed image sizes: measure every error in units of its own diagonal
                let scale = |p: (f64, f64), d: f64| (p.0 / d, p.1 / d);
                let pn: Vec<_> = predicted.iter().zip(&diags).map(|(p, &d)| p.map(|p| scale(p, d))).collect();
                let tn: Vec<_> = truth.iter().zip(&diags).map(|(&t, &d)| scale(t, d)).collect();
                pck(&pn, &tn, &config.eval.alphas, 1.0)
            }
            .map_err(|e| CliError::Usage(e.to_string()))?;
            Metrics::Track(TrackMetrics { task: "track".into(), pck: curve, invalid })
        }
    };
    let bytes = match &metrics {
        Metrics::Detect(d) => to_json_bytes(d),
        Metrics::Track(t) => to_json_bytes(t),
    };
    write_atomic(out, &bytes)?;
    if let Some(s) = staging {
        s.commit()?;
    }
    Ok(metrics)
}

pub struct CloneResult {
    pub report: SolveReport,
    /// Mask pixels dropped because they touched the source border.
    pub eroded: usize,
    pub out: PathBuf,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_poisson_clone(
    target: &Path,
    source: &Path,
    mask: &Path,
    offset: (i64, i64),
    mode: GuidanceMode,
    tol: f64,
    max_iter: Option<usize>,
    out: &Path,
) -> Result<CloneResult> {
    if !(tol > 0.0) {
        return Err(CliError::Usage("--tol must be > 0".into()));
    }
    let t = read_image(target)?;
    let s = read_image(source)?;
    let region = read_mask(mask)?;
    if region.dimensions() != s.dimensions() {
        return Err(CliError::Usage(format!(
            "mask is {:?} but source is {:?}",
            region.dimensions(),
            s.dimensions()
        )));
    }
    let req = BlendRequest::new(&t, &s, &region, offset).with_mode(mode);
    let outcome = seamless_clone_limited(&req, tol, max_iter).map_err(|e| match e {
        BlendError::NotConverged { report } => CliError::NotConverged(report),
        other => CliError::Usage(other.to_string()),
    })?;
    write_atomic_with(out, |tmp| write_rgb_png(&outcome.image, tmp).map_err(write_err(tmp)))?;
    Ok(CloneResult { report: outcome.report, eroded: outcome.eroded, out: out.to_path_buf() })
}
