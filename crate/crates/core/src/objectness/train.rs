//! Simplified trainer: one shared linear filter fit by stochastic
//! subgradient descent on the hinge loss, then per-size affine calibration
//! fit by least squares over the scan's own survivors.

use super::{binarize_weights, scan_windows, NgExtractor, ObjectnessModel, ScanParams};
use crate::error::{Error, Result};
use crate::geometry::{iou, Rect};
use crate::raster::GrayImage;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// One annotated training image.
#[derive(Clone, Debug)]
pub struct TrainImage {
    pub image: GrayImage,
    pub objects: Vec<Rect>,
}

#[derive(Clone, Debug)]
pub struct TrainParams {
    /// Overlap threshold: windows with `iou >= eta` against some object are
    /// positives.
    pub eta: f64,
    /// L2 regularization of the hinge-loss objective.
    pub lambda: f64,
    pub epochs: usize,
    /// Binary basis size and retained bit planes of the final model.
    pub n_w: usize,
    pub n_g: usize,
    pub sizes: Vec<(u32, u32)>,
    /// Random negative windows sampled per image (iou < 0.25 vs all objects).
    pub negatives_per_image: usize,
    /// Partial-overlap windows sampled around each object as hard negatives
    /// (gradient energy with the wrong layout).
    pub hard_negatives_per_object: usize,
    /// Accepted jittered positives per annotated object.
    pub jitters_per_object: usize,
    pub seed: u64,
    pub scan: ScanParams,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            lambda: 1e-4,
            epochs: 10,
            n_w: 2,
            n_g: 4,
            sizes: default_sizes(),
            negatives_per_image: 50,
            hard_negatives_per_object: 12,
            jitters_per_object: 8,
            seed: 7,
            scan: ScanParams::default(),
        }
    }
}

/// The 36 power-of-two quantized sizes: `{16..512} x {16..512}`.
pub fn default_sizes() -> Vec<(u32, u32)> {
    let steps = [16u32, 32, 64, 128, 256, 512];
    let mut sizes = Vec::with_capacity(36);
    for &h in &steps {
        for &w in &steps {
            sizes.push((w, h));
        }
    }
    sizes
}

/// Trains the filter and calibration. Fails with [`Error::NoPositives`] when
/// the dataset yields no positive window at the requested `eta`.
pub fn train_simple(images: &[TrainImage], params: &TrainParams) -> Result<ObjectnessModel> {
    let mut rng = StdRng::seed_from_u64(params.seed);

    // stage 1 sample collection: features normalized to [0, 1]
    let mut samples: Vec<([f64; 64], f64)> = Vec::new();
    let mut positives = 0usize;
    for ti in images {
        let frame = Rect::new(0.0, 0.0, ti.image.width() as f64, ti.image.height() as f64);
        let extractor = NgExtractor::new(&ti.image);
        let push = |window: &Rect, label: f64, samples: &mut Vec<([f64; 64], f64)>| {
            if let Ok(feat) = extractor.extract(window) {
                let mut x = [0f64; 64];
                for (xi, &v) in x.iter_mut().zip(feat.0.iter()) {
                    *xi = v as f64 / 255.0;
                }
                samples.push((x, label));
                true
            } else {
                false
            }
        };

        for obj in &ti.objects {
            let mut accepted = 0;
            if push(obj, 1.0, &mut samples) {
                positives += 1;
            }
            let mut attempts = 0;
            while accepted < params.jitters_per_object && attempts < 10 * params.jitters_per_object {
                attempts += 1;
                let jit = jitter(obj, &frame, &mut rng);
                if iou(&jit, obj) >= params.eta && push(&jit, 1.0, &mut samples) {
                    accepted += 1;
                    positives += 1;
                }
            }
            // hard negatives: windows straddling one side of the object
            let mut accepted = 0;
            let mut attempts = 0;
            while accepted < params.hard_negatives_per_object && attempts < 20 * params.hard_negatives_per_object {
                attempts += 1;
                let cand = straddle(obj, &frame, &mut rng);
                let max_iou = ti.objects.iter().map(|o| iou(&cand, o)).fold(0.0, f64::max);
                if max_iou < 0.25 && push(&cand, -1.0, &mut samples) {
                    accepted += 1;
                }
            }
        }

        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < params.negatives_per_image && attempts < 10 * params.negatives_per_image {
            attempts += 1;
            let cand = random_window(&frame, &mut rng);
            if ti.objects.iter().all(|o| iou(&cand, o) < 0.25) && push(&cand, -1.0, &mut samples) {
                accepted += 1;
            }
        }
    }
    if positives == 0 {
        return Err(Error::NoPositives);
    }

    // stage 1: hinge loss, L2 regularization, learning rate 1/(lambda t)
    let mut w = [0f64; 64];
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            t += 1;
            let (x, y) = &samples[si];
            let margin: f64 = y * w.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
            let shrink = 1.0 - 1.0 / t as f64;
            w.iter_mut().for_each(|wi| *wi *= shrink);
            if margin < 1.0 {
                let step = 1.0 / (params.lambda * t as f64);
                for (wi, xi) in w.iter_mut().zip(x.iter()) {
                    *wi += step * y * xi;
                }
            }
        }
    }
    // undo the feature normalization so the filter applies to raw bytes
    let w_raw: Vec<f64> = w.iter().map(|v| v / 255.0).collect();

    let mut model = ObjectnessModel {
        w: w_raw.clone(),
        basis: binarize_weights(&w_raw, params.n_w),
        n_g: params.n_g,
        sizes: params.sizes.clone(),
        calib: vec![(1.0, 0.0); params.sizes.len()],
    };

    // stage 2: per-size least-squares fit of raw scores to +/-1 labels over
    // the windows the scan itself would rank
    let mut per_size: Vec<Vec<(f64, f64)>> = vec![Vec::new(); model.sizes.len()];
    for ti in images {
        for bucket in scan_windows(&ti.image, &model, &params.scan) {
            for win in bucket {
                let label = if ti.objects.iter().any(|o| iou(&win.rect, o) >= params.eta) {
                    1.0
                } else {
                    -1.0
                };
                per_size[win.size_index].push((win.raw_score, label));
            }
        }
    }
    for (i, pts) in per_size.iter().enumerate() {
        model.calib[i] = fit_affine(pts);
    }
    Ok(model)
}

fn jitter(obj: &Rect, frame: &Rect, rng: &mut StdRng) -> Rect {
    let w = obj.width().max(1.0);
    let h = obj.height().max(1.0);
    let dx = rng.gen_range(-0.15..0.15) * w;
    let dy = rng.gen_range(-0.15..0.15) * h;
    let sw = rng.gen_range(0.8..1.25) * w;
    let sh = rng.gen_range(0.8..1.25) * h;
    let cx = (obj.x1 + obj.x2) / 2.0 + dx;
    let cy = (obj.y1 + obj.y2) / 2.0 + dy;
    let cand = Rect::new(cx - sw / 2.0, cy - sh / 2.0, cx + sw / 2.0, cy + sh / 2.0);
    cand.clip(frame).unwrap_or(*obj)
}

/// A window shifted far enough off the object that it mostly contains one of
/// its edges: strips and corner crops with strong but one-sided gradients.
fn straddle(obj: &Rect, frame: &Rect, rng: &mut StdRng) -> Rect {
    let w = obj.width().max(1.0);
    let h = obj.height().max(1.0);
    let (mut sw, mut sh) = (rng.gen_range(0.4..1.4) * w, rng.gen_range(0.4..1.4) * h);
    // half the time, flatten one axis into a strip along an edge
    if rng.gen_bool(0.5) {
        if rng.gen_bool(0.5) {
            sh = rng.gen_range(0.1..0.3) * h;
        } else {
            sw = rng.gen_range(0.1..0.3) * w;
        }
    }
    let edge = rng.gen_range(0..4usize);
    let (cx, cy) = match edge {
        0 => (obj.x1, (obj.y1 + obj.y2) / 2.0 + rng.gen_range(-0.4..0.4) * h),
        1 => (obj.x2, (obj.y1 + obj.y2) / 2.0 + rng.gen_range(-0.4..0.4) * h),
        2 => ((obj.x1 + obj.x2) / 2.0 + rng.gen_range(-0.4..0.4) * w, obj.y1),
        _ => ((obj.x1 + obj.x2) / 2.0 + rng.gen_range(-0.4..0.4) * w, obj.y2),
    };
    let cand = Rect::new(cx - sw / 2.0, cy - sh / 2.0, cx + sw / 2.0, cy + sh / 2.0);
    cand.clip(frame).unwrap_or(*obj)
}

fn random_window(frame: &Rect, rng: &mut StdRng) -> Rect {
    let max_w = frame.width();
    let max_h = frame.height();
    let w = rng.gen_range((8.0f64).min(max_w)..=max_w);
    let h = rng.gen_range((8.0f64).min(max_h)..=max_h);
    let x1 = rng.gen_range(0.0..=(max_w - w).max(0.0) + f64::EPSILON);
    let y1 = rng.gen_range(0.0..=(max_h - h).max(0.0) + f64::EPSILON);
    Rect::new(x1, y1, (x1 + w).min(frame.x2), (y1 + h).min(frame.y2))
}

/// Least squares `v s + t ~ y` with degenerate-input handling: too few
/// samples or all-positive labels fall back to the identity `(1, 0)`; a size
/// that never produced a positive window is pinned to the constant `-1` so
/// its raw scores cannot outrank calibrated sizes; constant scores with
/// mixed labels collapse to the mean label.
fn fit_affine(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (1.0, 0.0);
    }
    let has_pos = pts.iter().any(|&(_, y)| y > 0.0);
    let has_neg = pts.iter().any(|&(_, y)| y < 0.0);
    if !has_neg {
        return (1.0, 0.0);
    }
    if !has_pos {
        return (0.0, -1.0);
    }
    let mean_s = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let var_s = pts.iter().map(|p| (p.0 - mean_s).powi(2)).sum::<f64>() / n;
    if var_s < 1e-12 {
        return (0.0, mean_y);
    }
    let cov = pts.iter().map(|p| (p.0 - mean_s) * (p.1 - mean_y)).sum::<f64>() / n;
    let v = cov / var_s;
    (v, mean_y - v * mean_s)
}
