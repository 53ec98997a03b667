//! Sliding-window scan over quantized window sizes.
//!
//! For each size the image is downscaled so that size maps to 8x8, the 8x8
//! filter slides at stride 1 scoring via the binarized fast path, per-size
//! NMS keeps a bounded set, and the survivors are calibrated, merged across
//! sizes, and truncated.

use super::{fast_score_words, ObjectnessModel};
use crate::geometry::{Proposal, ProposalSource, Rect};
use crate::raster::GrayImage;

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScanParams {
    /// Windows kept per quantized size after per-size NMS.
    pub per_size_keep: usize,
    /// IoU threshold of the per-size NMS.
    pub per_size_nms_iou: f64,
    /// Upper bound on merged output length.
    pub total_keep: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self { per_size_keep: 130, per_size_nms_iou: 0.6, total_keep: 1000 }
    }
}

/// A surviving window of one quantized size: its grid location in the
/// size-normalized scan frame, raw filter score, and original-image box.
#[derive(Clone, Copy, Debug)]
pub struct ScanWindow {
    pub size_index: usize,
    pub x: usize,
    pub y: usize,
    pub raw_score: f64,
    pub rect: Rect,
}

/// Runs the scan and returns the per-size NMS survivors, one bucket per
/// quantized size, each sorted by raw score descending.
pub fn scan_windows(img: &GrayImage, model: &ObjectnessModel, params: &ScanParams) -> Vec<Vec<ScanWindow>> {
    assert!(!model.sizes.is_empty(), "model must define at least one size");
    let n_g = model.n_g;
    let (w0, h0) = (img.width() as f64, img.height() as f64);

    let mut out = Vec::with_capacity(model.sizes.len());
    for (size_index, &(sw, sh)) in model.sizes.iter().enumerate() {
        let rw = ((w0 * 8.0 / sw as f64).round() as usize).max(8);
        let rh = ((h0 * 8.0 / sh as f64).round() as usize).max(8);
        let resized = img.resize(rw, rh).expect("positive dimensions");
        let mag = crate::raster::magnitude_u8(&resized);

        // Incremental bit-plane construction. For window top-left (x0, y0)
        // the k-th plane word stacks 8 row bytes (top row in the high byte,
        // leftmost column in the high bit of each byte).
        let nx = rw - 7;
        let ny = rh - 7;
        let mut col_planes = vec![0u64; n_g * rw];
        let mut scores: Vec<(f64, u32, u32)> = Vec::with_capacity(nx * ny);
        let mut row_bits = vec![0u8; n_g];
        for y in 0..rh {
            row_bits.iter_mut().for_each(|b| *b = 0);
            for x in 0..rw {
                let v = mag[y * rw + x];
                for (k, rb) in row_bits.iter_mut().enumerate() {
                    *rb = (*rb << 1) | (v >> (7 - k) & 1);
                }
                if x >= 7 {
                    let x0 = x - 7;
                    for k in 0..n_g {
                        let p = &mut col_planes[k * rw + x0];
                        *p = (*p << 8) | row_bits[k] as u64;
                    }
                }
            }
            if y >= 7 {
                let y0 = (y - 7) as u32;
                let mut planes = [0u64; 8];
                for x0 in 0..nx {
                    for (k, plane) in planes[..n_g].iter_mut().enumerate() {
                        *plane = col_planes[k * rw + x0];
                    }
                    let s = fast_score_words(&model.basis, &planes[..n_g]);
                    scores.push((s, x0 as u32, y0));
                }
            }
        }

        let kept = per_size_nms(&scores, nx, ny, params.per_size_nms_iou, params.per_size_keep);
        let sx = w0 / rw as f64;
        let sy = h0 / rh as f64;
        let bucket = kept
            .into_iter()
            .map(|i| {
                let (s, x, y) = scores[i];
                ScanWindow {
                    size_index,
                    x: x as usize,
                    y: y as usize,
                    raw_score: s,
                    rect: Rect::new(x as f64 * sx, y as f64 * sy, (x as f64 + 8.0) * sx, (y as f64 + 8.0) * sy),
                }
            })
            .collect();
        out.push(bucket);
    }
    out
}

/// Greedy NMS among same-size windows. Two windows of the same size overlap
/// by at least `rho` iff their grid offset lies in a fixed small
/// neighborhood, so suppression is a constant-time stamp per kept window.
fn per_size_nms(scores: &[(f64, u32, u32)], nx: usize, ny: usize, rho: f64, keep: usize) -> Vec<usize> {
    let mut offsets = Vec::new();
    for dy in -7i64..=7 {
        for dx in -7i64..=7 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let inter = ((8 - dx.abs()) * (8 - dy.abs())) as f64;
            if inter / (128.0 - inter) >= rho {
                offsets.push((dx, dy));
            }
        }
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: score ties fall back to raster order
    order.sort_by(|&a, &b| scores[b].0.total_cmp(&scores[a].0));

    let mut suppressed = vec![false; scores.len()];
    let mut kept = Vec::with_capacity(keep.min(64));
    for &i in &order {
        if suppressed[i] {
            continue;
        }
        kept.push(i);
        if kept.len() >= keep {
            break;
        }
        let (_, x, y) = scores[i];
        for &(dx, dy) in &offsets {
            let nxp = x as i64 + dx;
            let nyp = y as i64 + dy;
            if nxp >= 0 && nyp >= 0 && (nxp as usize) < nx && (nyp as usize) < ny {
                suppressed[nyp as usize * nx + nxp as usize] = true;
            }
        }
    }
    kept
}

/// Full scan: per-size survivors are calibrated, merged across sizes, sorted
/// by calibrated score descending (stable), and truncated to `total_keep`.
pub fn scan(img: &GrayImage, model: &ObjectnessModel, params: &ScanParams) -> Vec<Proposal> {
    let buckets = scan_windows(img, model, params);
    let mut props: Vec<Proposal> = Vec::new();
    for bucket in &buckets {
        for w in bucket {
            props.push(Proposal::new(w.rect, model.calibrate(w.size_index, w.raw_score), ProposalSource::Coarse));
        }
    }
    props.sort_by(|a, b| b.score.total_cmp(&a.score));
    props.truncate(params.total_keep);
    props
}
