//! Coarse window scoring: 64-dim normed-gradient features over quantized
//! window sizes, a binarized linear filter evaluated with bitwise AND and
//! popcount, per-size calibration, and a simplified trainer.

mod binarize;
mod io;
mod scan;
mod train;

pub use binarize::{binarize_weights, reconstruct_weights};
pub use io::{load_model, read_model, save_model, write_model};
pub use scan::{scan, scan_windows, ScanParams, ScanWindow};
pub use train::{default_sizes, train_simple, TrainImage, TrainParams};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::raster::{gradients, GrayImage};

/// 8x8 window of gradient magnitudes, read row-major, one byte per cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NgFeature(pub [u8; 64]);

/// Bit decomposition of an [`NgFeature`]: `planes[k]` collects bit `7 - k`
/// of every cell, so the feature value is `sum_k 2^(7-k) * plane_k`.
///
/// Cell `i` (row-major) maps to word bit `8 * (7 - i/8) + (7 - i%8)`; the
/// sliding-window scan produces words in the same layout incrementally.
#[derive(Clone, Copy, Debug)]
pub struct BitPlanes {
    pub planes: [u64; 8],
}

#[inline]
pub(crate) fn cell_bit(i: usize) -> u32 {
    (8 * (7 - i / 8) + (7 - i % 8)) as u32
}

impl BitPlanes {
    pub fn from_feature(feat: &NgFeature) -> Self {
        let mut planes = [0u64; 8];
        for (i, &v) in feat.0.iter().enumerate() {
            let bit = cell_bit(i);
            for (k, plane) in planes.iter_mut().enumerate() {
                if v >> (7 - k) & 1 == 1 {
                    *plane |= 1 << bit;
                }
            }
        }
        Self { planes }
    }
}

/// One term of the binary basis approximation: the positive-bit word
/// `a_plus` encodes a +/-1 pattern (`a = 2 * bits - 1`) weighted by `beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisVector {
    pub a_plus: u64,
    pub beta: f64,
}

/// Learned filter plus everything needed to score and rank windows: the
/// binary basis approximation of the filter, the number of retained feature
/// bit planes, the quantized window sizes, and per-size affine calibration.
#[derive(Clone, Debug)]
pub struct ObjectnessModel {
    /// 64 filter weights, one per NG cell.
    pub w: Vec<f64>,
    pub basis: Vec<BasisVector>,
    /// Feature bit planes used by the fast score, in `1..=8`.
    pub n_g: usize,
    /// Quantized `(width, height)` scan sizes.
    pub sizes: Vec<(u32, u32)>,
    /// Per-size `(v, t)` calibration, parallel to `sizes`.
    pub calib: Vec<(f64, f64)>,
}

impl ObjectnessModel {
    /// Builds a model from raw weights, fitting the binary basis greedily.
    /// Calibration starts as the identity `(1, 0)` for every size.
    pub fn from_weights(w: &[f64], n_w: usize, n_g: usize, sizes: Vec<(u32, u32)>) -> Self {
        let calib = vec![(1.0, 0.0); sizes.len()];
        Self { w: w.to_vec(), basis: binarize_weights(w, n_w), n_g, sizes, calib }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::MalformedModelFile(m.to_string()));
        if self.w.len() != 64 {
            return fail("w must have 64 entries");
        }
        if self.basis.is_empty() {
            return fail("basis must be non-empty");
        }
        if !(1..=8).contains(&self.n_g) {
            return fail("n_g must be in 1..=8");
        }
        if self.sizes.is_empty() {
            return fail("sizes must be non-empty");
        }
        if self.sizes.iter().any(|&(w, h)| w == 0 || h == 0) {
            return fail("sizes must be positive");
        }
        if self.calib.len() != self.sizes.len() {
            return fail("calib must be parallel to sizes");
        }
        if self.w.iter().any(|v| !v.is_finite())
            || self.basis.iter().any(|b| !b.beta.is_finite())
            || self.calib.iter().any(|c| !c.0.is_finite() || !c.1.is_finite())
        {
            return fail("weights must be finite");
        }
        Ok(())
    }

    /// Calibrated objectness score `c = v_i * s + t_i`.
    pub fn calibrate(&self, size_index: usize, raw: f64) -> f64 {
        let (v, t) = self.calib[size_index];
        v * raw + t
    }
}

/// Full-precision filter response `<w, g>`.
pub fn score_exact(model: &ObjectnessModel, feat: &NgFeature) -> f64 {
    model.w.iter().zip(feat.0.iter()).map(|(&w, &g)| w * g as f64).sum()
}

/// Approximate filter response from the top `n_g` bit planes, computed with
/// word-level AND and popcount only:
/// `sum_j beta_j sum_k 2^(7-k) (2 popcount(a_j & b_k) - popcount(b_k))`.
pub fn score_fast(model: &ObjectnessModel, planes: &BitPlanes) -> f64 {
    fast_score_words(&model.basis, &planes.planes[..model.n_g])
}

#[inline]
pub(crate) fn fast_score_words(basis: &[BasisVector], planes: &[u64]) -> f64 {
    let mut score = 0.0;
    for b in basis {
        let mut acc: i64 = 0;
        for (k, &plane) in planes.iter().enumerate() {
            let and = (b.a_plus & plane).count_ones() as i64;
            let tot = plane.count_ones() as i64;
            acc += (128 >> k) * (2 * and - tot);
        }
        score += b.beta * acc as f64;
    }
    score
}

/// Per-image gradient-magnitude plane with window resampling, so repeated
/// feature extraction does not recompute gradients.
pub struct NgExtractor {
    width: usize,
    height: usize,
    mag: Vec<f32>,
}

impl NgExtractor {
    pub fn new(img: &GrayImage) -> Self {
        let g = gradients(img);
        Self { width: img.width(), height: img.height(), mag: g.mag }
    }

    /// Area-averages the window's magnitude content into the 64 cells of the
    /// 8x8 grid and rounds to bytes. Each cell integrates the magnitude
    /// plane (piecewise constant per pixel) over its sub-rectangle, so
    /// narrow gradient ridges inside the window always contribute.
    pub fn extract(&self, window: &Rect) -> Result<NgFeature> {
        let frame = Rect::new(0.0, 0.0, self.width as f64, self.height as f64);
        let win = window.clip(&frame).ok_or(Error::EmptyIntersection)?;
        let dx = win.width() / 8.0;
        let dy = win.height() / 8.0;
        let mut out = [0u8; 64];
        let mut xw: [Vec<(usize, f64)>; 8] = Default::default();
        for (c, slot) in xw.iter_mut().enumerate() {
            *slot = axis_coverage(win.x1 + c as f64 * dx, win.x1 + (c + 1) as f64 * dx, self.width);
        }
        for r in 0..8 {
            let yw = axis_coverage(win.y1 + r as f64 * dy, win.y1 + (r + 1) as f64 * dy, self.height);
            for (c, xs) in xw.iter().enumerate() {
                let mut acc = 0f64;
                let mut total = 0f64;
                for &(py, wy) in &yw {
                    for &(px, wx) in xs {
                        acc += wx * wy * self.mag[py * self.width + px] as f64;
                        total += wx * wy;
                    }
                }
                out[r * 8 + c] = (acc / total).round().clamp(0.0, 255.0) as u8;
            }
        }
        Ok(NgFeature(out))
    }
}

/// Pixel indices of `[a, b]` with their coverage lengths; a degenerate span
/// falls back to the single pixel containing it.
fn axis_coverage(a: f64, b: f64, limit: usize) -> Vec<(usize, f64)> {
    let last = limit - 1;
    if b - a <= f64::EPSILON {
        return vec![(a.floor().clamp(0.0, last as f64) as usize, 1.0)];
    }
    let lo = a.floor().max(0.0) as usize;
    let hi = (b.ceil() as usize).min(limit);
    (lo..hi.max(lo + 1))
        .map(|p| {
            let cover = (b.min(p as f64 + 1.0) - a.max(p as f64)).max(0.0);
            (p.min(last), cover)
        })
        .collect()
}

/// Convenience wrapper over [`NgExtractor`] for one-off extraction.
pub fn extract_ng(img: &GrayImage, window: &Rect) -> Result<NgFeature> {
    NgExtractor::new(img).extract(window)
}
