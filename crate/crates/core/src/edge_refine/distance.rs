//! Exact squared Euclidean distance transform with nearest-point
//! propagation.
//!
//! Two separable passes: a per-row scan finds the nearest edge column within
//! each row, then a per-column lower-envelope pass minimizes over rows.
//! Squared distances are exact integers. When several edge pixels are
//! equidistant the reported nearest point is the one with the smaller `y`,
//! then the smaller `x`: the envelope pass resolves row ties toward the
//! smaller row (exact at integer tie points), and the row pass prefers the
//! left candidate.

use crate::error::{Error, Result};
use crate::raster::EdgeMap;

/// Per-pixel coordinates of the closest edge pixel plus the exact squared
/// Euclidean distance to it. `sqdist` is zero exactly at edge pixels.
#[derive(Clone, Debug)]
pub struct NearestEdgeMap {
    width: usize,
    height: usize,
    nearest_x: Vec<u32>,
    nearest_y: Vec<u32>,
    sqdist: Vec<u64>,
}

impl NearestEdgeMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn nearest(&self, x: usize, y: usize) -> (u32, u32) {
        let i = y * self.width + x;
        (self.nearest_x[i], self.nearest_y[i])
    }

    /// Row-contiguous views of the nearest-point planes, for bulk scans.
    #[inline]
    pub(crate) fn planes(&self) -> (&[u32], &[u32]) {
        (&self.nearest_x, &self.nearest_y)
    }

    #[inline]
    pub fn sqdist(&self, x: usize, y: usize) -> u64 {
        self.sqdist[y * self.width + x]
    }
}

/// Builds the nearest-edge map. Errors when the mask has no edge pixels.
pub fn distance_transform(edges: &EdgeMap) -> Result<NearestEdgeMap> {
    let (w, h) = (edges.width(), edges.height());
    if !edges.mask().iter().any(|&b| b) {
        return Err(Error::EmptyEdgeMap);
    }

    // Pass 1: nearest edge column within each row (u32::MAX when the row is
    // empty). Ties between equidistant left/right candidates go left.
    let mut row_nearest = vec![u32::MAX; w * h];
    for y in 0..h {
        let base = y * w;
        let mut last: Option<usize> = None;
        for x in 0..w {
            if edges.is_edge(x, y) {
                last = Some(x);
            }
            if let Some(e) = last {
                row_nearest[base + x] = e as u32;
            }
        }
        let mut next: Option<usize> = None;
        for x in (0..w).rev() {
            if edges.is_edge(x, y) {
                next = Some(x);
            }
            if let Some(e) = next {
                let cur = row_nearest[base + x];
                let right = (e - x) as u64;
                if cur == u32::MAX || right < (x as u64 - cur as u64) {
                    row_nearest[base + x] = e as u32;
                }
            }
        }
    }

    // Pass 2: per column, lower envelope of parabolas rooted at rows with a
    // horizontal distance, minimizing (y - y')^2 + rowdist(y')^2.
    let mut nearest_x = vec![0u32; w * h];
    let mut nearest_y = vec![0u32; w * h];
    let mut sqdist = vec![0u64; w * h];
    let mut roots: Vec<usize> = Vec::with_capacity(h);
    let mut values: Vec<u64> = Vec::with_capacity(h);
    let mut bounds: Vec<f64> = vec![0.0; h + 1];

    for x in 0..w {
        roots.clear();
        values.clear();
        for y in 0..h {
            let rn = row_nearest[y * w + x];
            if rn == u32::MAX {
                continue;
            }
            let d = rn as i64 - x as i64;
            let f = (d * d) as u64;
            if roots.is_empty() {
                roots.push(y);
                values.push(f);
                bounds[0] = f64::NEG_INFINITY;
                bounds[1] = f64::INFINITY;
                continue;
            }
            let mut k = roots.len() - 1;
            let mut s = intersection(roots[k], values[k], y, f);
            // strict pop keeps the earlier (smaller-row) parabola at exact ties
            while s < bounds[k] {
                roots.pop();
                values.pop();
                k -= 1;
                s = intersection(roots[k], values[k], y, f);
            }
            roots.push(y);
            values.push(f);
            bounds[roots.len() - 1] = s;
            bounds[roots.len()] = f64::INFINITY;
        }

        let mut k = 0;
        for y in 0..h {
            while bounds[k + 1] < y as f64 {
                k += 1;
            }
            let ry = roots[k];
            let dy = y as i64 - ry as i64;
            let i = y * w + x;
            sqdist[i] = (dy * dy) as u64 + values[k];
            nearest_x[i] = row_nearest[ry * w + x];
            nearest_y[i] = ry as u32;
        }
    }

    Ok(NearestEdgeMap { width: w, height: h, nearest_x, nearest_y, sqdist })
}

/// Crossover point of the parabolas rooted at `(p, fp)` and `(q, fq)`.
/// Integer quotients (exact ties) divide exactly in f64.
#[inline]
fn intersection(p: usize, fp: u64, q: usize, fq: u64) -> f64 {
    let p = p as f64;
    let q = q as f64;
    ((fq as f64 + q * q) - (fp as f64 + p * p)) / (2.0 * (q - p))
}
