//! Classical Canny edge detection: Gaussian smoothing, gradient,
//! non-maximum suppression along the gradient direction, and
//! double-threshold hysteresis.

use super::gradient::gradients_of_plane;
use super::GrayImage;

/// Detector parameters. Thresholds apply to the clamped L1 gradient
/// magnitude of the smoothed image.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CannyParams {
    pub sigma: f32,
    pub low: f32,
    pub high: f32,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self { sigma: 1.0, low: 50.0, high: 100.0 }
    }
}

/// Boolean edge mask, true at retained edge pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), width * height);
        Self { width, height, mask }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn edge_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

fn gaussian_kernel(sigma: f32) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let sigma = sigma as f64;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamped borders, quantized back to bytes so
/// downstream magnitude comparisons work on exact integers (shifting all
/// intensities by a constant shifts the smoothed bytes by the same constant).
fn smooth(img: &GrayImage, sigma: f32) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let kernel = gaussian_kernel(sigma);
    let radius = kernel.len() / 2;
    let data = img.data();

    let mut mid = vec![0f64; w * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        let out = &mut mid[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0f64;
            if x >= radius && x + radius < w {
                for (i, &kv) in kernel.iter().enumerate() {
                    acc += row[x - radius + i] as f64 * kv;
                }
            } else {
                for (i, &kv) in kernel.iter().enumerate() {
                    acc += row[(x + i).saturating_sub(radius).min(w - 1)] as f64 * kv;
                }
            }
            *o = acc;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let interior = y >= radius && y + radius < h;
        for x in 0..w {
            let mut acc = 0f64;
            if interior {
                for (i, &kv) in kernel.iter().enumerate() {
                    acc += mid[(y - radius + i) * w + x] * kv;
                }
            } else {
                for (i, &kv) in kernel.iter().enumerate() {
                    acc += mid[(y + i).saturating_sub(radius).min(h - 1) * w + x] * kv;
                }
            }
            out[y * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Runs the full detector. `params.low <= params.high` is required.
pub fn canny(img: &GrayImage, params: &CannyParams) -> EdgeMap {
    assert!(
        0.0 <= params.low && params.low <= params.high,
        "thresholds must satisfy 0 <= low <= high"
    );
    let (w, h) = (img.width(), img.height());
    let smoothed: Vec<f32> = smooth(img, params.sigma).iter().map(|&v| v as f32).collect();
    let g = gradients_of_plane(&smoothed, w, h);

    // Non-maximum suppression: keep a pixel only if its magnitude is a local
    // maximum along the gradient direction. The strict test against the
    // `prev` neighbor thins two-pixel plateaus to a single line.
    let mut thin = vec![0f32; w * h];
    if w >= 3 && h >= 3 {
        let t = std::f32::consts::FRAC_PI_8.tan(); // 22.5 degree sector boundary
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let i = y * w + x;
                let m = g.mag[i];
                if m < params.low {
                    continue;
                }
                let (ax, ay) = (g.gx[i].abs(), g.gy[i].abs());
                // (prev, next) ordered by (dy, dx) so thinning is deterministic
                let (prev, next) = if ay <= t * ax {
                    (g.mag[i - 1], g.mag[i + 1])
                } else if ax <= t * ay {
                    (g.mag[i - w], g.mag[i + w])
                } else if (g.gx[i] >= 0.0) == (g.gy[i] >= 0.0) {
                    (g.mag[i - w - 1], g.mag[i + w + 1])
                } else {
                    (g.mag[i - w + 1], g.mag[i + w - 1])
                };
                if m > prev && m >= next {
                    thin[i] = m;
                }
            }
        }
    }

    // Hysteresis: strong pixels seed a flood fill across weak neighbors.
    let mut mask = vec![false; w * h];
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] >= params.high && !mask[i] {
            mask[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (x, y) = (j % w, j / w);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let n = ny as usize * w + nx as usize;
                        if !mask[n] && thin[n] >= params.low {
                            mask[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    EdgeMap::new(w, h, mask)
}
