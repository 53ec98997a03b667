//! Image gradients and their clamped L1 magnitude.
//!
//! Derivatives are undivided central differences (`I[x+1] - I[x-1]`) in the
//! interior and one-sided differences at the borders, matching the byte-valued
//! normed-gradient convention: `mag = min(|gx| + |gy|, 255)`.

use super::GrayImage;

/// Signed gradient components plus the clamped L1 magnitude.
#[derive(Clone, Debug)]
pub struct GradientMap {
    width: usize,
    height: usize,
    pub gx: Vec<f32>,
    pub gy: Vec<f32>,
    pub mag: Vec<f32>,
}

impl GradientMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn mag_at(&self, x: usize, y: usize) -> f32 {
        self.mag[y * self.width + x]
    }
}

pub fn gradients(img: &GrayImage) -> GradientMap {
    let f: Vec<f32> = img.data().iter().map(|&v| v as f32).collect();
    gradients_of_plane(&f, img.width(), img.height())
}

/// Gradient of an arbitrary single-channel plane (used on smoothed data by
/// the edge detector).
pub(crate) fn gradients_of_plane(data: &[f32], width: usize, height: usize) -> GradientMap {
    let mut gx = vec![0f32; data.len()];
    let mut gy = vec![0f32; data.len()];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            let left = data[row + x.saturating_sub(1)];
            let right = data[row + (x + 1).min(width - 1)];
            gx[row + x] = right - left;
        }
    }
    for y in 0..height {
        let up = y.saturating_sub(1) * width;
        let down = (y + 1).min(height - 1) * width;
        for x in 0..width {
            gy[y * width + x] = data[down + x] - data[up + x];
        }
    }
    let mag = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| (a.abs() + b.abs()).min(255.0))
        .collect();
    GradientMap { width, height, gx, gy, mag }
}

/// Byte-valued magnitude plane, the fast path used by the window scan.
pub(crate) fn magnitude_u8(img: &GrayImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let d = img.data();
    let mut mag = vec![0u8; w * h];
    for y in 0..h {
        let row = y * w;
        let up = y.saturating_sub(1) * w;
        let down = (y + 1).min(h - 1) * w;
        for x in 0..w {
            let dx = (d[row + (x + 1).min(w - 1)] as i32 - d[row + x.saturating_sub(1)] as i32).abs();
            let dy = (d[down + x] as i32 - d[up + x] as i32).abs();
            mag[row + x] = (dx + dy).min(255) as u8;
        }
    }
    mag
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = gradients(&GrayImage::constant(6, 5, 77));
        assert!(g.gx.iter().all(|&v| v == 0.0));
        assert!(g.gy.iter().all(|&v| v == 0.0));
        assert!(g.mag.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_ramp_has_constant_interior_gradient() {
        // I(x, y) = 10 x; the two-pixel central difference spans 2 columns,
        // so the interior response is 2 * 10 = 20.
        let img = GrayImage::from_fn(8, 4, |x, _| (10 * x) as u8);
        let g = gradients(&img);
        for y in 0..4 {
            for x in 1..7 {
                assert_eq!(g.gx[y * 8 + x], 20.0);
                assert_eq!(g.gy[y * 8 + x], 0.0);
                assert_eq!(g.mag_at(x, y), 20.0);
            }
        }
    }

    #[test]
    fn step_edge_saturates_magnitude() {
        // contrast-255 vertical step: both straddling columns see |I[x+1] - I[x-1]| = 255
        let img = GrayImage::from_fn(8, 3, |x, _| if x < 4 { 0 } else { 255 });
        let g = gradients(&img);
        for y in 0..3 {
            assert_eq!(g.mag_at(3, y), 255.0);
            assert_eq!(g.mag_at(4, y), 255.0);
            assert_eq!(g.mag_at(1, y), 0.0);
            assert_eq!(g.mag_at(6, y), 0.0);
        }
    }

    /// Brute-force recomputation of the same difference scheme.
    #[test]
    fn matches_bruteforce_central_difference() {
        let img = GrayImage::from_fn(9, 7, |x, y| ((x * 37 + y * 11 + x * y) % 256) as u8);
        let g = gradients(&img);
        let u8mag = magnitude_u8(&img);
        let (w, h) = (img.width(), img.height());
        for y in 0..h {
            for x in 0..w {
                let xl = x.saturating_sub(1);
                let xr = (x + 1).min(w - 1);
                let yu = y.saturating_sub(1);
                let yd = (y + 1).min(h - 1);
                let dx = img.get(xr, y) as f32 - img.get(xl, y) as f32;
                let dy = img.get(x, yd) as f32 - img.get(x, yu) as f32;
                assert_eq!(g.gx[y * w + x], dx);
                assert_eq!(g.gy[y * w + x], dy);
                assert_eq!(g.mag_at(x, y), (dx.abs() + dy.abs()).min(255.0));
                assert_eq!(u8mag[y * w + x] as f32, g.mag_at(x, y));
            }
        }
    }

    #[test]
    fn invariant_mag_is_clamped_l1() {
        let img = GrayImage::from_fn(16, 16, |x, y| (((x * 97) ^ (y * 53)) % 256) as u8);
        let g = gradients(&img);
        for ((&gx, &gy), &m) in g.gx.iter().zip(&g.gy).zip(&g.mag) {
            assert_eq!(m, (gx.abs() + gy.abs()).min(255.0));
        }
    }
}
