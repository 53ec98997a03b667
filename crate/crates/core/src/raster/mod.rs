//! Image representation, decoding, grayscale conversion, resizing, gradients,
//! and Canny edge detection: everything upstream of feature extraction.
//!
//! Resampling uses bilinear interpolation with half-pixel-center sampling:
//! output pixel `i` reads source coordinate `(i + 0.5) * scale - 0.5`. The
//! same convention is used everywhere a window or image is resampled.

mod canny;
mod codec;
mod gradient;

pub use canny::{canny, CannyParams, EdgeMap};
pub use codec::{decode_image, encode_pgm, encode_ppm};
pub use gradient::{gradients, GradientMap};

pub(crate) use gradient::magnitude_u8;

use crate::error::{Error, Result};

/// Single-channel 8-bit image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        assert_eq!(data.len(), width * height, "data length must be width * height");
        Self { width, height, data }
    }

    pub fn constant(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Bilinear resize to exactly `(new_w, new_h)`.
    pub fn resize(&self, new_w: usize, new_h: usize) -> Result<GrayImage> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::ZeroDimension);
        }
        let out = resample_plane(&self.data, self.width, self.height, 1, new_w, new_h);
        Ok(GrayImage::new(new_w, new_h, quantize(&out)))
    }
}

/// Interleaved 8-bit RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        assert_eq!(data.len(), 3 * width * height, "data length must be 3 * width * height");
        Self { width, height, data }
    }

    pub fn constant(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * width * height);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn resize(&self, new_w: usize, new_h: usize) -> Result<ColorImage> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::ZeroDimension);
        }
        let out = resample_plane(&self.data, self.width, self.height, 3, new_w, new_h);
        Ok(ColorImage::new(new_w, new_h, quantize(&out)))
    }
}

/// ITU-R 601 luma: `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_gray(img: &ColorImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * px[0] as f32 + 0.587 * px[1] as f32 + 0.114 * px[2] as f32;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(img.width, img.height, data)
}

fn quantize(v: &[f32]) -> Vec<u8> {
    v.iter().map(|&x| x.round().clamp(0.0, 255.0) as u8).collect()
}

/// Per-axis source index pair and interpolation weight for half-pixel-center
/// bilinear sampling.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

/// Separable bilinear resample of an interleaved multi-channel plane.
pub(crate) fn resample_plane(
    data: &[u8],
    src_w: usize,
    src_h: usize,
    channels: usize,
    dst_w: usize,
    dst_h: usize,
) -> Vec<f32> {
    let xs = axis_taps(src_w, dst_w);
    let ys = axis_taps(src_h, dst_h);

    // horizontal pass
    let mut mid = vec![0f32; dst_w * src_h * channels];
    for y in 0..src_h {
        let row = &data[y * src_w * channels..(y + 1) * src_w * channels];
        let out = &mut mid[y * dst_w * channels..(y + 1) * dst_w * channels];
        for (xo, &(x0, x1, fx)) in xs.iter().enumerate() {
            for c in 0..channels {
                let a = row[x0 * channels + c] as f32;
                let b = row[x1 * channels + c] as f32;
                out[xo * channels + c] = a + (b - a) * fx;
            }
        }
    }

    // vertical pass
    let mut out = vec![0f32; dst_w * dst_h * channels];
    for (yo, &(y0, y1, fy)) in ys.iter().enumerate() {
        let top = &mid[y0 * dst_w * channels..(y0 + 1) * dst_w * channels];
        let bot = &mid[y1 * dst_w * channels..(y1 + 1) * dst_w * channels];
        let dst = &mut out[yo * dst_w * channels..(yo + 1) * dst_w * channels];
        for i in 0..dst_w * channels {
            dst[i] = top[i] + (bot[i] - top[i]) * fy;
        }
    }
    out
}
