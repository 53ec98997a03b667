//! Deterministic synthetic scenes: non-overlapping filled rectangles with
//! strong color contrast on a lightly textured background, with exact
//! ground-truth boxes. The desk-scale substrate for end-to-end evaluation.

use super::GroundTruth;
use crate::geometry::Rect;
use crate::raster::ColorImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Object side length range, pixels.
    pub min_side: usize,
    pub max_side: usize,
    /// Minimum gap between objects and to the image border.
    pub margin: usize,
    /// Background intensity noise amplitude.
    pub noise: i16,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { width: 640, height: 480, min_side: 40, max_side: 140, margin: 14, noise: 8 }
    }
}

// Dark saturated hues on a light background: distinct in RGB for the
// segmentation stage, and all with a luma gap above 150 so the gradient and
// edge paths see strong boundaries even after downscaling.
const PALETTE: [(&str, [u8; 3]); 6] = [
    ("red", [120, 15, 15]),
    ("green", [15, 70, 20]),
    ("blue", [25, 35, 150]),
    ("navy", [15, 15, 70]),
    ("magenta", [95, 15, 95]),
    ("teal", [15, 60, 70]),
];

/// Generates one scene. Identical `(seed, n_objects, params)` always produce
/// identical pixels and ground truths.
pub fn synth_scene(seed: u64, n_objects: usize, params: &SynthParams) -> (ColorImage, Vec<GroundTruth>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width, params.height);

    // lightly textured light-gray background
    let base: [i16; 3] = [201, 203, 199];
    let mut data = Vec::with_capacity(3 * w * h);
    for _ in 0..w * h {
        let n = rng.gen_range(-params.noise..=params.noise);
        for c in base {
            data.push((c + n).clamp(0, 255) as u8);
        }
    }
    let mut img = ColorImage::new(w, h, data);

    // rejection-sampled placement; sides shrink after repeated failures so
    // crowded scenes still place every object
    let mut placed: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut gts = Vec::new();
    for _ in 0..n_objects {
        let mut max_side = params.max_side.min(w / 2).min(h / 2);
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts % 200 == 0 && max_side > params.min_side + 8 {
                max_side -= 8;
            }
            let side_w = rng.gen_range(params.min_side..=max_side);
            let side_h = rng.gen_range(params.min_side..=max_side);
            if w < side_w + 2 * params.margin || h < side_h + 2 * params.margin {
                continue;
            }
            let x0 = rng.gen_range(params.margin..=w - side_w - params.margin);
            let y0 = rng.gen_range(params.margin..=h - side_h - params.margin);
            let gap = params.margin;
            let clear = placed.iter().all(|&(px, py, pw, ph)| {
                x0 + side_w + gap <= px || px + pw + gap <= x0 || y0 + side_h + gap <= py || py + ph + gap <= y0
            });
            if !clear {
                continue;
            }
            let (class_name, color) = PALETTE[rng.gen_range(0..PALETTE.len())];
            fill_rect(&mut img, x0, y0, side_w, side_h, color);
            placed.push((x0, y0, side_w, side_h));
            gts.push(GroundTruth {
                image_id: format!("scene{seed:05}"),
                class_name: class_name.to_string(),
                rect: Rect::new(x0 as f64, y0 as f64, (x0 + side_w) as f64, (y0 + side_h) as f64),
                difficult: false,
            });
            break;
        }
    }
    (img, gts)
}

fn fill_rect(img: &mut ColorImage, x0: usize, y0: usize, w: usize, h: usize, color: [u8; 3]) {
    let iw = img.width();
    let data = img.data_mut();
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            let i = 3 * (y * iw + x);
            data[i..i + 3].copy_from_slice(&color);
        }
    }
}
