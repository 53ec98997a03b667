//! Shared fixtures for the criterion benchmarks.

use boxprop_core::evaluation::{synth_scene, SynthParams};
use boxprop_core::objectness::ObjectnessModel;
use boxprop_core::ColorImage;

/// Hand-built center-surround template: positive border cells, negative
/// interior. Good enough to drive the scan and pipeline benches without a
/// training pass.
pub fn ring_model() -> ObjectnessModel {
    let mut w = vec![-0.5; 64];
    for r in 0..8 {
        for c in 0..8 {
            if r == 0 || r == 7 || c == 0 || c == 7 {
                w[r * 8 + c] = 1.0;
            }
        }
    }
    ObjectnessModel::from_weights(&w, 2, 4, boxprop_core::objectness::default_sizes())
}

/// Deterministic 640x480 benchmark scene.
pub fn bench_scene(seed: u64) -> ColorImage {
    synth_scene(seed, 5, &SynthParams::default()).0
}
