//! Benchmark-only crate; see `benches/core.rs`. Shared helpers live here so
//! the bench target stays focused on measurement loops.

use hilladam::{ImageBuffer, MlpWeights};

/// A deterministic 64x64 test image with all three channels varying.
pub fn sample_image() -> ImageBuffer {
    let mut px = Vec::with_capacity(64 * 64 * 3);
    for y in 0..64u32 {
        for x in 0..64u32 {
            px.extend_from_slice(&[
                (180 + x % 40) as u8,
                (120 + y % 40) as u8,
                (40 + x % 32) as u8,
            ]);
        }
    }
    ImageBuffer::new(64, 64, px).unwrap()
}

/// Weights plus their flat view for the network benchmarks.
pub fn sample_weights() -> (MlpWeights, Vec<f64>) {
    let w = hilladam::init_weights(42);
    let flat = w.flatten();
    (w, flat)
}
