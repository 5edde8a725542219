//! Regenerates the checked-in test images under `fixtures/`.
//!
//! The patterns are tiny arithmetic gradients chosen so every channel mean
//! is exact in f64 (sums of small integers over a 64x64 grid), which keeps
//! the color-transfer targets reproducible from first principles.

use hilladam::{save_image, ImageBuffer};
use std::path::Path;

fn build(f: impl Fn(u32, u32) -> (u8, u8, u8)) -> ImageBuffer {
    let mut px = Vec::with_capacity(64 * 64 * 3);
    for y in 0..64 {
        for x in 0..64 {
            let (r, g, b) = f(x, y);
            px.extend_from_slice(&[r, g, b]);
        }
    }
    ImageBuffer::new(64, 64, px).unwrap()
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::create_dir_all(&root).unwrap();

    let amber = build(|x, y| {
        (
            (180 + x % 40) as u8,
            (120 + y % 40) as u8,
            (40 + x % 32) as u8,
        )
    });
    let blue = build(|x, y| {
        (
            (40 + x % 32) as u8,
            (100 + y % 40) as u8,
            (70 + x % 40) as u8,
        )
    });

    for (name, img) in [("amber.ppm", &amber), ("blue.ppm", &blue)] {
        let path = root.join(name);
        std::fs::write(&path, save_image(img)).unwrap();
        println!("wrote {}", path.display());
    }
}
