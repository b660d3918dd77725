//! Fixtures shared by the benchmarks.

use std::path::Path;

use bcs_core::{read_pgm, GrayImage};

/// Loads a corpus image, falling back to a synthetic 512x512 scene when the
/// corpus is not present.
pub fn corpus_image(name: &str) -> GrayImage {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.pgm"));
    match std::fs::read(&path) {
        Ok(bytes) => read_pgm(&bytes).expect("corpus image"),
        Err(_) => synthetic(512, 512),
    }
}

pub fn synthetic(width: usize, height: usize) -> GrayImage {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let px = (0..width * height)
        .map(|i| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            let smooth = 128.0 + 60.0 * (x / 37.0).sin() * (y / 53.0).cos();
            (smooth + (state % 16) as f64).clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, px).expect("synthetic image")
}
