//! Shared fixtures for the criterion benchmarks.

use surfdraw_core::suite::Shape;
use surfdraw_core::{StrokeSet2D, SurfaceModel};

/// Built-in case sampled with a fixed seed.
pub fn fixture(shape: Shape, samples: usize) -> (SurfaceModel, StrokeSet2D) {
    let surface = SurfaceModel::from_mesh(shape.mesh().expect("built-in mesh"), samples, 0).expect("sampling");
    (surface, shape.strokes().expect("built-in strokes"))
}

/// Deterministic pseudo-random points in a cube of side `side`.
pub fn cloud(n: usize, side: f64) -> Vec<[f64; 3]> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n).map(|_| [(next() - 0.5) * side, (next() - 0.5) * side, (next() - 0.5) * side]).collect()
}
