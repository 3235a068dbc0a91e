//! Shared fixtures for the kernel benchmarks.

use fissura::{Field, Grid, SymTensor2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic batch of symmetric tensors with entries in `(-scale, scale)`.
pub fn strain_batch(seed: u64, count: usize, scale: f64) -> Vec<SymTensor2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| SymTensor2 {
            xx: rng.gen_range(-scale..scale),
            yy: rng.gen_range(-scale..scale),
            xy: rng.gen_range(-scale..scale),
        })
        .collect()
}

/// Smoothly varying displacement/phase pair on an `n x n` unit square, the
/// kind of state the energy assembly sees mid-solve.
pub fn solver_state(n: usize) -> (Field, Field) {
    let grid = Grid::unit_square(n);
    let u = Field::from_fn_vector(grid, |x| {
        [
            0.1 * x[0] + 0.03 * (6.0 * x[1]).sin(),
            -0.05 * x[1] + 0.02 * (5.0 * x[0]).cos(),
        ]
    });
    let v = Field::from_fn_scalar(grid, |x| {
        1.0 - 0.8 * (-((x[1] - 0.5) / 0.1).powi(2)).exp()
    });
    (u, v)
}
