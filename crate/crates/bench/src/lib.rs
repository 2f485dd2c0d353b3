//! Deterministic fixtures for the criterion benches in `benches/`.

use codesense::{BinaryMatrix, CompactSensingMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random matrix from a fixed seed.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> BinaryMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryMatrix::from_fn(rows, cols, |_, _| rng.random::<bool>())
}

/// Compact sensing matrix with `m = 2^q − 1` columns over length `p`.
pub fn sensing(p: usize, q: usize, seed: u64) -> CompactSensingMatrix {
    CompactSensingMatrix::build(&random_matrix(p - q, p, seed)).expect("valid parameters")
}

/// Seeded dense vector with entries in `[-1, 1)`.
pub fn random_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}
