//! Seeded random inputs for probes, training sets and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dominated_linear::PairingFamily;
use crate::error::Result;
use crate::lattice::LatticeSpec;
use crate::vector_norms::VectorFamily;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1]`, each zeroed with probability `sparsity`.
pub fn vector(rng: &mut ChaCha8Rng, dim: usize, sparsity: f64) -> Vec<f64> {
    (0..dim).map(|_| if rng.gen_bool(sparsity) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect()
}

/// `count` tuples `(x_1, ..., x_m)` on the given domains.
pub fn tuples(domains: &[LatticeSpec], count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut r = rng(seed);
    (0..count).map(|_| domains.iter().map(|d| vector(&mut r, d.dim(), 0.15)).collect()).collect()
}

/// A family of `1..=n_max` vectors of length `dim`.
pub fn family(rng: &mut ChaCha8Rng, n_max: usize, dim: usize) -> Result<VectorFamily> {
    let n = rng.gen_range(1..=n_max.max(1));
    VectorFamily::new((0..n).map(|_| vector(rng, dim, 0.15)).collect())
}

/// Pairs of families in `X` (length `dx`) and `Y'` (length `dy`).
pub fn pairing_families(dx: usize, dy: usize, count: usize, n_max: usize, seed: u64) -> Result<Vec<PairingFamily>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.gen_range(1..=n_max.max(1));
            let xs = VectorFamily::new((0..n).map(|_| vector(&mut r, dx, 0.15)).collect())?;
            let ys = VectorFamily::new((0..n).map(|_| vector(&mut r, dy, 0.15)).collect())?;
            PairingFamily::new(xs, ys)
        })
        .collect()
}

/// A family of `1..=n_max` tuples on the given domains.
pub fn tuple_family(rng: &mut ChaCha8Rng, domains: &[LatticeSpec], n_max: usize) -> Vec<Vec<Vec<f64>>> {
    let n = rng.gen_range(1..=n_max.max(1));
    (0..n).map(|_| domains.iter().map(|d| vector(rng, d.dim(), 0.15)).collect()).collect()
}
