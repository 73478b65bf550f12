//! Fixtures shared by the benchmarks.

use discode_core::lsa::TermDocMatrix;
use discode_core::synthetic::{planted_corpus, PlantedCorpus, PlantedSpec};
use discode_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn planted(docs: usize, seed: u64) -> PlantedCorpus {
    planted_corpus(&PlantedSpec {
        docs,
        seed,
        ..Default::default()
    })
}

/// Sparse non-negative count matrix with roughly `density` of its cells filled.
pub fn random_counts(rows: usize, cols: usize, density: f64, seed: u64) -> TermDocMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.random_bool(density) {
                m.row_mut(r)[c] = rng.random_range(1..=4) as f64;
            }
        }
    }
    TermDocMatrix::from_dense(&m)
}
