//! Shared fixtures for the criterion benchmarks.

use efbv_core::problems::{partition, synth_dataset};
use efbv_core::{DenseVector, DetRng, ProblemSpec};

/// A reproducible dense vector with Gaussian entries.
pub fn gaussian_vector(d: usize, seed: u64) -> DenseVector {
    let mut rng = DetRng::from_key(&[seed]);
    DenseVector::from_vec((0..d).map(|_| rng.next_normal()).collect())
}

/// A strongly convex synthetic problem split over `n` workers.
pub fn bench_problem(d: usize, rows: usize, n: usize) -> ProblemSpec {
    let data = synth_dataset(42, d, rows, 0.5).expect("synthetic dataset");
    let shards = partition(&data, n, 1, 42).expect("partition");
    ProblemSpec::convex(data, shards, 0.1)
}
