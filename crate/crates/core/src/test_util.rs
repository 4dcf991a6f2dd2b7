use crate::density::DensityMatrix;
use crate::dims::SubsystemDims;
use crate::matrix::ComplexMatrix;
use crate::rng::{complex_gaussian, rng_from_seed};
use crate::states::random_density;

pub use crate::states::bell_state;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = rng_from_seed(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng))
}

pub fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
    random_matrix(n, n, seed).hermitian_part()
}

pub fn random_state(n: usize, rank: usize, seed: u64) -> DensityMatrix {
    random_density(&SubsystemDims::single(n), rank, seed).unwrap()
}
