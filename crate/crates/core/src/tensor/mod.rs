//! Dense linear algebra, seeded randomness, and Monte-Carlo oracles.

mod io;
mod matrix;
mod oracle;
mod rng;
mod svd;
mod vector;

pub use io::{Tensor, MAGIC as TNSR_MAGIC};
pub use matrix::Matrix;
pub use oracle::{
    mc_covariance_oracle, mc_frobenius_oracle, psd_square_root_factor, McEstimate, RunningStats,
};
pub use rng::{gaussian_vector, RandomSource};
pub use svd::{svd, symmetric_eigen, Svd, SymmetricEigen};
pub use vector::Vector;

/// Random matrix with i.i.d. N(0, sigma²) entries.
pub fn gaussian_matrix(rng: &mut RandomSource, rows: usize, cols: usize, sigma: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = sigma * rng.normal();
    }
    m
}

/// Haar-distributed-ish orthogonal matrix from the left singular vectors of a
/// Gaussian matrix.
pub fn random_orthogonal(rng: &mut RandomSource, n: usize) -> Matrix {
    let g = gaussian_matrix(rng, n, n, 1.0);
    svd(&g).expect("gaussian matrix is finite").u
}
