//! Hermitian eigendecomposition and spectral matrix functions.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::tolerance::Tolerances;

const MAX_SWEEPS: usize = 100_000;

/// Spectral decomposition `V diag(λ) V^H` of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; column phases are whatever the
/// solver produced.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    /// Smallest difference between consecutive sorted eigenvalues
    /// (infinite for a 1x1 matrix).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// `V diag(f(λ)) V^H`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &lk) in fl.iter().enumerate() {
                    acc += v[(i, k)] * v[(j, k)].conj() * lk;
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|l| l)
    }

    /// ‖V^H V − I‖_F.
    pub fn orthonormality_residual(&self) -> f64 {
        let v = &self.eigenvectors;
        v.adjoint().matmul(v).distance(&ComplexMatrix::identity(self.dim()))
    }
}

/// Eigendecomposition of a Hermitian matrix, using the default Hermiticity
/// tolerance.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<EigenDecomposition> {
    hermitian_eig_with(h, Tolerances::default().herm)
}

/// Eigendecomposition of a matrix Hermitian to within `herm_tol`
/// (max entrywise |H − H^H|). The Hermitian part is what gets decomposed.
pub fn hermitian_eig_with(h: &ComplexMatrix, herm_tol: f64) -> Result<EigenDecomposition> {
    if !h.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", h.rows(), h.cols())));
    }
    let residual = h.hermiticity_residual();
    if !(residual <= herm_tol) {
        return Err(Error::NotHermitian { residual });
    }
    let n = h.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = h.hermitian_part().to_nalgebra();
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Eigen(format!("no convergence for {n}x{n} input")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Natural logarithm of a positive definite Hermitian matrix.
///
/// Fails with [`Error::Singular`] when any eigenvalue is at or below `cutoff`.
pub fn matrix_log(h: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    log_of(&hermitian_eig(h)?, cutoff, "matrix")
}

pub(crate) fn log_of(eig: &EigenDecomposition, cutoff: f64, what: &str) -> Result<ComplexMatrix> {
    let min = eig.min_eigenvalue();
    if !(min > cutoff) {
        return Err(Error::Singular {
            what: what.to_owned(),
            eigenvalue: min,
            cutoff,
        });
    }
    Ok(eig.apply(f64::ln))
}

/// Exponential of a Hermitian matrix via its eigendecomposition.
pub fn matrix_exp(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(h)?.apply(f64::exp))
}

/// Inverse of a positive definite Hermitian matrix.
pub fn hermitian_inverse(h: &ComplexMatrix, cutoff: f64, what: &str) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let min = eig.min_eigenvalue();
    if !(min > cutoff) {
        return Err(Error::Singular {
            what: what.to_owned(),
            eigenvalue: min,
            cutoff,
        });
    }
    Ok(eig.apply(|l| 1.0 / l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_hermitian;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn diagonal_input_sorted_descending() {
        let eig = hermitian_eig(&ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn pauli_x() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let x = ComplexMatrix::from_row_major(2, 2, vec![zero, one, one, zero]).unwrap();
        let eig = hermitian_eig(&x).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((eig.eigenvalues[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        for seed in 0..20 {
            let h = random_hermitian(8, seed);
            let eig = hermitian_eig(&h).unwrap();
            assert!(eig.reconstruct().distance(&h) <= 1e-10);
            assert!(eig.orthonormality_residual() <= 1e-10);
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::zeros(2, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = matrix_log(&ComplexMatrix::identity(3), 1e-12).unwrap();
        assert!(l.max_abs() < 1e-15);
    }

    #[test]
    fn log_of_scaled_identity() {
        let l = matrix_log(&ComplexMatrix::identity(2).scale(E), 1e-12).unwrap();
        assert!(l.distance(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn log_of_diagonal() {
        let l = matrix_log(&ComplexMatrix::from_real_diagonal(&[2.0, 0.5]), 1e-12).unwrap();
        let expect = ComplexMatrix::from_real_diagonal(&[LN_2, -LN_2]);
        assert!(l.distance(&expect) < 1e-15);
    }

    #[test]
    fn log_rejects_singular() {
        let err = matrix_log(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), 1e-12).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn inverse_of_diagonal() {
        let inv = hermitian_inverse(&ComplexMatrix::from_real_diagonal(&[4.0, 0.5]), 1e-12, "m").unwrap();
        assert!(inv.distance(&ComplexMatrix::from_real_diagonal(&[0.25, 2.0])) < 1e-15);
    }
}
