//! Validated density matrices on labeled tensor-product spaces.

use crate::dims::SubsystemDims;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig_with, EigenDecomposition};
use crate::matrix::{ComplexMatrix, C64};
use crate::tolerance::Tolerances;

/// A Hermitian, positive semidefinite, unit-trace matrix together with the
/// residuals observed when it was validated.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: SubsystemDims,
    hermiticity_residual: f64,
    min_eigenvalue: f64,
    trace_deviation: f64,
}

/// Checks `m` against the density-matrix invariants and wraps it.
///
/// Hermiticity is checked first, then the trace, then positivity; the first
/// violated invariant is reported with its residual.
pub fn validate_density(m: ComplexMatrix, dims: SubsystemDims, tols: &Tolerances) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    if dims.total() != m.rows() {
        return Err(Error::Shape(format!(
            "subsystem dimensions {:?} multiply to {}, matrix is {}x{}",
            dims.dims(),
            dims.total(),
            m.rows(),
            m.cols()
        )));
    }
    let hermiticity_residual = m.hermiticity_residual();
    if !(hermiticity_residual <= tols.herm) {
        return Err(Error::NotHermitian {
            residual: hermiticity_residual,
        });
    }
    let trace_deviation = (m.trace().re - 1.0).abs();
    if !(trace_deviation <= tols.trace) {
        return Err(Error::TraceDeviation {
            deviation: trace_deviation,
        });
    }
    let eig = hermitian_eig_with(&m, tols.herm)?;
    let min_eigenvalue = eig.min_eigenvalue();
    if !(min_eigenvalue >= -tols.psd) {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityMatrix {
        matrix: m,
        dims,
        hermiticity_residual,
        min_eigenvalue,
        trace_deviation,
    })
}

impl DensityMatrix {
    /// Validates with default tolerances.
    pub fn new(m: ComplexMatrix, dims: SubsystemDims) -> Result<Self> {
        validate_density(m, dims, &Tolerances::default())
    }

    /// Records residuals without enforcing them. Used for operators that are
    /// density matrices by construction (marginals, tensor products).
    pub(crate) fn from_trusted(matrix: ComplexMatrix, dims: SubsystemDims) -> Self {
        let hermiticity_residual = matrix.hermiticity_residual();
        let trace_deviation = (matrix.trace().re - 1.0).abs();
        let min_eigenvalue = hermitian_eig_with(&matrix, f64::INFINITY)
            .map(|e| e.min_eigenvalue())
            .unwrap_or(f64::NAN);
        Self {
            matrix,
            dims,
            hermiticity_residual,
            min_eigenvalue,
            trace_deviation,
        }
    }

    /// |ψ><ψ| for a normalized copy of `psi`.
    pub fn pure(psi: &[C64], dims: SubsystemDims) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Usage("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        validate_density(ComplexMatrix::outer(&v), dims, &Tolerances::default())
    }

    /// I/n on the given layout.
    pub fn maximally_mixed(dims: SubsystemDims) -> Self {
        let n = dims.total();
        Self::from_trusted(ComplexMatrix::identity(n).scale(1.0 / n as f64), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.hermiticity_residual
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn trace_deviation(&self) -> f64 {
        self.trace_deviation
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        hermitian_eig_with(&self.matrix, f64::INFINITY)
    }

    /// Same operator under new subsystem labels.
    pub fn relabel<S: Into<String>>(&self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        Ok(Self {
            dims: self.dims.relabel(labels)?,
            ..self.clone()
        })
    }

    /// Tensor product, factors of `self` first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let dims = SubsystemDims::new(
            self.dims.labels().iter().chain(other.dims.labels()).cloned(),
            self.dims.dims().iter().chain(other.dims.dims()).copied(),
        )?;
        Ok(Self::from_trusted(self.matrix.kron(&other.matrix), dims))
    }

    /// Partial trace keeping the named subsystems, in their original order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        partial_trace(self, keep)
    }
}

/// Traces out every subsystem not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::Usage("partial trace must keep at least one subsystem".into()));
    }
    let mask = rho.dims.mask_of(keep)?;
    let kept_dims = rho.dims.restrict(&mask);
    let out = trace_out(&rho.matrix, &rho.dims, &mask);
    Ok(DensityMatrix::from_trusted(out, kept_dims))
}

/// Raw partial trace: keep the factors selected by `mask`.
pub(crate) fn trace_out(m: &ComplexMatrix, dims: &SubsystemDims, mask: &[bool]) -> ComplexMatrix {
    let kept = dims.restrict(mask).total();
    let split = dims.split_indices(mask);
    let mut out = ComplexMatrix::zeros(kept, kept);
    for (i, &(ki, ri)) in split.iter().enumerate() {
        for (j, &(kj, rj)) in split.iter().enumerate() {
            if ri == rj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    out
}

/// Embeds an operator on a subset of factors into the full space by
/// tensoring the identity on the missing factors, placing every factor at
/// its position in `full`.
pub fn lift(op: &ComplexMatrix, op_dims: &SubsystemDims, full: &SubsystemDims) -> Result<ComplexMatrix> {
    if op.rows() != op_dims.total() || !op.is_square() {
        return Err(Error::Shape("operator does not match its subsystem dimensions".into()));
    }
    for (label, &d) in op_dims.labels().iter().zip(op_dims.dims()) {
        let fd = full.dim_of(label)?;
        if fd != d {
            return Err(Error::Shape(format!(
                "subsystem `{label}` has dimension {d}, expected {fd}"
            )));
        }
    }
    // Reorder the operator's factors into the order they appear in `full`
    // so that the restricted flat index lines up with `op`'s own indexing.
    let order: Vec<usize> = full
        .labels()
        .iter()
        .filter_map(|l| op_dims.position(l).ok())
        .collect();
    let op = permute_factors(op, op_dims.dims(), &order);
    let mask: Vec<bool> = full
        .labels()
        .iter()
        .map(|l| op_dims.position(l).is_ok())
        .collect();
    let split = full.split_indices(&mask);
    let n = full.total();
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &(si, ri)) in split.iter().enumerate() {
        for (j, &(sj, rj)) in split.iter().enumerate() {
            if ri == rj {
                out[(i, j)] = op[(si, sj)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `order[k]` of the input becomes factor `k`
/// of the output.
pub(crate) fn permute_factors(m: &ComplexMatrix, dims: &[usize], order: &[usize]) -> ComplexMatrix {
    if order.iter().enumerate().all(|(k, &o)| k == o) {
        return m.clone();
    }
    let n = m.rows();
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    // map old flat index -> new flat index
    let mut map = vec![0usize; n];
    let mut digits = vec![0usize; dims.len()];
    for slot in map.iter_mut() {
        let mut idx = 0;
        for (k, &o) in order.iter().enumerate() {
            idx = idx * new_dims[k] + digits[o];
        }
        *slot = idx;
        for k in (0..dims.len()).rev() {
            digits[k] += 1;
            if digits[k] < dims[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}
