use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eig_with;
use crate::matrix::ComplexMatrix;
use crate::tolerance::Tolerances;

/// Outcome of the positive-partial-transpose test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptResult {
    pub min_eigenvalue: f64,
    pub is_ppt: bool,
}

/// Transposes the second tensor factor: <x y|ρ^T_y|x' y'> = <x y'|ρ|x' y>.
pub fn partial_transpose(m: &ComplexMatrix, dx: usize, dy: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dx * dy, dx * dy, |r, c| {
        let (x, y) = (r / dy, r % dy);
        let (x2, y2) = (c / dy, c % dy);
        m[(x * dy + y2, x2 * dy + y)]
    })
}

/// Peres test with the default threshold.
pub fn ppt_check(rho: &DensityMatrix) -> Result<PptResult> {
    ppt_check_with(rho, Tolerances::default().ppt)
}

/// Minimum eigenvalue of ρ^T_y; the state is PPT when it is at least `-tol`.
pub fn ppt_check_with(rho: &DensityMatrix, tol: f64) -> Result<PptResult> {
    let d = rho.dims().dims();
    if d.len() != 2 {
        return Err(Error::Usage(format!(
            "partial transpose needs a bipartite state, got {} subsystems",
            d.len()
        )));
    }
    let pt = partial_transpose(rho.matrix(), d[0], d[1]);
    let min_eigenvalue = hermitian_eig_with(&pt, f64::INFINITY)?.min_eigenvalue();
    Ok(PptResult {
        min_eigenvalue,
        is_ppt: min_eigenvalue >= -tol,
    })
}
