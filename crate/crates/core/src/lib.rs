//! Separability certification for bipartite density matrices.
//!
//! A state ρ on H_x ⊗ H_y is separable exactly when it admits an extension
//! σ on H_e ⊗ H_x ⊗ H_y whose conditional mutual information S(x:y|e)
//! vanishes, whose marginals σ_xe, σ_ye, σ_e commute, and whose σ_e has a
//! non-zero, non-degenerate spectrum. This crate builds such extensions from
//! separable decompositions, verifies the four conditions numerically,
//! inverts the construction, and searches for decompositions of states of
//! unknown status alongside the partial-transpose (PPT) entanglement test.
//!
//! Module map:
//!
//! * [`matrix`], [`dims`], [`linalg`], [`density`]: dense complex algebra on
//!   labeled tensor-product spaces.
//! * [`entropy`]: von Neumann entropy, quantum and classical CMI, the
//!   saturation residual.
//! * [`states`]: decompositions, extensions, seeded random states.
//! * [`theorem1`]: the verifier and the extraction procedure.
//! * [`search`]: PPT oracle, restart-parallel decomposition search, classifier.
//! * [`io`]: JSON file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod dims;
pub mod entropy;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod search;
pub mod states;
pub mod theorem1;
pub mod tolerance;

#[cfg(test)]
mod test_util;

pub use density::{lift, partial_trace, validate_density, DensityMatrix};
pub use dims::SubsystemDims;
pub use entropy::{
    classical_cmi, quantum_cmi, saturation_residual, von_neumann_entropy, EntropyReport, JointDistribution,
};
pub use error::{Error, Result};
pub use linalg::{hermitian_eig, matrix_exp, matrix_log, EigenDecomposition};
pub use matrix::{kron, ComplexMatrix, C64};
pub use search::{classify, ppt_check, search_extension, SearchConfig, SearchReport, Verdict};
pub use states::{
    build_extension, dedegenerate_weights, make_decomposition, random_density, random_separable,
    ExtensionState, SeparableDecomposition,
};
pub use theorem1::{extract_decomposition, reconstruct_sigma, verify_extension, Theorem1Certificate};
pub use tolerance::Tolerances;
