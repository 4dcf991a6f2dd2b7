//! Separability certificates from conditionally separable extensions.
//!
//! A state ρ on (x, y) is separable exactly when it has an extension σ on
//! (e, x, y) such that
//!
//! 1. ρ = tr_e σ,
//! 2. S_σ(x:y|e) = 0,
//! 3. σ_xe, σ_ye and σ_e commute pairwise,
//! 4. σ_e has non-zero, non-degenerate eigenvalues.
//!
//! [`verify_extension`] measures each condition numerically.
//! [`extract_decomposition`] runs the converse direction: from a σ meeting
//! conditions 2-4 it recovers the weights and product factors.

use serde::{Deserialize, Serialize};

use crate::density::{lift, partial_trace, validate_density, DensityMatrix};
use crate::dims::SubsystemDims;
use crate::entropy::{quantum_cmi_with, EntropyReport};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig_with, hermitian_inverse, EigenDecomposition};
use crate::matrix::ComplexMatrix;
use crate::states::{make_decomposition, ExtensionState, SeparableDecomposition};
use crate::tolerance::Tolerances;

/// Pass/fail per condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVerdicts {
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub cond4: bool,
    pub overall: bool,
}

impl ConditionVerdicts {
    /// Indices (1-based) of the conditions that failed.
    pub fn failed(&self) -> Vec<u8> {
        [self.cond1, self.cond2, self.cond3, self.cond4]
            .iter()
            .enumerate()
            .filter(|(_, &ok)| !ok)
            .map(|(k, _)| k as u8 + 1)
            .collect()
    }
}

/// Residuals and verdicts for the four extension conditions.
///
/// Commutator residuals are normalized: ‖[A, B]‖_F / (1 + ‖A‖_F ‖B‖_F),
/// computed on the operators lifted to the full (e, x, y) space, in the
/// order (σ_xe, σ_ye), (σ_xe, σ_e), (σ_ye, σ_e).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Certificate {
    pub cond1_marginal_residual: f64,
    pub cond2_cmi: f64,
    pub cond2_entropies: EntropyReport,
    pub cond3_commutator_residuals: [f64; 3],
    pub cond4_min_eigenvalue: f64,
    /// `None` when dim(e) = 1, where there is no pair to compare.
    pub cond4_min_eigenvalue_gap: Option<f64>,
    pub verdict: ConditionVerdicts,
    pub tolerances: Tolerances,
}

fn normalized_commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.commutator(b).frobenius_norm() / (1.0 + a.frobenius_norm() * b.frobenius_norm())
}

struct LiftedMarginals {
    xe: ComplexMatrix,
    ye: ComplexMatrix,
    e: ComplexMatrix,
}

fn lifted_marginals(sigma: &DensityMatrix) -> Result<LiftedMarginals> {
    let full = sigma.dims();
    let l = |keep: &[&str]| -> Result<ComplexMatrix> {
        let m = partial_trace(sigma, keep)?;
        lift(m.matrix(), m.dims(), full)
    };
    Ok(LiftedMarginals {
        xe: l(&["e", "x"])?,
        ye: l(&["e", "y"])?,
        e: l(&["e"])?,
    })
}

fn check_bipartite(rho: &DensityMatrix, sigma: &ExtensionState) -> Result<()> {
    let d = rho.dims().dims();
    if d.len() != 2 {
        return Err(Error::Shape(format!(
            "rho must be bipartite, got {} subsystems",
            d.len()
        )));
    }
    if d[0] != sigma.dx() || d[1] != sigma.dy() {
        return Err(Error::Shape(format!(
            "rho has dimensions ({}, {}) but sigma has x, y dimensions ({}, {})",
            d[0],
            d[1],
            sigma.dx(),
            sigma.dy()
        )));
    }
    Ok(())
}

/// Evaluates all four conditions, even after one fails.
pub fn verify_extension(rho: &DensityMatrix, sigma: &ExtensionState, tols: &Tolerances) -> Result<Theorem1Certificate> {
    check_bipartite(rho, sigma)?;
    let s = sigma.sigma();

    let cond1_marginal_residual = rho.matrix().distance(sigma.reduced().matrix());

    let cond2_entropies = quantum_cmi_with(s, tols.eig_zero)?;
    let cond2_cmi = cond2_entropies.cmi;

    let m = lifted_marginals(s)?;
    let cond3_commutator_residuals = [
        normalized_commutator(&m.xe, &m.ye),
        normalized_commutator(&m.xe, &m.e),
        normalized_commutator(&m.ye, &m.e),
    ];

    let sigma_e = s.partial_trace(&["e"])?;
    let eig = hermitian_eig_with(sigma_e.matrix(), f64::INFINITY)?;
    let cond4_min_eigenvalue = eig.min_eigenvalue();
    let cond4_min_eigenvalue_gap = (eig.dim() > 1).then(|| eig.min_gap());

    let cond1 = cond1_marginal_residual <= tols.cond1;
    let cond2 = cond2_cmi.abs() <= tols.cond2;
    let cond3 = cond3_commutator_residuals.iter().all(|&r| r <= tols.cond3);
    let cond4 = cond4_min_eigenvalue > tols.cond4_zero && cond4_min_eigenvalue_gap.is_none_or(|g| g > tols.cond4_gap);

    Ok(Theorem1Certificate {
        cond1_marginal_residual,
        cond2_cmi,
        cond2_entropies,
        cond3_commutator_residuals,
        cond4_min_eigenvalue,
        cond4_min_eigenvalue_gap,
        verdict: ConditionVerdicts {
            cond1,
            cond2,
            cond3,
            cond4,
            overall: cond1 && cond2 && cond3 && cond4,
        },
        tolerances: *tols,
    })
}

/// Diagonal blocks of σ_xe and σ_ye in the eigenbasis of σ_e.
#[derive(Debug, Clone)]
pub struct BlockDiagonalForm {
    /// A^e, the (e, e) block of σ_xe.
    pub x_blocks: Vec<ComplexMatrix>,
    /// B^e, the (e, e) block of σ_ye.
    pub y_blocks: Vec<ComplexMatrix>,
    /// Largest |entry| of any (e, e') block with e ≠ e', over both marginals.
    pub off_block_residual: f64,
}

impl BlockDiagonalForm {
    /// Splits an operator on (e, f) into its e-sector blocks.
    fn split(m: &ComplexMatrix, de: usize, df: usize) -> (Vec<ComplexMatrix>, f64) {
        let mut blocks = Vec::with_capacity(de);
        let mut off = 0.0_f64;
        for e in 0..de {
            for e2 in 0..de {
                if e == e2 {
                    blocks.push(ComplexMatrix::from_fn(df, df, |i, j| m[(e * df + i, e * df + j)]));
                } else {
                    for i in 0..df {
                        for j in 0..df {
                            off = off.max(m[(e * df + i, e2 * df + j)].norm());
                        }
                    }
                }
            }
        }
        (blocks, off)
    }
}

/// Everything produced while inverting an extension.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub decomposition: SeparableDecomposition,
    /// Columns are the eigenvectors |e> of σ_e, in the order of the terms.
    pub basis: ComplexMatrix,
    pub blocks: BlockDiagonalForm,
    /// Largest negative eigenvalue magnitude clipped from an extracted factor.
    pub max_clip: f64,
    /// ‖σ − Σ_e w_e |e><e| ⊗ ρ_x^e ⊗ ρ_y^e‖_F.
    pub reconstruction_residual: f64,
}

impl Extraction {
    /// Σ_e w_e |e><e| ⊗ ρ_x^e ⊗ ρ_y^e in the original e basis.
    pub fn rebuild(&self) -> ComplexMatrix {
        rebuild_in_basis(&self.decomposition, &self.basis)
    }
}

fn rebuild_in_basis(d: &SeparableDecomposition, basis: &ComplexMatrix) -> ComplexMatrix {
    let de = basis.rows();
    let n = de * d.dx() * d.dy();
    d.terms()
        .iter()
        .enumerate()
        .fold(ComplexMatrix::zeros(n, n), |acc, (k, t)| {
            let proj = ComplexMatrix::outer(&basis.column(k));
            let term = proj.kron(t.x.matrix()).kron(t.y.matrix()).scale(t.weight);
            &acc + &term
        })
}

/// Recovers a separable decomposition of tr_e σ from an extension meeting
/// conditions 2-4.
pub fn extract_decomposition(sigma: &ExtensionState, tols: &Tolerances) -> Result<SeparableDecomposition> {
    Ok(extract(sigma, tols)?.decomposition)
}

/// [`extract_decomposition`] with the intermediate data kept.
pub fn extract(sigma: &ExtensionState, tols: &Tolerances) -> Result<Extraction> {
    let s = sigma.sigma();
    let (de, dx, dy) = (sigma.de(), sigma.dx(), sigma.dy());

    let sigma_e = s.partial_trace(&["e"])?;
    let eig: EigenDecomposition = hermitian_eig_with(sigma_e.matrix(), f64::INFINITY)?;
    let w_min = eig.min_eigenvalue();
    if !(w_min > tols.cond4_zero) {
        return Err(Error::Singular {
            what: "sigma_e".into(),
            eigenvalue: w_min,
            cutoff: tols.cond4_zero,
        });
    }
    if de > 1 && !(eig.min_gap() > tols.cond4_gap) {
        return Err(Error::Degenerate { gap: eig.min_gap() });
    }

    // σ' = (V^H ⊗ I) σ (V ⊗ I) expresses σ in the σ_e eigenbasis.
    let v = &eig.eigenvectors;
    let u = v.kron(&ComplexMatrix::identity(dx * dy));
    let rotated = u.adjoint().matmul(s.matrix()).matmul(&u);
    let rotated = DensityMatrix::from_trusted(rotated, s.dims().clone());
    let xe = rotated.partial_trace(&["e", "x"])?;
    let ye = rotated.partial_trace(&["e", "y"])?;
    let (x_blocks, off_x) = BlockDiagonalForm::split(xe.matrix(), de, dx);
    let (y_blocks, off_y) = BlockDiagonalForm::split(ye.matrix(), de, dy);
    let blocks = BlockDiagonalForm {
        x_blocks,
        y_blocks,
        off_block_residual: off_x.max(off_y),
    };
    if !(blocks.off_block_residual <= tols.block) {
        return Err(Error::BlockStructure {
            residual: blocks.off_block_residual,
        });
    }

    let mut max_clip = 0.0_f64;
    let mut terms = Vec::with_capacity(de);
    for (k, &w) in eig.eigenvalues.iter().enumerate() {
        let (fx, cx) = extracted_factor(&blocks.x_blocks[k], w, "x", tols)?;
        let (fy, cy) = extracted_factor(&blocks.y_blocks[k], w, "y", tols)?;
        max_clip = max_clip.max(cx).max(cy);
        terms.push((w, fx, fy));
    }
    let relaxed = Tolerances {
        trace: tols.trace.max(tols.extract),
        ..*tols
    };
    let decomposition = make_decomposition(terms, &relaxed)?;
    if decomposition.len() != de {
        return Err(Error::ExtractionConsistency("a σ_e eigenvalue vanished".into()));
    }

    let rebuilt = rebuild_in_basis(&decomposition, v);
    let reconstruction_residual = rebuilt.distance(s.matrix());
    if !(reconstruction_residual <= tols.extract) {
        return Err(Error::ExtractionConsistency(format!(
            "rebuilt sigma differs from the input by {reconstruction_residual:e} (Frobenius)"
        )));
    }
    Ok(Extraction {
        decomposition,
        basis: v.clone(),
        blocks,
        max_clip,
        reconstruction_residual,
    })
}

/// Block / w, symmetrized, with small negative eigenvalues clipped to zero.
fn extracted_factor(block: &ComplexMatrix, w: f64, label: &str, tols: &Tolerances) -> Result<(DensityMatrix, f64)> {
    let m = block.scale(1.0 / w).hermitian_part();
    let eig = hermitian_eig_with(&m, f64::INFINITY)?;
    let min = eig.min_eigenvalue();
    if min < -tols.psd {
        return Err(Error::ExtractionConsistency(format!(
            "extracted {label} factor has eigenvalue {min:e} below -{:e}",
            tols.psd
        )));
    }
    let (m, clip) = if min < 0.0 {
        (eig.apply(|l| l.max(0.0)), -min)
    } else {
        (m, 0.0)
    };
    let relaxed = Tolerances {
        trace: tols.trace.max(tols.extract),
        ..*tols
    };
    let dims = SubsystemDims::new([label], [block.rows()])?;
    let f = validate_density(m, dims, &relaxed).map_err(|e| {
        Error::ExtractionConsistency(format!("extracted {label} factor is not a density matrix: {e}"))
    })?;
    Ok((f, clip))
}

/// σ = σ_ye σ_xe σ_e⁻¹ for pairwise commuting marginals, each lifted to
/// (e, x, y).
///
/// The marginals must be labeled (e, x), (e, y) and (e).
pub fn reconstruct_sigma(
    sigma_xe: &DensityMatrix,
    sigma_ye: &DensityMatrix,
    sigma_e: &DensityMatrix,
    cutoff: f64,
    tols: &Tolerances,
) -> Result<DensityMatrix> {
    let de = sigma_e.dims().dim_of("e")?;
    let dx = sigma_xe.dims().dim_of("x")?;
    let dy = sigma_ye.dims().dim_of("y")?;
    if sigma_xe.dims().dim_of("e")? != de || sigma_ye.dims().dim_of("e")? != de {
        return Err(Error::Shape("marginals disagree on dim(e)".into()));
    }
    if sigma_xe.dims().len() != 2 || sigma_ye.dims().len() != 2 || sigma_e.dims().len() != 1 {
        return Err(Error::Usage("marginals must be on (e, x), (e, y) and (e)".into()));
    }
    let full = SubsystemDims::exy(de, dx, dy)?;
    let xe = lift(sigma_xe.matrix(), sigma_xe.dims(), &full)?;
    let ye = lift(sigma_ye.matrix(), sigma_ye.dims(), &full)?;
    let e = lift(sigma_e.matrix(), sigma_e.dims(), &full)?;
    for (name, a, b) in [("(sigma_xe, sigma_ye)", &xe, &ye), ("(sigma_xe, sigma_e)", &xe, &e), ("(sigma_ye, sigma_e)", &ye, &e)] {
        let r = normalized_commutator(a, b);
        if !(r <= tols.cond3) {
            return Err(Error::NonCommuting {
                what: name.into(),
                residual: r,
            });
        }
    }
    let e_inv = hermitian_inverse(sigma_e.matrix(), cutoff, "sigma_e")?;
    let e_inv = lift(&e_inv, sigma_e.dims(), &full)?;
    let product = ye.matmul(&xe).matmul(&e_inv);
    validate_density(product, full, tols)
}
