//! Von Neumann entropy, quantum and classical conditional mutual
//! information, and the residual of the SSA saturation identity.
//!
//! Matrix logarithms are natural; entropies are reported in bits.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::density::{lift, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::log_of;
use crate::tolerance::Tolerances;

/// Entropies entering S(x:y|e), in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub s_xe: f64,
    pub s_ye: f64,
    pub s_xye: f64,
    pub s_e: f64,
    pub cmi: f64,
}

/// −Σ λ log₂ λ with eigenvalues at or below the default `eig_zero` dropped.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    von_neumann_entropy_with(rho, Tolerances::default().eig_zero)
}

pub fn von_neumann_entropy_with(rho: &DensityMatrix, eig_zero: f64) -> Result<f64> {
    let eig = rho.eig()?;
    Ok(shannon_bits(eig.eigenvalues.iter().copied(), eig_zero))
}

fn shannon_bits(values: impl Iterator<Item = f64>, zero: f64) -> f64 {
    let nats: f64 = values.filter(|&p| p > zero).map(|p| -p * p.ln()).sum();
    nats / LN_2
}

fn require_exy(sigma: &DensityMatrix) -> Result<()> {
    let labels = sigma.dims().labels();
    let ok = labels.len() == 3 && ["e", "x", "y"].iter().all(|l| labels.iter().any(|m| m == l));
    if ok {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "expected a state on subsystems e, x, y; got {labels:?}"
        )))
    }
}

/// S(x,e) + S(y,e) − S(x,y,e) − S(e) in bits.
pub fn quantum_cmi(sigma: &DensityMatrix) -> Result<EntropyReport> {
    quantum_cmi_with(sigma, Tolerances::default().eig_zero)
}

pub fn quantum_cmi_with(sigma: &DensityMatrix, eig_zero: f64) -> Result<EntropyReport> {
    require_exy(sigma)?;
    let s = |keep: &[&str]| -> Result<f64> { von_neumann_entropy_with(&sigma.partial_trace(keep)?, eig_zero) };
    let s_xe = s(&["e", "x"])?;
    let s_ye = s(&["e", "y"])?;
    let s_e = s(&["e"])?;
    let s_xye = von_neumann_entropy_with(sigma, eig_zero)?;
    Ok(EntropyReport {
        s_xe,
        s_ye,
        s_xye,
        s_e,
        cmi: s_xe + s_ye - s_xye - s_e,
    })
}

/// Joint distribution P(x, y, e), stored x-major then y then e.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    dims: [usize; 3],
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(dims: [usize; 3], probs: Vec<f64>, tols: &Tolerances) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n == 0 || probs.len() != n {
            return Err(Error::Shape(format!(
                "{} probabilities for shape {dims:?}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidWeights(format!("negative or non-finite probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if !((total - 1.0).abs() <= tols.trace) {
            return Err(Error::TraceDeviation {
                deviation: (total - 1.0).abs(),
            });
        }
        Ok(Self { dims, probs })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn p(&self, x: usize, y: usize, e: usize) -> f64 {
        let [_, dy, de] = self.dims;
        self.probs[(x * dy + y) * de + e]
    }

    fn marginals(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let [dx, dy, de] = self.dims;
        let mut pe = vec![0.0; de];
        let mut pxe = vec![0.0; dx * de];
        let mut pye = vec![0.0; dy * de];
        for x in 0..dx {
            for y in 0..dy {
                for e in 0..de {
                    let p = self.p(x, y, e);
                    pe[e] += p;
                    pxe[x * de + e] += p;
                    pye[y * de + e] += p;
                }
            }
        }
        (pe, pxe, pye)
    }

    /// max over (x, y, e) with P(e) > 0 of |P(x,y|e) − P(x|e) P(y|e)|.
    pub fn conditional_independence_residual(&self) -> f64 {
        let [dx, dy, de] = self.dims;
        let (pe, pxe, pye) = self.marginals();
        let mut worst = 0.0_f64;
        for e in (0..de).filter(|&e| pe[e] > 0.0) {
            for x in 0..dx {
                for y in 0..dy {
                    let joint = self.p(x, y, e) / pe[e];
                    let prod = (pxe[x * de + e] / pe[e]) * (pye[y * de + e] / pe[e]);
                    worst = worst.max((joint - prod).abs());
                }
            }
        }
        worst
    }

    /// Whether P(x,y|e) = P(x|e) P(y|e) for every e with P(e) > 0, to within `tol`.
    pub fn is_conditionally_independent(&self, tol: f64) -> bool {
        self.conditional_independence_residual() <= tol
    }
}

/// Σ P(x,y,e) log₂ [P(x,y|e) / (P(x|e) P(y|e))], skipping P(x,y,e) ≤ `eig_zero`.
pub fn classical_cmi(p: &JointDistribution) -> f64 {
    classical_cmi_with(p, Tolerances::default().eig_zero)
}

pub fn classical_cmi_with(p: &JointDistribution, zero: f64) -> f64 {
    let [dx, dy, de] = p.dims;
    let (pe, pxe, pye) = p.marginals();
    let mut nats = 0.0;
    for x in 0..dx {
        for y in 0..dy {
            for e in 0..de {
                let pxye = p.p(x, y, e);
                if pxye > zero {
                    // P(x,y|e) / (P(x|e)P(y|e)) = P(x,y,e) P(e) / (P(x,e) P(y,e))
                    nats += pxye * (pxye * pe[e] / (pxe[x * de + e] * pye[y * de + e])).ln();
                }
            }
        }
    }
    nats / LN_2
}

/// ‖log σ − log σ_xe − log σ_ye + log σ_e‖_F with every marginal lifted to
/// the full (e, x, y) space by tensoring identities.
///
/// σ and all three marginals must have every eigenvalue above `cutoff`.
pub fn saturation_residual(sigma: &DensityMatrix, cutoff: f64) -> Result<f64> {
    require_exy(sigma)?;
    let full = sigma.dims();
    let log_lifted = |m: &DensityMatrix, what: &str| -> Result<_> {
        let l = log_of(&m.eig()?, cutoff, what)?;
        lift(&l, m.dims(), full)
    };
    let l_all = log_of(&sigma.eig()?, cutoff, "sigma")?;
    let l_xe = log_lifted(&sigma.partial_trace(&["e", "x"])?, "sigma_xe")?;
    let l_ye = log_lifted(&sigma.partial_trace(&["e", "y"])?, "sigma_ye")?;
    let l_e = log_lifted(&sigma.partial_trace(&["e"])?, "sigma_e")?;
    let diff = &(&(&l_all - &l_xe) - &l_ye) + &l_e;
    Ok(diff.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::SubsystemDims;
    use crate::matrix::ComplexMatrix;
    use crate::states::{bell_state, build_extension, random_density, random_separable_with_rank};

    fn uniform_joint(f: impl Fn(usize, usize, usize) -> f64) -> JointDistribution {
        let mut probs = vec![];
        for x in 0..2 {
            for y in 0..2 {
                for e in 0..2 {
                    probs.push(f(x, y, e));
                }
            }
        }
        JointDistribution::new([2, 2, 2], probs, &Tolerances::default()).unwrap()
    }

    fn product_exy(seed: u64, ranks: [usize; 3]) -> DensityMatrix {
        let e = random_density(&SubsystemDims::new(["e"], [2]).unwrap(), ranks[0], seed).unwrap();
        let x = random_density(&SubsystemDims::new(["x"], [2]).unwrap(), ranks[1], seed + 1).unwrap();
        let y = random_density(&SubsystemDims::new(["y"], [3]).unwrap(), ranks[2], seed + 2).unwrap();
        e.tensor(&x).unwrap().tensor(&y).unwrap()
    }

    #[test]
    fn entropy_of_simple_states() {
        let mixed = DensityMatrix::maximally_mixed(SubsystemDims::single(2));
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-15);
        let pure = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), SubsystemDims::single(2)).unwrap();
        assert_eq!(von_neumann_entropy(&pure).unwrap(), 0.0);
        let d = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.5, 0.25, 0.25]), SubsystemDims::single(3)).unwrap();
        assert!((von_neumann_entropy(&d).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cmi_of_full_product_vanishes() {
        let sigma = product_exy(3, [2, 2, 3]);
        assert!(quantum_cmi(&sigma).unwrap().cmi.abs() <= 1e-10);
    }

    #[test]
    fn cmi_of_bell_with_trivial_e() {
        let e = DensityMatrix::maximally_mixed(SubsystemDims::new(["e"], [1]).unwrap());
        let sigma = e.tensor(&bell_state()).unwrap();
        let r = quantum_cmi(&sigma).unwrap();
        assert!((r.cmi - 2.0).abs() <= 1e-12);
        assert!((r.s_xe - 1.0).abs() <= 1e-12 && (r.s_ye - 1.0).abs() <= 1e-12);
        assert!(r.s_xye.abs() <= 1e-12 && r.s_e.abs() <= 1e-12);
    }

    #[test]
    fn cmi_requires_exy() {
        assert!(matches!(quantum_cmi(&bell_state()), Err(Error::Usage(_))));
    }

    #[test]
    fn cmi_of_two_term_conditionally_separable() {
        let d = random_separable_with_rank((2, 2), 2, 2, 5).unwrap();
        let ext = build_extension(&d).unwrap();
        assert!(quantum_cmi(ext.sigma()).unwrap().cmi.abs() <= 1e-9);
    }

    #[test]
    fn classical_cases() {
        let indep = uniform_joint(|_, _, _| 0.125);
        assert!(classical_cmi(&indep).abs() < 1e-15);
        assert!(indep.is_conditionally_independent(1e-15));

        let shared = uniform_joint(|x, y, e| if x == y && e == 0 { 0.5 } else { 0.0 });
        assert!((classical_cmi(&shared) - 1.0).abs() < 1e-15);
        assert!(!shared.is_conditionally_independent(1e-3));

        let copied = uniform_joint(|x, y, e| if x == y && y == e { 0.5 } else { 0.0 });
        assert!(classical_cmi(&copied).abs() < 1e-15);
        assert!(copied.is_conditionally_independent(1e-15));
    }

    #[test]
    fn joint_distribution_validation() {
        let t = Tolerances::default();
        assert!(JointDistribution::new([2, 2, 2], vec![0.125; 7], &t).is_err());
        assert!(JointDistribution::new([1, 1, 2], vec![1.5, -0.5], &t).is_err());
        assert!(JointDistribution::new([1, 1, 2], vec![0.5, 0.4], &t).is_err());
    }

    #[test]
    fn saturation_of_full_rank_product() {
        let sigma = product_exy(11, [2, 2, 3]);
        assert!(saturation_residual(&sigma, 1e-12).unwrap() <= 1e-9);
    }

    #[test]
    fn saturation_of_conditionally_separable() {
        let d = random_separable_with_rank((2, 3), 3, 3, 21).unwrap();
        let ext = build_extension(&d).unwrap();
        assert!(saturation_residual(ext.sigma(), 1e-12).unwrap() <= 1e-8);
    }

    #[test]
    fn saturation_fails_for_mixed_bell() {
        // dim(e) = 1 so the lifted marginals are σ_x, σ_y and σ_e = 1
        let rho = &bell_state().into_matrix().scale(0.9) + &ComplexMatrix::identity(4).scale(0.1 / 4.0);
        let sigma = DensityMatrix::new(rho, SubsystemDims::exy(1, 2, 2).unwrap()).unwrap();
        let residual = saturation_residual(&sigma, 1e-12).unwrap();
        // log σ has eigenvalues ln(0.925), 3 ln(0.025); the marginal logs sum to 2 ln(1/2) I
        let l1 = 0.925_f64.ln() + 2.0 * LN_2;
        let l2 = 0.025_f64.ln() + 2.0 * LN_2;
        let expect = (l1 * l1 + 3.0 * l2 * l2).sqrt();
        assert!((residual - expect).abs() < 1e-10);
        assert!(residual > 0.1);
        assert!(quantum_cmi(&sigma).unwrap().cmi > 0.0);
    }

    #[test]
    fn saturation_rejects_rank_deficiency() {
        let sigma = product_exy(5, [1, 2, 3]);
        match saturation_residual(&sigma, 1e-12).unwrap_err() {
            Error::Singular { what, .. } => assert_eq!(what, "sigma"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
