//! Evidence gathering for bipartite states of unknown status.
//!
//! [`ppt_check`] certifies entanglement when the partial transpose has a
//! negative eigenvalue. [`search_extension`] looks for a decomposition
//! ρ ≈ Σ_k w_k |a_k><a_k| ⊗ |b_k><b_k| by random-restart alternating
//! minimization of the Frobenius residual; the best candidate is only
//! reported as separable after its extension passes [`verify_extension`].
//! Failing to find a decomposition is never reported as entanglement.
//!
//! Restarts are independent. With the `parallel` feature they run on the
//! rayon pool; each restart draws from its own stream
//! `derive_seed(seed, index)` and the best one is chosen by
//! (residual, index), so serial and parallel runs produce the same report.

mod nnls;
mod optimizer;
mod ppt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::entropy::quantum_cmi_with;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::rng::derive_seed;
use crate::states::{build_extension, dedegenerate_weights_with_gap, make_decomposition, SeparableDecomposition};
use crate::theorem1::{verify_extension, Theorem1Certificate};
use crate::tolerance::Tolerances;
use crate::SubsystemDims;

use optimizer::{refit_subset, run_restart, RestartOutcome, RestartParams};

pub use nnls::nnls_gram;
pub use ppt::{partial_transpose, ppt_check, ppt_check_with, PptResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Ensemble size K; `None` means (dx·dy)².
    pub n_terms: Option<usize>,
    pub restarts: usize,
    /// Alternating sweeps per restart.
    pub max_iters: usize,
    pub seed: u64,
    /// Largest Frobenius residual accepted for certification.
    pub residual_target: f64,
    /// A restart stops once a sweep lowers the residual by less than this.
    pub min_improvement: f64,
    /// A restart stops once the residual is at or below this.
    pub residual_floor: f64,
    /// Fitted weights at or below this are dropped (and the rest refitted)
    /// before the extension is built.
    pub prune_weight: f64,
    /// Run restarts on the rayon pool (ignored without the `parallel` feature).
    /// Not serialized: it never changes the result.
    #[serde(skip_serializing)]
    pub parallel: bool,
    /// Record the residual after every sweep of every restart.
    pub trace: bool,
    pub tolerances: Tolerances,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_terms: None,
            restarts: 8,
            max_iters: 2000,
            seed: 0,
            residual_target: 1e-7,
            min_improvement: 1e-12,
            residual_floor: 1e-14,
            prune_weight: 1e-6,
            parallel: true,
            trace: false,
            tolerances: Tolerances::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_terms == Some(0) {
            return Err(Error::Usage("n_terms must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Usage("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn terms_for(&self, dx: usize, dy: usize) -> usize {
        self.n_terms.unwrap_or((dx * dy) * (dx * dy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SeparableCertified,
    EntangledCertified,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SeparableCertified => "separable-certified",
            Verdict::EntangledCertified => "entangled-certified",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub seed: u64,
    pub residual: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub verdict: Verdict,
    /// ‖ρ − Σ w ρ_x ⊗ ρ_y‖_F of the reported decomposition.
    pub residual: Option<f64>,
    pub best: Option<SeparableDecomposition>,
    pub best_restart: Option<usize>,
    /// CMI (bits) of the extension built from the de-degenerated best.
    pub extension_cmi: Option<f64>,
    pub certificate: Option<Theorem1Certificate>,
    pub ppt_min_eigenvalue: f64,
    pub is_ppt: bool,
    pub search_skipped: bool,
    /// PPT holds but no decomposition was certified: bound entanglement and
    /// an insufficient search both explain this outcome.
    pub ppt_inconclusive: bool,
    pub n_terms: usize,
    pub seeds_used: Vec<u64>,
    pub restarts: Vec<RestartSummary>,
    pub config: SearchConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn bipartite_dims(rho: &DensityMatrix) -> Result<(usize, usize)> {
    match rho.dims().dims() {
        &[dx, dy] => Ok((dx, dy)),
        other => Err(Error::Usage(format!(
            "expected a bipartite state, got dimensions {other:?}"
        ))),
    }
}

fn run_restarts(rho: &ComplexMatrix, params: &RestartParams, config: &SearchConfig) -> Vec<RestartOutcome> {
    let job = |i: usize| run_restart(rho, params, i, derive_seed(config.seed, i as u64));
    #[cfg(feature = "parallel")]
    if config.parallel {
        return (0..config.restarts).into_par_iter().map(job).collect();
    }
    (0..config.restarts).map(job).collect()
}

/// Lowest residual, ties to the lower restart index.
fn best_of(outcomes: &[RestartOutcome]) -> &RestartOutcome {
    outcomes
        .iter()
        .reduce(|best, o| {
            if o.residual.total_cmp(&best.residual).then(o.index.cmp(&best.index)).is_lt() {
                o
            } else {
                best
            }
        })
        .expect("at least one restart")
}

struct Candidate {
    decomposition: SeparableDecomposition,
    residual: f64,
    extension_cmi: f64,
    certificate: Theorem1Certificate,
}

impl Candidate {
    fn passes(&self, config: &SearchConfig) -> bool {
        self.residual <= config.residual_target && self.certificate.verdict.overall
    }
}

/// Turns a restart's raw (w, a, b) into a verified candidate. Tiny weights
/// cannot be pulled apart by the splitting rule, so they are dropped and the
/// rest refitted; the prune threshold is lowered until a candidate passes.
fn certify(rho: &DensityMatrix, best: &RestartOutcome, config: &SearchConfig) -> Result<Candidate> {
    let floor = 10.0 * config.tolerances.cond4_zero;
    let mut prune = config.prune_weight.max(floor);
    let mut fallback: Option<Result<Candidate>> = None;
    loop {
        match certify_pruned(rho, best, config, prune) {
            Ok(c) if c.passes(config) => return Ok(c),
            attempt => {
                if !matches!(fallback, Some(Ok(_))) && (fallback.is_none() || attempt.is_ok()) {
                    fallback = Some(attempt);
                }
            }
        }
        if prune <= floor {
            return fallback.expect("at least one attempt");
        }
        prune = (prune / 10.0).max(floor);
    }
}

fn certify_pruned(rho: &DensityMatrix, best: &RestartOutcome, config: &SearchConfig, prune: f64) -> Result<Candidate> {
    let tols = &config.tolerances;
    let (dx, dy) = bipartite_dims(rho)?;
    let mut kept: Vec<usize> = (0..best.weights.len()).filter(|&k| best.weights[k] > prune).collect();
    if kept.is_empty() {
        return Err(Error::Precondition("every fitted weight vanished".into()));
    }
    let refit = refit_subset(rho.matrix(), best, &kept);
    let weights: Vec<f64> = kept.iter().zip(&refit).filter(|(_, &w)| w > prune).map(|(_, &w)| w).collect();
    kept = kept.into_iter().zip(&refit).filter(|(_, &w)| w > prune).map(|(k, _)| k).collect();
    if kept.is_empty() {
        return Err(Error::Precondition("every refitted weight vanished".into()));
    }
    let total: f64 = weights.iter().sum();
    let pure = |v: &[crate::C64], label: &str, d: usize| {
        DensityMatrix::from_trusted(
            ComplexMatrix::outer(v),
            SubsystemDims::new([label], [d]).expect("positive dimension"),
        )
    };
    let terms = kept
        .iter()
        .zip(&weights)
        .map(|(&k, &w)| (w / total, pure(&best.xs[k], "x", dx), pure(&best.ys[k], "y", dy)));
    let decomposition = make_decomposition(terms, tols)?;
    let residual = rho.matrix().distance(&decomposition.reconstruct_matrix());

    let spread = dedegenerate_weights_with_gap(&decomposition, 2.0 * tols.cond4_gap, 10.0 * tols.cond4_zero)?;
    let extension = build_extension(&spread)?;
    let extension_cmi = quantum_cmi_with(extension.sigma(), tols.eig_zero)?.cmi;
    let cert_tols = Tolerances {
        cond1: tols.cond1.max(config.residual_target),
        ..*tols
    };
    let certificate = verify_extension(rho, &extension, &cert_tols)?;
    Ok(Candidate {
        decomposition,
        residual,
        extension_cmi,
        certificate,
    })
}

/// Searches for a separable decomposition of ρ and reports the evidence.
pub fn search_extension(rho: &DensityMatrix, config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    let ppt = ppt_check_with(rho, config.tolerances.ppt)?;
    search_with_ppt(rho, config, ppt)
}

fn search_with_ppt(rho: &DensityMatrix, config: &SearchConfig, ppt: PptResult) -> Result<SearchReport> {
    let (dx, dy) = bipartite_dims(rho)?;
    let n_terms = config.terms_for(dx, dy);
    let params = RestartParams {
        dx,
        dy,
        n_terms,
        max_iters: config.max_iters,
        min_improvement: config.min_improvement,
        residual_floor: config.residual_floor,
        keep_trace: config.trace,
    };
    let outcomes = run_restarts(rho.matrix(), &params, config);
    let best = best_of(&outcomes);

    let mut note = None;
    let candidate = match certify(rho, best, config) {
        Ok(c) => Some(c),
        Err(e) => {
            note = Some(format!("best candidate could not be certified: {e}"));
            None
        }
    };
    let certified = candidate.as_ref().is_some_and(|c| c.passes(config));

    let verdict = if certified && !ppt.is_ppt {
        note = Some("verified decomposition contradicts the PPT test; tolerances are inconsistent".into());
        Verdict::Inconclusive
    } else if certified {
        Verdict::SeparableCertified
    } else if !ppt.is_ppt {
        Verdict::EntangledCertified
    } else {
        Verdict::Inconclusive
    };

    let restarts = outcomes
        .iter()
        .map(|o| RestartSummary {
            index: o.index,
            seed: o.seed,
            residual: o.residual,
            iterations: o.iterations,
            trace: config.trace.then(|| o.trace.clone()),
        })
        .collect();

    Ok(SearchReport {
        verdict,
        residual: Some(candidate.as_ref().map_or(best.residual, |c| c.residual)),
        extension_cmi: candidate.as_ref().map(|c| c.extension_cmi),
        certificate: candidate.as_ref().map(|c| c.certificate.clone()),
        best: candidate.map(|c| c.decomposition),
        best_restart: Some(best.index),
        ppt_min_eigenvalue: ppt.min_eigenvalue,
        is_ppt: ppt.is_ppt,
        search_skipped: false,
        ppt_inconclusive: verdict == Verdict::Inconclusive && ppt.is_ppt,
        n_terms,
        seeds_used: outcomes.iter().map(|o| o.seed).collect(),
        restarts,
        config: config.clone(),
        note,
    })
}

/// PPT first; the search runs only when the state is PPT.
pub fn classify(rho: &DensityMatrix, config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    let ppt = ppt_check_with(rho, config.tolerances.ppt)?;
    if ppt.is_ppt {
        return search_with_ppt(rho, config, ppt);
    }
    let (dx, dy) = bipartite_dims(rho)?;
    Ok(SearchReport {
        verdict: Verdict::EntangledCertified,
        residual: None,
        best: None,
        best_restart: None,
        extension_cmi: None,
        certificate: None,
        ppt_min_eigenvalue: ppt.min_eigenvalue,
        is_ppt: false,
        search_skipped: true,
        ppt_inconclusive: false,
        n_terms: config.terms_for(dx, dy),
        seeds_used: vec![],
        restarts: vec![],
        config: config.clone(),
        note: None,
    })
}
