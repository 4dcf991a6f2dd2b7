//! Separable decompositions, conditionally separable extensions and seeded
//! random state generators.

use rand_distr::{Distribution, Exp1};

use crate::density::{validate_density, DensityMatrix};
use crate::dims::SubsystemDims;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::rng::{complex_gaussian, rng_from_seed, Rng};
use crate::tolerance::Tolerances;

/// One term `w · ρ_x ⊗ ρ_y` of a separable decomposition.
#[derive(Debug, Clone)]
pub struct Term {
    pub weight: f64,
    pub x: DensityMatrix,
    pub y: DensityMatrix,
}

/// A convex combination of product states on (x, y) with positive weights.
#[derive(Debug, Clone)]
pub struct SeparableDecomposition {
    terms: Vec<Term>,
    dx: usize,
    dy: usize,
}

/// Validates a list of `(weight, ρ_x, ρ_y)` triples.
///
/// Zero-weight terms are dropped. Factors are relabeled `x` and `y`.
pub fn make_decomposition(
    terms: impl IntoIterator<Item = (f64, DensityMatrix, DensityMatrix)>,
    tols: &Tolerances,
) -> Result<SeparableDecomposition> {
    let terms: Vec<_> = terms.into_iter().collect();
    let (dx, dy) = match terms.first() {
        Some((_, x, y)) => (x.dim(), y.dim()),
        None => return Err(Error::InvalidWeights("decomposition has no terms".into())),
    };
    let mut sum = 0.0;
    let mut kept = Vec::with_capacity(terms.len());
    for (k, (weight, x, y)) in terms.into_iter().enumerate() {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidWeights(format!("term {k} has weight {weight}")));
        }
        if x.dim() != dx || y.dim() != dy {
            return Err(Error::Shape(format!(
                "term {k} has factor dimensions ({}, {}), expected ({dx}, {dy})",
                x.dim(),
                y.dim()
            )));
        }
        check_factor(&x, tols)?;
        check_factor(&y, tols)?;
        sum += weight;
        if weight > 0.0 {
            kept.push(Term {
                weight,
                x: x.relabel(["x"])?,
                y: y.relabel(["y"])?,
            });
        }
    }
    if !((sum - 1.0).abs() <= tols.trace) {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}, expected 1")));
    }
    Ok(SeparableDecomposition { terms: kept, dx, dy })
}

fn check_factor(f: &DensityMatrix, tols: &Tolerances) -> Result<()> {
    if f.dims().len() != 1 {
        return Err(Error::Shape("decomposition factors must be single-subsystem states".into()));
    }
    if f.hermiticity_residual() > tols.herm {
        return Err(Error::NotHermitian {
            residual: f.hermiticity_residual(),
        });
    }
    if f.trace_deviation() > tols.trace {
        return Err(Error::TraceDeviation {
            deviation: f.trace_deviation(),
        });
    }
    if f.min_eigenvalue() < -tols.psd {
        return Err(Error::NotPositive {
            min_eigenvalue: f.min_eigenvalue(),
        });
    }
    Ok(())
}

impl SeparableDecomposition {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    /// Σ w ρ_x ⊗ ρ_y as a raw matrix.
    pub fn reconstruct_matrix(&self) -> ComplexMatrix {
        let n = self.dx * self.dy;
        self.terms.iter().fold(ComplexMatrix::zeros(n, n), |acc, t| {
            &acc + &t.x.matrix().kron(t.y.matrix()).scale(t.weight)
        })
    }

    /// Σ w ρ_x ⊗ ρ_y on the (x, y) layout.
    pub fn reconstruct(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(
            self.reconstruct_matrix(),
            SubsystemDims::xy(self.dx, self.dy).expect("nonzero dims"),
        )
    }

    /// True when no two weights are exactly equal.
    pub fn has_distinct_weights(&self) -> bool {
        duplicate_pair(&self.weights()).is_none()
    }
}

fn duplicate_pair(w: &[f64]) -> Option<(usize, usize)> {
    colliding_pair(w, 0.0)
}

/// First pair (i < j) whose weights differ by at most `gap`.
fn colliding_pair(w: &[f64], gap: f64) -> Option<(usize, usize)> {
    for j in 1..w.len() {
        for i in 0..j {
            if (w[i] - w[j]).abs() <= gap {
                return Some((i, j));
            }
        }
    }
    None
}

/// Smallest strictly positive difference between any two values.
fn min_positive_gap(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2)
        .map(|p| p[1] - p[0])
        .filter(|&g| g > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Halves of `weights[j]`, `w/2 ± ε`, that clear every other weight and each
/// other by more than `min_gap`.
fn split_weight(weights: &[f64], j: usize, min_gap: f64, min_weight: f64) -> Option<(f64, f64)> {
    let w = weights[j];
    let others: Vec<f64> = weights
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &v)| v)
        .collect();
    let admissible = |eps: f64| -> Option<(f64, f64)> {
        let hi = w / 2.0 + eps;
        let lo = w / 2.0 - eps;
        let ok = hi - lo > min_gap
            && lo > min_weight
            && others.iter().all(|&o| (o - hi).abs() > min_gap && (o - lo).abs() > min_gap);
        ok.then_some((hi, lo))
    };
    let mut pool = weights.to_vec();
    pool.push(w / 2.0);
    let first = min_positive_gap(&pool) / 4.0;
    let halvings = (0..64).map(|k| first / f64::powi(2.0, k));
    let grid = (1..256).map(|k| w / 2.0 * k as f64 / 256.0);
    halvings
        .chain(grid)
        .filter(|e| e.is_finite() && *e > 0.0)
        .find_map(admissible)
}

/// Splits repeated weights until all weights are pairwise distinct.
///
/// While some weight value `w` occurs twice, the later occurrence is replaced
/// in place by two terms with weights `w/2 + ε` and `w/2 − ε` carrying the
/// same factor pair, where `ε = g/4` and `g` is the smallest positive gap in
/// the current weights together with `w/2`. `ε` is halved while either new
/// weight still collides with an existing one.
pub fn dedegenerate_weights(d: &SeparableDecomposition) -> SeparableDecomposition {
    dedegenerate_weights_with_gap(d, 0.0, 0.0).expect("exact splitting always finds a split")
}

/// [`dedegenerate_weights`] where weights closer than or equal to `min_gap`
/// count as repeated and every split weight must exceed `min_weight`.
///
/// When the `g/4` rule and its halvings cannot clear the gap (possible only
/// for `min_gap > 0`), `ε` is scanned over a fixed grid in `(0, w/2)`, and
/// if the later weight of the pair still cannot be split the earlier one is.
/// Fails with [`Error::Precondition`] when a colliding weight is too small to
/// split under these constraints.
pub fn dedegenerate_weights_with_gap(
    d: &SeparableDecomposition,
    min_gap: f64,
    min_weight: f64,
) -> Result<SeparableDecomposition> {
    let mut terms = d.terms.clone();
    while let Some((i, j)) = colliding_pair(&terms.iter().map(|t| t.weight).collect::<Vec<_>>(), min_gap) {
        let weights: Vec<f64> = terms.iter().map(|t| t.weight).collect();
        // The exact rule always succeeds on the later term; with a gap the
        // earlier one may be the only one large enough to split.
        let candidates = if min_gap > 0.0 { vec![j, i] } else { vec![j] };
        let (k, hi, lo) = candidates
            .iter()
            .find_map(|&k| split_weight(&weights, k, min_gap, min_weight).map(|(hi, lo)| (k, hi, lo)))
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "weights {:e} and {:e} cannot be split into weights separated by more than {min_gap:e}",
                    weights[i], weights[j]
                ))
            })?;
        let t = terms.remove(k);
        terms.insert(k, Term { weight: lo, ..t.clone() });
        terms.insert(k, Term { weight: hi, ..t });
    }
    Ok(SeparableDecomposition {
        terms,
        dx: d.dx,
        dy: d.dy,
    })
}

/// A density matrix on (e, x, y) proposed as an extension of a state on (x, y).
#[derive(Debug, Clone)]
pub struct ExtensionState {
    sigma: DensityMatrix,
}

impl ExtensionState {
    /// Wraps a tripartite state. Its labels must be exactly `e, x, y`.
    pub fn new(sigma: DensityMatrix) -> Result<Self> {
        if !sigma.dims().has_labels(&["e", "x", "y"]) {
            return Err(Error::Usage(format!(
                "extension must be labeled (e, x, y), got {:?}",
                sigma.dims().labels()
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn into_sigma(self) -> DensityMatrix {
        self.sigma
    }

    pub fn de(&self) -> usize {
        self.sigma.dims().dims()[0]
    }

    pub fn dx(&self) -> usize {
        self.sigma.dims().dims()[1]
    }

    pub fn dy(&self) -> usize {
        self.sigma.dims().dims()[2]
    }

    /// tr_e σ.
    pub fn reduced(&self) -> DensityMatrix {
        self.sigma.partial_trace(&["x", "y"]).expect("labels checked")
    }
}

/// σ = Σ_e w_e |e><e| ⊗ ρ_x^e ⊗ ρ_y^e with one basis state of e per term.
///
/// Requires pairwise distinct weights; see [`dedegenerate_weights`].
pub fn build_extension(d: &SeparableDecomposition) -> Result<ExtensionState> {
    let weights = d.weights();
    if let Some((i, j)) = duplicate_pair(&weights) {
        return Err(Error::Precondition(format!(
            "terms {i} and {j} share weight {}; call dedegenerate_weights first",
            weights[i]
        )));
    }
    let de = d.len();
    let block = d.dx * d.dy;
    let n = de * block;
    let mut sigma = ComplexMatrix::zeros(n, n);
    for (e, t) in d.terms.iter().enumerate() {
        let b = t.x.matrix().kron(t.y.matrix());
        for i in 0..block {
            for j in 0..block {
                sigma[(e * block + i, e * block + j)] = b[(i, j)] * t.weight;
            }
        }
    }
    let dims = SubsystemDims::exy(de, d.dx, d.dy)?;
    ExtensionState::new(DensityMatrix::from_trusted(sigma, dims))
}

/// ρ = G G^H / tr(G G^H) for a seeded complex Gaussian `n × rank` matrix G.
pub fn random_density(dims: &SubsystemDims, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let n = dims.total();
    if rank == 0 || rank > n {
        return Err(Error::Usage(format!("rank {rank} outside 1..={n}")));
    }
    let mut rng = rng_from_seed(seed);
    Ok(random_density_from(dims.clone(), rank, &mut rng))
}

pub(crate) fn random_density_from(dims: SubsystemDims, rank: usize, rng: &mut Rng) -> DensityMatrix {
    let n = dims.total();
    let g = ComplexMatrix::from_fn(n, rank, |_, _| complex_gaussian(rng));
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    let rho = gg.hermitian_part().scale(1.0 / tr);
    DensityMatrix::from_trusted(rho, dims)
}

/// Random separable decomposition with pure factors.
pub fn random_separable(dims: (usize, usize), n_terms: usize, seed: u64) -> Result<SeparableDecomposition> {
    random_separable_with_rank(dims, n_terms, 1, seed)
}

/// Random separable decomposition: Dirichlet(1) weights and factors of the
/// given rank (capped at each factor's dimension).
pub fn random_separable_with_rank(
    (dx, dy): (usize, usize),
    n_terms: usize,
    factor_rank: usize,
    seed: u64,
) -> Result<SeparableDecomposition> {
    if n_terms == 0 {
        return Err(Error::Usage("n_terms must be at least 1".into()));
    }
    if dx == 0 || dy == 0 || factor_rank == 0 {
        return Err(Error::Usage("dimensions and factor rank must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let weights = random_weights(n_terms, &mut rng);
    let mut terms = Vec::with_capacity(n_terms);
    for weight in weights {
        let x = random_density_from(SubsystemDims::new(["x"], [dx])?, factor_rank.min(dx), &mut rng);
        let y = random_density_from(SubsystemDims::new(["y"], [dy])?, factor_rank.min(dy), &mut rng);
        terms.push(Term { weight, x, y });
    }
    Ok(SeparableDecomposition { terms, dx, dy })
}

/// Seeded Haar-random pure state on the given layout.
pub fn random_pure(dims: &SubsystemDims, seed: u64) -> DensityMatrix {
    let mut rng = rng_from_seed(seed);
    let v = crate::rng::random_unit_vector(dims.total(), &mut rng);
    DensityMatrix::from_trusted(ComplexMatrix::outer(&v), dims.clone())
}

/// The Bell state |Φ+> = (|00> + |11>)/√2 on (x, y).
pub fn bell_state() -> DensityMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let psi = [C64::new(h, 0.0), z, z, C64::new(h, 0.0)];
    DensityMatrix::from_trusted(ComplexMatrix::outer(&psi), SubsystemDims::xy(2, 2).expect("2x2"))
}

/// Two-qubit Werner state p |Φ+><Φ+| + (1 − p) I/4.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("Werner parameter {p} outside [0, 1]")));
    }
    let m = &bell_state().into_matrix().scale(p) + &ComplexMatrix::identity(4).scale((1.0 - p) / 4.0);
    validate_density(m, SubsystemDims::xy(2, 2)?, &Tolerances::default())
}

/// Draws a weight vector uniformly from the simplex.
pub fn random_weights(n: usize, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}
