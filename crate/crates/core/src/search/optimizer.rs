//! One restart of the alternating fit of ρ by Σ_k w_k |a_k b_k><a_k b_k|.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::linalg::hermitian_eig_with;
use crate::matrix::{ComplexMatrix, C64};
use crate::rng::{rng_from_seed, random_unit_vector};

use super::nnls::nnls_gram;

#[derive(Debug, Clone)]
pub(crate) struct RestartOutcome {
    pub index: usize,
    pub seed: u64,
    pub residual: f64,
    pub iterations: usize,
    pub weights: Vec<f64>,
    pub xs: Vec<Vec<C64>>,
    pub ys: Vec<Vec<C64>>,
    pub trace: Vec<f64>,
}

pub(crate) struct RestartParams {
    pub dx: usize,
    pub dy: usize,
    pub n_terms: usize,
    pub max_iters: usize,
    pub min_improvement: f64,
    pub residual_floor: f64,
    pub keep_trace: bool,
}

fn product_vector(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect()
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// <v|m|v>, real part.
fn expectation(m: &ComplexMatrix, v: &[C64]) -> f64 {
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

/// m += s |v><v|
fn add_projector(m: &mut ComplexMatrix, v: &[C64], s: f64) {
    for i in 0..v.len() {
        for j in 0..v.len() {
            m[(i, j)] += v[i] * v[j].conj() * s;
        }
    }
}

/// Leading eigenvector of a small Hermitian matrix.
fn top_eigenvector(m: &ComplexMatrix) -> Vec<C64> {
    let eig = hermitian_eig_with(&m.hermitian_part(), f64::INFINITY).expect("Hermitian by construction");
    eig.eigenvectors.column(0)
}

/// (I ⊗ <b|) E (I ⊗ |b>)
fn contract_y(e: &ComplexMatrix, b: &[C64], dx: usize, dy: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dx, dx, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..dy {
            for t in 0..dy {
                acc += b[s].conj() * e[(i * dy + s, j * dy + t)] * b[t];
            }
        }
        acc
    })
}

/// (<a| ⊗ I) E (|a> ⊗ I)
fn contract_x(e: &ComplexMatrix, a: &[C64], dx: usize, dy: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dy, dy, |s, t| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..dx {
            for j in 0..dx {
                acc += a[i].conj() * e[(i * dy + s, j * dy + t)] * a[j];
            }
        }
        acc
    })
}

#[derive(Clone)]
struct State {
    weights: Vec<f64>,
    xs: Vec<Vec<C64>>,
    ys: Vec<Vec<C64>>,
    vs: Vec<Vec<C64>>,
}

impl State {
    /// NNLS on the Gram system of the current product projectors.
    fn refit_weights(&mut self, rho: &ComplexMatrix) {
        let k = self.vs.len();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = inner(&self.vs[i], &self.vs[j]).norm_sqr();
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        let h: Vec<f64> = self.vs.iter().map(|v| expectation(rho, v)).collect();
        self.weights = nnls_gram(&g, &h);
    }

    fn residual_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut r = rho.clone();
        for (v, &w) in self.vs.iter().zip(&self.weights) {
            if w != 0.0 {
                add_projector(&mut r, v, -w);
            }
        }
        r
    }

    /// Replaces each factor by the maximizer of its overlap with the
    /// environment left by all other terms. Returns the new residual matrix.
    fn update_factors(&mut self, rho: &ComplexMatrix, dx: usize, dy: usize) -> ComplexMatrix {
        let mut r = self.residual_matrix(rho);
        for k in 0..self.vs.len() {
            let w = self.weights[k];
            add_projector(&mut r, &self.vs[k], w);
            self.xs[k] = top_eigenvector(&contract_y(&r, &self.ys[k], dx, dy));
            self.ys[k] = top_eigenvector(&contract_x(&r, &self.xs[k], dx, dy));
            self.vs[k] = product_vector(&self.xs[k], &self.ys[k]);
            add_projector(&mut r, &self.vs[k], -w);
        }
        r
    }

    /// One sweep followed by the weight refit; returns the new residual.
    fn sweep(&mut self, rho: &ComplexMatrix, dx: usize, dy: usize) -> f64 {
        self.update_factors(rho, dx, dy);
        self.refit_weights(rho);
        self.residual_matrix(rho).frobenius_norm()
    }

    /// Terms that drift onto the same product vector slow the fit to a crawl.
    /// Fuses the most overlapping active pair, frees the lighter slot and
    /// keeps the result only if a sweep then beats `current`.
    fn try_merge(&self, rho: &ComplexMatrix, dx: usize, dy: usize, current: f64) -> Option<(State, f64)> {
        let active: Vec<usize> = (0..self.vs.len()).filter(|&k| self.weights[k] > 0.0).collect();
        let mut pair = None;
        let mut best = MERGE_OVERLAP;
        for (n, &i) in active.iter().enumerate() {
            for &j in &active[n + 1..] {
                let o = inner(&self.vs[i], &self.vs[j]).norm_sqr();
                if o > best {
                    best = o;
                    pair = Some((i, j));
                }
            }
        }
        let (i, j) = pair?;
        let (keep, free) = if self.weights[i] >= self.weights[j] { (i, j) } else { (j, i) };
        let mut cand = self.clone();
        cand.weights[keep] += cand.weights[free];
        cand.weights[free] = 0.0;
        let r = cand.sweep(rho, dx, dy);
        (r < current).then_some((cand, r))
    }
}

const MERGE_OVERLAP: f64 = 0.9;
const POLISH_EVERY: usize = 25;
const POLISH_STEPS: usize = 30;

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real coordinates of a Hermitian n × n matrix whose Euclidean norm is the
/// Frobenius norm: diagonal real parts, then √2·Re and √2·Im above it.
fn hermitian_coords(m: &ComplexMatrix, mut put: impl FnMut(usize, f64)) {
    let n = m.rows();
    let mut t = 0;
    for i in 0..n {
        put(t, m[(i, i)].re);
        t += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            put(t, SQRT_2 * m[(i, j)].re);
            put(t + 1, SQRT_2 * m[(i, j)].im);
            t += 2;
        }
    }
}

/// Σ_k |a_k b_k><a_k b_k| − ρ in [`hermitian_coords`].
fn lm_residual(rho: &ComplexMatrix, a: &[Vec<C64>], b: &[Vec<C64>]) -> DVector<f64> {
    let n = rho.rows();
    let mut m = rho.scale(-1.0);
    for (a, b) in a.iter().zip(b) {
        add_projector(&mut m, &product_vector(a, b), 1.0);
    }
    let mut r = DVector::zeros(n * n);
    hermitian_coords(&m, |t, v| r[t] = v);
    r
}

/// Levenberg–Marquardt on the unnormalized product vectors (a_k, b_k) of the
/// active terms, w_k = ‖a_k‖² ‖b_k‖². Steps solve the n²-sized system
/// (J Jᵀ + λ I) y = r, δ = −Jᵀ y, so the cost does not grow with K.
/// Only terms with weight above `keep_above` take part; the others are dropped.
fn polish(state: &State, rho: &ComplexMatrix, dx: usize, dy: usize, steps: usize, keep_above: f64) -> Option<State> {
    let n = dx * dy;
    let active: Vec<usize> = (0..state.vs.len()).filter(|&k| state.weights[k] > keep_above).collect();
    if active.is_empty() {
        return None;
    }
    let mut a: Vec<Vec<C64>> = active
        .iter()
        .map(|&k| state.xs[k].iter().map(|z| z * state.weights[k].sqrt()).collect())
        .collect();
    let mut b: Vec<Vec<C64>> = active.iter().map(|&k| state.ys[k].clone()).collect();
    let per_term = 2 * (dx + dy);
    let cols = per_term * active.len();
    let mut r = lm_residual(rho, &a, &b);
    let mut lambda = 1e-6;
    let mut improved = false;
    for _ in 0..steps {
        let mut jac = DMatrix::<f64>::zeros(n * n, cols);
        for (t, (ak, bk)) in a.iter().zip(&b).enumerate() {
            let v = product_vector(ak, bk);
            let mut col = t * per_term;
            for (side, len) in [(0, dx), (1, dy)] {
                for p in 0..len {
                    for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                        let mut dv = vec![C64::new(0.0, 0.0); n];
                        if side == 0 {
                            for s in 0..dy {
                                dv[p * dy + s] = unit * bk[s];
                            }
                        } else {
                            for q in 0..dx {
                                dv[q * dy + p] = unit * ak[q];
                            }
                        }
                        let d = ComplexMatrix::from_fn(n, n, |i, j| dv[i] * v[j].conj() + v[i] * dv[j].conj());
                        hermitian_coords(&d, |t, x| jac[(t, col)] = x);
                        col += 1;
                    }
                }
            }
        }
        let jjt = &jac * jac.transpose();
        let current = r.norm();
        loop {
            let mut sys = jjt.clone();
            for i in 0..sys.nrows() {
                sys[(i, i)] += lambda;
            }
            let Some(chol) = sys.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = -(jac.transpose() * chol.solve(&r));
            let mut ta = a.clone();
            let mut tb = b.clone();
            for (t, (ak, bk)) in ta.iter_mut().zip(tb.iter_mut()).enumerate() {
                let base = t * per_term;
                for p in 0..dx {
                    ak[p] += C64::new(delta[base + 2 * p], delta[base + 2 * p + 1]);
                }
                for p in 0..dy {
                    bk[p] += C64::new(delta[base + 2 * dx + 2 * p], delta[base + 2 * dx + 2 * p + 1]);
                }
            }
            let trial = lm_residual(rho, &ta, &tb);
            if trial.norm() < current {
                a = ta;
                b = tb;
                r = trial;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e6 {
                break;
            }
        }
        if lambda > 1e6 || r.norm() >= current * (1.0 - 1e-3) {
            break;
        }
    }
    if !improved && active.len() == (0..state.vs.len()).filter(|&k| state.weights[k] > 0.0).count() {
        return None;
    }
    let mut out = state.clone();
    for k in 0..out.weights.len() {
        if !active.contains(&k) {
            out.weights[k] = 0.0;
        }
    }
    for (t, &k) in active.iter().enumerate() {
        let (na, nb) = (norm(&a[t]), norm(&b[t]));
        if na == 0.0 || nb == 0.0 {
            continue;
        }
        out.xs[k] = a[t].iter().map(|z| z / na).collect();
        out.ys[k] = b[t].iter().map(|z| z / nb).collect();
        out.vs[k] = product_vector(&out.xs[k], &out.ys[k]);
    }
    out.refit_weights(rho);
    Some(out)
}

/// Best polish over the full active set and over subsets without the
/// lightest terms, which the joint step is slow to drive to zero.
fn polish_best(state: &State, rho: &ComplexMatrix, dx: usize, dy: usize, current: f64) -> Option<(State, f64)> {
    let heaviest = state.weights.iter().copied().fold(0.0, f64::max);
    [0.0, 1e-4, 1e-3, 1e-2]
        .into_iter()
        .filter_map(|f| polish(state, rho, dx, dy, POLISH_STEPS, f * heaviest))
        .map(|s| {
            let r = s.residual_matrix(rho).frobenius_norm();
            (s, r)
        })
        .filter(|(_, r)| *r < current)
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// NNLS weights for the product projectors |a_k b_k><a_k b_k| of `keep`.
pub(crate) fn refit_subset(rho: &ComplexMatrix, outcome: &RestartOutcome, keep: &[usize]) -> Vec<f64> {
    let vs: Vec<Vec<C64>> = keep
        .iter()
        .map(|&k| product_vector(&outcome.xs[k], &outcome.ys[k]))
        .collect();
    let mut state = State {
        weights: vec![0.0; keep.len()],
        xs: vec![],
        ys: vec![],
        vs,
    };
    state.refit_weights(rho);
    state.weights
}

pub(crate) fn run_restart(rho: &ComplexMatrix, params: &RestartParams, index: usize, seed: u64) -> RestartOutcome {
    let (dx, dy) = (params.dx, params.dy);
    let mut rng = rng_from_seed(seed);
    let xs: Vec<Vec<C64>> = (0..params.n_terms).map(|_| random_unit_vector(dx, &mut rng)).collect();
    let ys: Vec<Vec<C64>> = (0..params.n_terms).map(|_| random_unit_vector(dy, &mut rng)).collect();
    let vs = xs.iter().zip(&ys).map(|(a, b)| product_vector(a, b)).collect();
    let mut state = State {
        weights: vec![0.0; params.n_terms],
        xs,
        ys,
        vs,
    };

    let mut trace = Vec::new();
    state.refit_weights(rho);
    let mut residual = state.residual_matrix(rho).frobenius_norm();
    if params.keep_trace {
        trace.push(residual);
    }
    let mut iterations = 0;
    while iterations < params.max_iters && residual > params.residual_floor {
        iterations += 1;
        let mut next = state.sweep(rho, dx, dy);
        if let Some((merged, r)) = state.try_merge(rho, dx, dy, next) {
            state = merged;
            next = r;
        }
        let stalled = residual - next < params.min_improvement;
        if iterations % POLISH_EVERY == 0 || stalled {
            if let Some((polished, r)) = polish_best(&state, rho, dx, dy, next) {
                state = polished;
                next = r;
            }
        }
        if params.keep_trace {
            trace.push(next);
        }
        let improvement = residual - next;
        residual = next.min(residual);
        if improvement < params.min_improvement {
            break;
        }
    }

    RestartOutcome {
        index,
        seed,
        residual: state.residual_matrix(rho).frobenius_norm(),
        iterations,
        weights: state.weights,
        xs: state.xs,
        ys: state.ys,
        trace,
    }
}
