//! Nonnegative least squares in Gram form.

use nalgebra::{DMatrix, DVector};

/// Minimizes `wᵀ G w − 2 hᵀ w` over `w ≥ 0` for a symmetric positive
/// semidefinite `G` (row-major, `n × n`), by the Lawson-Hanson active-set
/// method. Singular passive subsystems are solved in the least-squares sense.
pub fn nnls_gram(g: &[f64], h: &[f64]) -> Vec<f64> {
    let n = h.len();
    debug_assert_eq!(g.len(), n * n);
    let scale = h.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-14 * scale;
    let mut w = vec![0.0; n];
    let mut passive = vec![false; n];

    let gradient = |w: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| h[i] - (0..n).map(|j| g[i * n + j] * w[j]).sum::<f64>())
            .collect()
    };

    for _ in 0..3 * n + 10 {
        let grad = gradient(&w);
        let candidate = (0..n)
            .filter(|&i| !passive[i])
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a)));
        match candidate {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let z = solve_passive(g, h, &passive);
            if (0..n).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                w = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in (0..n).filter(|&i| passive[i] && z[i] <= 0.0) {
                alpha = alpha.min(w[i] / (w[i] - z[i]));
            }
            for i in 0..n {
                w[i] += alpha * (z[i] - w[i]);
                if passive[i] && w[i] <= tol * 1e-2 {
                    passive[i] = false;
                    w[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    w
}

fn solve_passive(g: &[f64], h: &[f64], passive: &[bool]) -> Vec<f64> {
    let n = h.len();
    let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
    let m = idx.len();
    let a = DMatrix::from_fn(m, m, |r, c| g[idx[r] * n + idx[c]]);
    let b = DVector::from_iterator(m, idx.iter().map(|&i| h[i]));
    let sol = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a
            .svd(true, true)
            .solve(&b, 1e-13)
            .unwrap_or_else(|_| DVector::zeros(m)),
    };
    let mut z = vec![0.0; n];
    for (k, &i) in idx.iter().enumerate() {
        z[i] = sol[k];
    }
    z
}
