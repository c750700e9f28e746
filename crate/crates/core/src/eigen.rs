//! Extreme eigenvalues of symmetric operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::{dot, norm2};

/// Outcome of a Lanczos run for the largest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosResult {
    pub value: f64,
    /// Residual bound `|beta_k s_k|` of the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos settings.
#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    pub max_iter: usize,
    /// Convergence when the Ritz residual is below `tol * |value|`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig { max_iter: 400, tol: 1e-10, seed: 0x5eed }
    }
}

/// Largest eigenvalue of the symmetric operator `op` acting on `R^n`,
/// using Lanczos with full reorthogonalization.
pub fn lanczos_largest(n: usize, op: &mut dyn FnMut(&[f64], &mut [f64]), cfg: LanczosConfig) -> LanczosResult {
    assert!(n > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let max_iter = cfg.max_iter.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut last = LanczosResult { value: 0.0, residual: f64::INFINITY, iterations: 0, converged: false };
    for k in 0..max_iter {
        op(&basis[k], &mut w);
        let a = dot(&basis[k], &w);
        alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&basis[k]) {
            *wi -= a * vi;
        }
        if k > 0 {
            let b = beta[k - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[k - 1]) {
                *wi -= b * vi;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm2(&w);
        let steps = k + 1;
        let check = steps == max_iter || b <= 1e-14 * a.abs().max(1e-300) || steps % 4 == 0 || steps < 4;
        if check {
            let (value, s_last) = top_ritz(&alpha, &beta);
            let residual = (b * s_last).abs();
            last = LanczosResult {
                value,
                residual,
                iterations: steps,
                converged: residual <= cfg.tol * value.abs() || b <= 1e-14 * value.abs(),
            };
            if last.converged {
                return last;
            }
        }
        if steps == max_iter {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    last
}

/// Largest eigenvalue of the tridiagonal matrix and the last component of its eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let e = SymmetricEigen::new(t);
    let (imax, &value) = e.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    (value, e.eigenvectors[(k - 1, imax)])
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn dense_eigenvalues(a: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
