//! Conjugate gradients and flexible preconditioned conjugate gradients.

use crate::sparse::{axpy, dot, norm2, Csr};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Flexible CG: each new direction is `A`-orthogonalized against the previous
/// one, so a preconditioner that varies between calls is admissible.
///
/// `stop(k, r)` is evaluated after iteration `k` with the current residual.
pub fn fcg(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    stop: &mut dyn FnMut(usize, &[f64]) -> bool,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let mut r = a.residual(b, x);
    if norm2(&r) == 0.0 {
        return Ok(KrylovOutcome { iterations: 0, converged: true, residual: 0.0 });
    }
    let mut p = precond(&r);
    let mut q = vec![0.0; a.nrows];
    for k in 1..=max_iter {
        a.matvec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown(format!("non-positive curvature {pq:e} at iteration {k}")));
        }
        let alpha = dot(&p, &r) / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        if stop(k, &r) {
            return Ok(KrylovOutcome { iterations: k, converged: true, residual: norm2(&r) });
        }
        let z = precond(&r);
        let beta = -dot(&z, &q) / pq;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(KrylovOutcome { iterations: max_iter, converged: false, residual: norm2(&r) })
}

/// Unpreconditioned CG with the same stopping interface as [`fcg`].
pub fn cg(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    stop: &mut dyn FnMut(usize, &[f64]) -> bool,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let mut r = a.residual(b, x);
    let mut rr = dot(&r, &r);
    if rr == 0.0 {
        return Ok(KrylovOutcome { iterations: 0, converged: true, residual: 0.0 });
    }
    let mut p = r.clone();
    let mut q = vec![0.0; a.nrows];
    for k in 1..=max_iter {
        a.matvec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown(format!("non-positive curvature {pq:e} at iteration {k}")));
        }
        let alpha = rr / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        if stop(k, &r) {
            return Ok(KrylovOutcome { iterations: k, converged: true, residual: norm2(&r) });
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Ok(KrylovOutcome { iterations: max_iter, converged: false, residual: norm2(&r) })
}
