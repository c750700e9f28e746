//! Stopping estimators and the extrapolated a posteriori error.

use crate::sparse::norm2;

/// `||r||_2 / h`: truncation-error estimate of the FEM solver.
pub fn estimator_fem(residual: &[f64], h: f64) -> f64 {
    norm2(residual) / h
}

/// `1 / (1/d_i - 1/d_{i-1})` from the energy norms of the last two iterate
/// differences; `None` when the differences do not contract.
pub fn richardson_outer_estimator(d_curr: f64, d_prev: f64) -> Option<f64> {
    if d_curr == 0.0 {
        return Some(0.0);
    }
    let denom = 1.0 / d_curr - 1.0 / d_prev;
    (denom > 0.0).then(|| 1.0 / denom)
}

/// Extrapolated energy norm and error estimate from runs at `h` and `2h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub eta: f64,
    pub error: f64,
    /// False when `||v_h|| < ||v_2h||`.
    pub monotone: bool,
}

/// `C = (n_h - n_2h) / ((2^p - 1) h^p)`, `eta = n_h + C h^p`,
/// error `= |eta^2 - n_h^2|^{1/2}`, with `n` the energy norms.
pub fn extrapolated_error(norm_h: f64, norm_2h: f64, h: f64, p: f64) -> Extrapolation {
    let c = (norm_h - norm_2h) / ((2f64.powf(p) - 1.0) * h.powf(p));
    let eta = norm_h + c * h.powf(p);
    Extrapolation { eta, error: (eta * eta - norm_h * norm_h).abs().sqrt(), monotone: norm_h >= norm_2h }
}
