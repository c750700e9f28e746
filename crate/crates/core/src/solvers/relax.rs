//! Gauss-Seidel relaxation with the residual-halving stop.

use crate::sparse::{norm2, Csr};

/// Safety cap on adaptive sweeps.
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOutcome {
    pub sweeps: usize,
    pub residual: f64,
}

/// One forward sweep, `x <- x + (D + L)^{-1} (b - A x)`.
pub fn sweep_forward(a: &Csr, b: &[f64], x: &mut [f64]) {
    for i in 0..a.nrows {
        relax_row(a, b, x, i);
    }
}

/// One backward sweep (rows in reverse order).
pub fn sweep_backward(a: &Csr, b: &[f64], x: &mut [f64]) {
    for i in (0..a.nrows).rev() {
        relax_row(a, b, x, i);
    }
}

#[inline]
fn relax_row(a: &Csr, b: &[f64], x: &mut [f64], i: usize) {
    let (cols, vals) = a.row(i);
    let mut s = b[i];
    let mut diag = 0.0;
    for (&j, &v) in cols.iter().zip(vals) {
        if j == i {
            diag = v;
        } else {
            s -= v * x[j];
        }
    }
    x[i] = s / diag;
}

/// Forward sweeps until the residual norm fails to halve.
pub fn gauss_seidel(a: &Csr, b: &[f64], x: &mut [f64]) -> RelaxOutcome {
    let mut prev = norm2(&a.residual(b, x));
    if prev == 0.0 {
        return RelaxOutcome { sweeps: 0, residual: 0.0 };
    }
    let mut sweeps = 0;
    loop {
        sweep_forward(a, b, x);
        sweeps += 1;
        let r = norm2(&a.residual(b, x));
        if r >= 0.5 * prev || sweeps == MAX_SWEEPS {
            return RelaxOutcome { sweeps, residual: r };
        }
        prev = r;
    }
}
