//! Condition numbers, subspace angles, discretization errors and rate fits.

use crate::eigen::{dense_eigenvalues, lanczos_largest, LanczosConfig};
use crate::interface::{InterfaceGeometry, Side, SubTriangle};
use crate::manufactured::ExactSolution;
use crate::problem::Discretization;
use crate::quadrature::{gauss_legendre, TriangleRule};
use crate::skyline::SkylineCholesky;
use crate::sparse::Csr;
use crate::{Error, Point, Result};

/// Matrices up to this order use a dense eigendecomposition in [`ConditionMode::Auto`].
pub const DENSE_LIMIT: usize = 1000;

/// Eigenvalues below this fraction of the largest count as numerical rank deficiency.
pub const RANK_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionMode {
    Dense,
    Lanczos,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionMethod {
    Dense,
    Lanczos,
}

impl ConditionMethod {
    pub fn name(self) -> &'static str {
        match self {
            ConditionMethod::Dense => "dense",
            ConditionMethod::Lanczos => "lanczos",
        }
    }
}

/// Spectral condition number with its extreme eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioning {
    pub kappa: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub method: ConditionMethod,
    /// False when an extreme-eigenvalue iteration hit its cap.
    pub converged: bool,
    pub rank_deficient: bool,
}

/// `kappa_2` of a symmetric positive definite matrix. `order` is the
/// elimination ordering used by the Lanczos path's factorization.
pub fn condition_number(a: &Csr, mode: ConditionMode, order: Option<&[usize]>) -> Result<Conditioning> {
    let n = a.nrows;
    if n == 0 || a.ncols != n {
        return Err(Error::InvalidArgument(format!("condition number of a {}x{} matrix", a.nrows, a.ncols)));
    }
    let dense = match mode {
        ConditionMode::Dense => true,
        ConditionMode::Lanczos => false,
        ConditionMode::Auto => n <= DENSE_LIMIT,
    };
    let (lmin, lmax, method, converged) = if dense {
        let ev = dense_eigenvalues(a.to_dense());
        (ev[0], ev[n - 1], ConditionMethod::Dense, true)
    } else {
        let cfg = LanczosConfig::default();
        let top = lanczos_largest(n, &mut |x, y| a.matvec_into(x, y), cfg);
        let perm = order.map_or_else(|| (0..n).collect(), <[usize]>::to_vec);
        let chol = SkylineCholesky::factor_permuted(a, perm)?;
        let inv = lanczos_largest(
            n,
            &mut |x, y| {
                let mut t = chol.to_permuted(x);
                chol.forward(&mut t);
                chol.backward(&mut t);
                y.copy_from_slice(&chol.from_permuted(&t));
            },
            cfg,
        );
        (1.0 / inv.value, top.value, ConditionMethod::Lanczos, top.converged && inv.converged)
    };
    if !(lmin > 0.0) && !dense {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: lmin });
    }
    Ok(Conditioning {
        kappa: lmax / lmin,
        lambda_min: lmin,
        lambda_max: lmax,
        method,
        converged,
        rank_deficient: lmin <= RANK_FLOOR * lmax,
    })
}

/// Condition numbers of the scaled full matrix and its diagonal blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningReport {
    pub kappa_a: Conditioning,
    pub kappa_a11: Conditioning,
    pub kappa_a22: Option<Conditioning>,
}

pub fn conditioning_report(d: &Discretization, mode: ConditionMode) -> Result<ConditioningReport> {
    let s = &d.scaled;
    let kappa_a11 = condition_number(&s.a11, mode, None)?;
    if !s.has_enrichment() {
        return Ok(ConditioningReport { kappa_a: kappa_a11, kappa_a11, kappa_a22: None });
    }
    let kappa_a = condition_number(&s.full_matrix(), mode, Some(s.interleaved_order()))?;
    let kappa_a22 = condition_number(&s.a22, mode, None)?;
    Ok(ConditioningReport { kappa_a, kappa_a11, kappa_a22: Some(kappa_a22) })
}

/// Smallest angle between the FEM and enrichment subspaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleReport {
    pub theta_degrees: f64,
    /// Largest eigenvalue of the pencil `(A21 A11^{-1} A12, A22)`, i.e. `cos^2 theta`.
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the pencil `A21 A11^{-1} A12 v = lambda A22 v` for its largest eigenvalue.
///
/// With `A22 = L L^T`, Lanczos runs on the symmetric operator
/// `L^{-1} A21 A11^{-1} A12 L^{-T}`, so the blocks may be scaled or not.
pub fn subspace_angle(a11: &Csr, a12: &Csr, a22: &Csr) -> Result<AngleReport> {
    let n2 = a22.nrows;
    if n2 == 0 {
        return Err(Error::NoEnrichment);
    }
    let l22 = SkylineCholesky::factor(a22).map_err(|e| match e {
        Error::NotPositiveDefinite { index, pivot } => Error::NonPositiveDiagonal { block: "A22", index, value: pivot },
        other => other,
    })?;
    let l11 = SkylineCholesky::factor(a11)?;
    let a21 = a12.transpose();
    let mut op = |y: &[f64], out: &mut [f64]| {
        let mut z = y.to_vec();
        l22.backward(&mut z);
        let v = l22.from_permuted(&z);
        let t = a12.matvec(&v);
        let s = l11.solve(&t);
        let u = a21.matvec(&s);
        let mut r = l22.to_permuted(&u);
        l22.forward(&mut r);
        out.copy_from_slice(&r);
    };
    let cfg = LanczosConfig { max_iter: 500, tol: 1e-10, seed: 0xa11e };
    let res = lanczos_largest(n2, &mut op, cfg);
    let lambda = res.value.clamp(0.0, 1.0);
    Ok(AngleReport {
        theta_degrees: lambda.sqrt().acos().to_degrees(),
        lambda_max: res.value,
        iterations: res.iterations,
        converged: res.converged,
    })
}

/// `|a - b|^{1/2}` together with a flag raised when `a - b < -1e-12 |a|`.
fn energy_gap(exact: f64, discrete: f64) -> (f64, bool) {
    let diff = exact - discrete;
    (diff.abs().sqrt(), diff < -1e-12 * exact.abs().max(1.0))
}

/// Discretization error `| ||u||_E^2 - ||u_h||^2 |^{1/2}` for scaled unknowns `(x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMeasure {
    pub absolute: f64,
    pub relative: f64,
    /// Discrete energy exceeded the exact energy.
    pub negative: bool,
}

pub fn discretization_error(d: &Discretization, x1: &[f64], x2: &[f64]) -> ErrorMeasure {
    let eh = d.scaled.energy_sq(x1, x2);
    let (absolute, negative) = energy_gap(d.exact_energy, eh);
    ErrorMeasure { absolute, relative: absolute / d.exact_energy.sqrt(), negative }
}

/// Energy norm of the difference of two scaled iterates (perturbed energy for the circle).
pub fn truncation_error(d: &Discretization, x: (&[f64], &[f64]), y: (&[f64], &[f64])) -> f64 {
    let d1: Vec<f64> = x.0.iter().zip(y.0).map(|(a, b)| a - b).collect();
    let d2: Vec<f64> = x.1.iter().zip(y.1).map(|(a, b)| a - b).collect();
    d.scaled.energy_sq(&d1, &d2).max(0.0).sqrt()
}

/// `(epsilon_hat, i^h)` from `epsilon_hat^2 = epsilon^2 + delta^2`.
pub fn total_error_decomposition(epsilon: f64, delta: f64) -> (f64, f64) {
    let total = epsilon.hypot(delta);
    let ratio = if epsilon > 0.0 {
        total / epsilon
    } else if delta == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    (total, ratio)
}

/// `||u - u_h||_E^2` with the true coefficient, by quadrature that resolves
/// the curved interface exactly (polar sub-integration of crossing cells).
pub fn true_energy_error_sq(d: &Discretization, x1: &[f64], x2: &[f64]) -> f64 {
    let (c1, c2) = d.nodal_coefficients(x1, x2);
    let exact = &d.exact;
    let smooth = TriangleRule::collapsed_gauss(6);
    let integrand = |st: &SubTriangle, p: Point, side: Side| {
        let gu = exact.grad_side(p, side);
        let gh = d.gradient(&c1, &c2, st, p);
        let (dx, dy) = (gu[0] - gh[0], gu[1] - gh[1]);
        exact.coefficient_on(side) * (dx * dx + dy * dy)
    };
    let mut total = 0.0;
    for st in d.sub_triangles() {
        let pts = d.sub_points(st);
        let crossing = match exact.geometry() {
            InterfaceGeometry::Circle { xc, yc, rc } => {
                let (lo, hi) = distance_range(&pts, [xc, yc]);
                (lo < rc && rc < hi).then_some(([xc, yc], rc))
            }
            InterfaceGeometry::Straight { .. } => None,
        };
        match crossing {
            Some((c, rc)) => total += polar_integral(&pts, c, rc, &|p, side| integrand(st, p, side)),
            None => {
                let side = match exact {
                    ExactSolution::Straight(_) => st.side,
                    ExactSolution::Circle(_) => {
                        let g = [(pts[0][0] + pts[1][0] + pts[2][0]) / 3.0, (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0];
                        exact.geometry().side(g)
                    }
                };
                for (p, w) in smooth.points(&pts).iter().zip(&smooth.weights) {
                    total += st.area * w * integrand(st, *p, side);
                }
            }
        }
    }
    total
}

/// Closest and farthest distance from `c` to the triangle `t`.
fn distance_range(t: &[Point; 3], c: Point) -> (f64, f64) {
    let hi = t.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).fold(0.0, f64::max);
    let lam = crate::mesh::barycentric(t, c);
    if lam.iter().all(|&l| l >= 0.0) {
        return (0.0, hi);
    }
    let mut lo = f64::INFINITY;
    for k in 0..3 {
        let (a, b) = (t[k], t[(k + 1) % 3]);
        let ab = [b[0] - a[0], b[1] - a[1]];
        let s = (((c[0] - a[0]) * ab[0] + (c[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
        lo = lo.min((a[0] + s * ab[0] - c[0]).hypot(a[1] + s * ab[1] - c[1]));
    }
    (lo, hi)
}

/// Integrates `f(p, side)` over a triangle not containing `c`, in polar
/// coordinates about `c`, with `side = Omega0` for radii below `rc`.
fn polar_integral(t: &[Point; 3], c: Point, rc: f64, f: &dyn Fn(Point, Side) -> f64) -> f64 {
    use std::f64::consts::PI;
    const N: usize = 10;
    let (gx, gw) = gauss_legendre(N);
    let phi0 = (t[0][1] - c[1]).atan2(t[0][0] - c[0]);
    let rel = |p: Point| {
        let mut a = (p[1] - c[1]).atan2(p[0] - c[0]) - phi0;
        if a > PI {
            a -= 2.0 * PI;
        } else if a <= -PI {
            a += 2.0 * PI;
        }
        a
    };
    let mut breaks: Vec<f64> = t.iter().map(|&p| rel(p)).collect();
    for k in 0..3 {
        let (a, b) = (t[k], t[(k + 1) % 3]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let e = [a[0] - c[0], a[1] - c[1]];
        let qa = d[0] * d[0] + d[1] * d[1];
        let qb = 2.0 * (d[0] * e[0] + d[1] * e[1]);
        let qc = e[0] * e[0] + e[1] * e[1] - rc * rc;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc > 0.0 {
            for s in [(-qb - disc.sqrt()) / (2.0 * qa), (-qb + disc.sqrt()) / (2.0 * qa)] {
                if s > 0.0 && s < 1.0 {
                    breaks.push(rel([a[0] + s * d[0], a[1] + s * d[1]]));
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for win in breaks.windows(2) {
        let (b0, b1) = (win[0], win[1]);
        if b1 - b0 <= 1e-15 {
            continue;
        }
        for (xi, wi) in gx.iter().zip(&gw) {
            let phi = phi0 + b0 + xi * (b1 - b0);
            let dir = [phi.cos(), phi.sin()];
            let (mut rin, mut rout) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let det = dir[0] * (-d[1]) - dir[1] * (-d[0]);
                if det.abs() < 1e-300 {
                    continue;
                }
                let rhs = [a[0] - c[0], a[1] - c[1]];
                let r = (rhs[0] * (-d[1]) - rhs[1] * (-d[0])) / det;
                let s = (dir[0] * rhs[1] - dir[1] * rhs[0]) / det;
                if (-1e-12..=1.0 + 1e-12).contains(&s) {
                    rin = rin.min(r);
                    rout = rout.max(r);
                }
            }
            if !(rout > rin) {
                continue;
            }
            let mut pieces = vec![(rin, rout)];
            if rin < rc && rc < rout {
                pieces = vec![(rin, rc), (rc, rout)];
            }
            let mut inner = 0.0;
            for (r0, r1) in pieces {
                let side = if 0.5 * (r0 + r1) < rc { Side::Omega0 } else { Side::Omega1 };
                for (yi, vi) in gx.iter().zip(&gw) {
                    let r = r0 + yi * (r1 - r0);
                    inner += vi * (r1 - r0) * r * f([c[0] + r * dir[0], c[1] + r * dir[1]], side);
                }
            }
            total += wi * (b1 - b0) * inner;
        }
    }
    total
}

/// `| ||u - u_h||_E^2 - | ||u||_E^2 - ||u_h||^2 | |` for a discrete solution.
pub fn perturbation_gap(d: &Discretization, x1: &[f64], x2: &[f64]) -> f64 {
    let true_sq = true_energy_error_sq(d, x1, x2);
    let diff = (d.exact_energy - d.scaled.energy_sq(x1, x2)).abs();
    (true_sq - diff).abs()
}

/// Least-squares slope of `log(value)` against `log(h)`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument("rate fit needs at least two points".into()));
    }
    if let Some(&(h, v)) = pairs.iter().find(|(h, v)| !(*h > 0.0 && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!("rate fit needs positive data, got ({h}, {v})")));
    }
    let n = pairs.len() as f64;
    let (sx, sy) = pairs.iter().fold((0.0, 0.0), |(a, b), (h, v)| (a + h.ln(), b + v.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (h, v) in pairs {
        let dx = h.ln() - mx;
        sxy += dx * (v.ln() - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct mesh sizes".into()));
    }
    Ok(sxy / sxx)
}
