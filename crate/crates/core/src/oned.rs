//! One-dimensional interface problem `-(a u')' = 1` on `(0, 1)`,
//! `u(0) = 0`, `a u'(1) = 2`, with `a = a0` on `(0, gamma)` and `a1` on `(gamma, 1)`.
//!
//! Everything is assembled densely and integrated exactly (all integrands
//! are piecewise quadratic), so this module serves as a small reference
//! for the rate, angle and conditioning behaviour of each enrichment.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{condition_number, subspace_angle, ConditionMode};
use crate::enrichment::EnrichmentScheme;
use crate::sparse::Csr;
use crate::{Error, Result};

/// Relative distance (in units of `h`) below which the interface counts as lying on a node.
pub const SAFETY_TOL: f64 = 1e-14;

/// Default enrichment radius for the geometric scheme in 1-D.
pub const DEFAULT_RADIUS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDProblem {
    pub gamma: f64,
    pub a0: f64,
    pub a1: f64,
    pub m: usize,
}

impl OneDProblem {
    pub fn new(gamma: f64, a0: f64, a1: f64, m: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) || !(a0 > 0.0 && a1 > 0.0) || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "1-D problem needs 0 < gamma < 1, a0, a1 > 0 and m > 0 (gamma={gamma}, a0={a0}, a1={a1}, m={m})"
            )));
        }
        Ok(OneDProblem { gamma, a0, a1, m })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn coefficient(&self, x: f64) -> f64 {
        if x < self.gamma {
            self.a0
        } else {
            self.a1
        }
    }

    /// Exact flux `a u' = 3 - x`.
    pub fn exact_derivative(&self, x: f64) -> f64 {
        (3.0 - x) / self.coefficient(x)
    }

    pub fn exact(&self, x: f64) -> f64 {
        let prim = |t: f64| 3.0 * t - 0.5 * t * t;
        if x <= self.gamma {
            prim(x) / self.a0
        } else {
            prim(self.gamma) / self.a0 + (prim(x) - prim(self.gamma)) / self.a1
        }
    }

    /// `||u||_E^2 = int (3 - x)^2 / a`.
    pub fn exact_energy(&self) -> f64 {
        let prim = |t: f64| -(3.0 - t).powi(3) / 3.0;
        (prim(self.gamma) - prim(0.0)) / self.a0 + (prim(1.0) - prim(self.gamma)) / self.a1
    }

    /// Index `c` of the element `[x_{c-1}, x_c]` containing the interface.
    pub fn interface_element(&self) -> usize {
        ((self.gamma * self.m as f64).floor() as usize + 1).min(self.m)
    }

    /// True when the interface is within `SAFETY_TOL * h` of a node.
    pub fn near_node(&self) -> bool {
        let h = self.h();
        let c = self.interface_element();
        let left = self.gamma - (c - 1) as f64 * h;
        let right = c as f64 * h - self.gamma;
        left.min(right) <= SAFETY_TOL * h
    }
}

/// Dense system of one discretization, before and after unit-diagonal scaling.
#[derive(Debug, Clone)]
pub struct OneDSystem {
    pub problem: OneDProblem,
    pub scheme: EnrichmentScheme,
    /// Enriched node indices, after dropping node 0 where `w(0) != 0` and null functions.
    pub enriched: Vec<usize>,
    /// Set when the safety check removed the enrichment altogether.
    pub safety_dropped: bool,
    pub a_hat: DMatrix<f64>,
    pub f_hat: DVector<f64>,
    pub d: DVector<f64>,
    pub a: DMatrix<f64>,
    pub f: DVector<f64>,
}

impl OneDSystem {
    pub fn n1(&self) -> usize {
        self.problem.m
    }

    pub fn n2(&self) -> usize {
        self.enriched.len()
    }

    fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Csr {
        let rows: Vec<Vec<f64>> = (0..nr).map(|i| (0..nc).map(|j| self.a[(r0 + i, c0 + j)]).collect()).collect();
        Csr::from_dense(&rows)
    }

    /// Scaled blocks `(A11, A12, A22)` as sparse matrices.
    pub fn blocks(&self) -> (Csr, Csr, Csr) {
        let (n1, n2) = (self.n1(), self.n2());
        (self.block(0, n1, 0, n1), self.block(0, n1, n1, n2), self.block(n1, n2, n1, n2))
    }
}

/// The enrichment `w` of a scheme.
fn enrichment_value(p: &OneDProblem, scheme: EnrichmentScheme, x: f64) -> f64 {
    let h = p.h();
    let c = p.interface_element();
    let (xl, xr) = ((c - 1) as f64 * h, c as f64 * h);
    let wstar = |t: f64| (t - p.gamma).abs();
    match scheme {
        EnrichmentScheme::None => 0.0,
        EnrichmentScheme::Topological | EnrichmentScheme::Geometric { .. } => wstar(x),
        EnrichmentScheme::Sgfem => {
            if x <= xl || x >= xr {
                0.0
            } else {
                let s = (x - xl) / h;
                wstar(x) - ((1.0 - s) * wstar(xl) + s * wstar(xr))
            }
        }
        EnrichmentScheme::MGfem => {
            if x >= xl && x <= xr {
                wstar(x)
            } else if x < xl && x >= xl - h {
                wstar(xl) * (x - (xl - h)) / h
            } else if x > xr && x <= xr + h {
                wstar(xr) * ((xr + h) - x) / h
            } else {
                0.0
            }
        }
    }
}

fn candidate_nodes(p: &OneDProblem, scheme: EnrichmentScheme) -> Vec<usize> {
    let c = p.interface_element();
    let h = p.h();
    match scheme {
        EnrichmentScheme::None => Vec::new(),
        EnrichmentScheme::Topological | EnrichmentScheme::Sgfem => vec![c - 1, c],
        EnrichmentScheme::MGfem => (c.saturating_sub(2)..=(c + 1).min(p.m)).collect(),
        EnrichmentScheme::Geometric { r } => (0..=p.m).filter(|&i| (i as f64 * h - p.gamma).abs() <= r).collect(),
    }
}

/// Breakpoints of element `e` (1-based): its end points and the interface when inside.
fn pieces(p: &OneDProblem, e: usize) -> Vec<(f64, f64)> {
    let h = p.h();
    let (l, r) = ((e - 1) as f64 * h, e as f64 * h);
    if p.gamma > l && p.gamma < r {
        vec![(l, p.gamma), (p.gamma, r)]
    } else {
        vec![(l, r)]
    }
}

/// Hat function `N_i` and its derivative at `x` on element `e` (`i` in `{e-1, e}`).
fn hat(p: &OneDProblem, i: usize, e: usize, x: f64) -> (f64, f64) {
    let h = p.h();
    let xl = (e - 1) as f64 * h;
    let s = (x - xl) / h;
    if i + 1 == e {
        (1.0 - s, -1.0 / h)
    } else {
        (s, 1.0 / h)
    }
}

/// A basis function restricted to one element: `(node, enriched)`.
type Local = (usize, bool);

/// Value and derivative of a local basis function on the sub-interval `(l, r)` of element `e`.
fn eval(p: &OneDProblem, scheme: EnrichmentScheme, f: Local, e: usize, (l, r): (f64, f64), x: f64) -> (f64, f64) {
    let (n, dn) = hat(p, f.0, e, x);
    if !f.1 {
        return (n, dn);
    }
    let (wl, wr) = (enrichment_value(p, scheme, l), enrichment_value(p, scheme, r));
    let dw = (wr - wl) / (r - l);
    let w = wl + dw * (x - l);
    (w * n, dw * n + w * dn)
}

/// Simpson's rule, exact for the quadratic integrands of this module.
fn simpson(l: f64, r: f64, g: impl Fn(f64) -> f64) -> f64 {
    (r - l) / 6.0 * (g(l) + 4.0 * g(0.5 * (l + r)) + g(r))
}

/// Dense assembly with exact integration and unit-diagonal scaling.
pub fn assemble_1d(problem: OneDProblem, scheme: EnrichmentScheme) -> Result<OneDSystem> {
    let p = &problem;
    let m = p.m;
    let safety_dropped = !scheme.is_fem() && p.near_node();
    let mut enriched = if safety_dropped { Vec::new() } else { candidate_nodes(p, scheme) };
    // w N_0 must vanish at x = 0 to respect the essential condition.
    if enriched.first() == Some(&0) && enrichment_value(p, scheme, 0.0) != 0.0 {
        enriched.remove(0);
    }
    let mut slot = vec![None; m + 1];
    for (k, &i) in enriched.iter().enumerate() {
        slot[i] = Some(k);
    }
    let index = |f: Local| -> Option<usize> {
        if f.1 {
            slot[f.0].map(|k| m + k)
        } else if f.0 == 0 {
            None
        } else {
            Some(f.0 - 1)
        }
    };
    let n = m + enriched.len();
    let mut a_hat = DMatrix::<f64>::zeros(n, n);
    let mut f_hat = DVector::<f64>::zeros(n);
    for e in 1..=m {
        let locals: Vec<(Local, usize)> = [(e - 1, false), (e, false), (e - 1, true), (e, true)]
            .into_iter()
            .filter_map(|f| index(f).map(|i| (f, i)))
            .collect();
        for piece in pieces(p, e) {
            let a = p.coefficient(0.5 * (piece.0 + piece.1));
            for &(fi, i) in &locals {
                f_hat[i] += simpson(piece.0, piece.1, |x| eval(p, scheme, fi, e, piece, x).0);
                for &(fj, j) in &locals {
                    a_hat[(i, j)] += a * simpson(piece.0, piece.1, |x| {
                        eval(p, scheme, fi, e, piece, x).1 * eval(p, scheme, fj, e, piece, x).1
                    });
                }
            }
        }
    }
    // Neumann datum g = 2 at x = 1.
    let last = (m, m, (1.0 - p.h(), 1.0));
    for enr in [false, true] {
        if let Some(i) = index((m, enr)) {
            f_hat[i] += 2.0 * eval(p, scheme, (m, enr), last.0, last.2, 1.0).0;
        }
    }
    // Null enrichment functions (w = 0 on the whole support) are removed.
    let keep: Vec<usize> = (0..n).filter(|&i| i < m || a_hat[(i, i)] > 0.0).collect();
    if keep.len() < n {
        enriched = enriched.iter().enumerate().filter(|(k, _)| a_hat[(m + k, m + k)] > 0.0).map(|(_, &i)| i).collect();
        a_hat = a_hat.select_rows(&keep).select_columns(&keep);
        f_hat = f_hat.select_rows(&keep);
    }
    let d = a_hat.diagonal().map(|v| 1.0 / v.sqrt());
    let a = DMatrix::from_fn(a_hat.nrows(), a_hat.ncols(), |i, j| d[i] * a_hat[(i, j)] * d[j]);
    let f = f_hat.component_mul(&d);
    Ok(OneDSystem { problem, scheme, enriched, safety_dropped, a_hat, f_hat, d, a, f })
}

/// Results of a direct 1-D solve.
#[derive(Debug, Clone)]
pub struct OneDResult {
    pub system: OneDSystem,
    /// Unscaled coefficients `(c1, c2)`.
    pub coefficients: DVector<f64>,
    pub error: f64,
    pub relative_error: f64,
    pub kappa_a: f64,
    pub kappa_a11: f64,
    pub kappa_a22: Option<f64>,
    pub angle_degrees: Option<f64>,
}

impl OneDResult {
    /// Discrete solution at `x`.
    pub fn value(&self, x: f64) -> f64 {
        let s = &self.system;
        let p = &s.problem;
        let e = ((x * p.m as f64).ceil() as usize).clamp(1, p.m);
        let piece = pieces(p, e).into_iter().find(|pc| x >= pc.0 && x <= pc.1).expect("x in element");
        local_sum(s, &self.coefficients, e, piece, x).0
    }
}

fn local_sum(s: &OneDSystem, c: &DVector<f64>, e: usize, piece: (f64, f64), x: f64) -> (f64, f64) {
    let p = &s.problem;
    let m = p.m;
    let mut out = (0.0, 0.0);
    for node in [e - 1, e] {
        if node > 0 {
            let (v, dv) = eval(p, s.scheme, (node, false), e, piece, x);
            out.0 += c[node - 1] * v;
            out.1 += c[node - 1] * dv;
        }
        if let Some(k) = s.enriched.iter().position(|&i| i == node) {
            let (v, dv) = eval(p, s.scheme, (node, true), e, piece, x);
            out.0 += c[m + k] * v;
            out.1 += c[m + k] * dv;
        }
    }
    out
}

/// `||u - u_h||_E` integrated directly, piece by piece.
pub fn energy_error(s: &OneDSystem, c: &DVector<f64>) -> f64 {
    let p = &s.problem;
    let mut total = 0.0;
    for e in 1..=p.m {
        for piece in pieces(p, e) {
            let a = p.coefficient(0.5 * (piece.0 + piece.1));
            // The exact derivative is (3 - x) / a with the coefficient of this piece.
            total += a * simpson(piece.0, piece.1, |x| {
                let d = (3.0 - x) / a - local_sum(s, c, e, piece, x).1;
                d * d
            });
        }
    }
    total.max(0.0).sqrt()
}

/// Dense direct solve followed by error, conditioning and angle evaluation.
pub fn solve_1d(problem: OneDProblem, scheme: EnrichmentScheme) -> Result<OneDResult> {
    let system = assemble_1d(problem, scheme)?;
    let chol = system.a.clone().cholesky().ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
    let x = chol.solve(&system.f);
    let coefficients = x.component_mul(&system.d);
    let error = energy_error(&system, &coefficients);
    let relative_error = error / problem.exact_energy().sqrt();
    let (a11, a12, a22) = system.blocks();
    let kappa_a11 = condition_number(&a11, ConditionMode::Dense, None)?.kappa;
    let (kappa_a, kappa_a22, angle_degrees) = if system.n2() == 0 {
        (kappa_a11, None, None)
    } else {
        let full = crate::sparse::block_matrix(&a11, &a12, &a22);
        let ka = condition_number(&full, ConditionMode::Dense, None)?.kappa;
        let k22 = condition_number(&a22, ConditionMode::Dense, None)?.kappa;
        let angle = subspace_angle(&a11, &a12, &a22)?.theta_degrees;
        (ka, Some(k22), Some(angle))
    };
    Ok(OneDResult { system, coefficients, error, relative_error, kappa_a, kappa_a11, kappa_a22, angle_degrees })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA: f64 = (2.0 + std::f64::consts::FRAC_1_PI) / 5.0;

    #[test]
    fn exact_solution_satisfies_the_boundary_value_problem() {
        let p = OneDProblem::new(GAMMA, 1.0, 10.0, 10).unwrap();
        assert_eq!(p.exact(0.0), 0.0);
        // Continuity at gamma and a u'(1) = 2.
        let eps = 1e-9;
        assert!((p.exact(GAMMA - eps) - p.exact(GAMMA + eps)).abs() < 1e-8);
        assert!((p.a1 * p.exact_derivative(1.0) - 2.0).abs() < 1e-14);
        // Energy equals F(u) = int u + 2 u(1), integrated by composite Gauss.
        let (gx, gw) = crate::quadrature::gauss_legendre(8);
        let mut fu = 2.0 * p.exact(1.0);
        for (l, r) in [(0.0, GAMMA), (GAMMA, 1.0)] {
            fu += gx.iter().zip(&gw).map(|(x, w)| w * (r - l) * p.exact(l + x * (r - l))).sum::<f64>();
        }
        assert!((fu - p.exact_energy()).abs() < 1e-12);
    }

    #[test]
    fn block_sizes() {
        let p = OneDProblem::new(GAMMA, 1.0, 10.0, 40).unwrap();
        assert_eq!(assemble_1d(p, EnrichmentScheme::Sgfem).unwrap().n2(), 2);
        assert_eq!(assemble_1d(p, EnrichmentScheme::Topological).unwrap().n2(), 2);
        assert_eq!(assemble_1d(p, EnrichmentScheme::MGfem).unwrap().n2(), 4);
    }

    #[test]
    fn interface_on_a_node_falls_back_to_fem() {
        let p = OneDProblem::new(0.5, 1.0, 10.0, 16).unwrap();
        let r = solve_1d(p, EnrichmentScheme::Sgfem).unwrap();
        assert!(r.system.safety_dropped && r.system.n2() == 0);
        // Mesh-aligned interface: FEM is exact at the nodes.
        for i in 1..=16 {
            let x = i as f64 / 16.0;
            assert!((r.value(x) - p.exact(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn galerkin_orthogonality() {
        for scheme in
            [EnrichmentScheme::None, EnrichmentScheme::Topological, EnrichmentScheme::MGfem, EnrichmentScheme::Sgfem]
        {
            let p = OneDProblem::new(GAMMA, 1.0, 10.0, 20).unwrap();
            let r = solve_1d(p, scheme).unwrap();
            let uh = r.coefficients.dot(&(&r.system.a_hat * &r.coefficients));
            let gap = (p.exact_energy() - uh).sqrt();
            assert!((gap - r.error).abs() < 1e-9, "{} {gap} {}", scheme.name(), r.error);
        }
    }

    #[test]
    fn sparse_diagnostics_match_dense_eigenvalues() {
        let p = OneDProblem::new(GAMMA, 1.0, 10.0, 20).unwrap();
        let r = solve_1d(p, EnrichmentScheme::MGfem).unwrap();
        let ev = crate::eigen::dense_eigenvalues(r.system.a.clone());
        let kappa = ev[ev.len() - 1] / ev[0];
        assert!((kappa - r.kappa_a).abs() <= 1e-10 * kappa);
        // cos^2 of the angle from the dense pencil.
        let n1 = r.system.n1();
        let a = &r.system.a;
        let a11 = a.view((0, 0), (n1, n1)).into_owned();
        let a12 = a.view((0, n1), (n1, 4)).into_owned();
        let a22 = a.view((n1, n1), (4, 4)).into_owned();
        let l = a22.cholesky().unwrap().l();
        let linv = l.try_inverse().unwrap();
        let m = &linv * a12.transpose() * a11.try_inverse().unwrap() * &a12 * linv.transpose();
        let lam = crate::eigen::dense_eigenvalues(m).pop().unwrap();
        let theta = lam.sqrt().acos().to_degrees();
        assert!((theta - r.angle_degrees.unwrap()).abs() < 1e-8);
    }
}
