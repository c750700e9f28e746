//! Manufactured exact solutions, Neumann data and exact energies.

use crate::interface::{InterfaceGeometry, Side};
use crate::quadrature::gauss_legendre;
use crate::{Error, Point, Result};

/// Default exponent of the straight-interface solution.
pub const DEFAULT_ALPHA: f64 = 1.5;

/// Harmonic wedge solution for the straight interface, in polar coordinates
/// `(r, theta)` centered at `A = (-d0, 1)`. The angle is measured clockwise
/// from the ray `{x2 = 1, x1 > -d0}` (`theta = atan2(1 - x2, x1 + d0)`), which
/// keeps it in `(0, pi/2)` on the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightSolution {
    pub alpha: f64,
    pub a0: f64,
    pub a1: f64,
    /// `[A0, A1]`.
    pub a: [f64; 2],
    /// `[B0, B1]`.
    pub b: [f64; 2],
    pub c: f64,
    pub d0: f64,
    pub theta0: f64,
}

/// Degree-two harmonic solution for the circular interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSolution {
    pub a0: f64,
    pub a1: f64,
    pub xc: f64,
    pub yc: f64,
    pub rc: f64,
    pub b0: f64,
    pub b1: f64,
    pub c: f64,
}

fn check_coeffs(a0: f64, a1: f64) -> Result<()> {
    if !(a0 > 0.0 && a1 > 0.0) {
        return Err(Error::InvalidArgument(format!("coefficients must be positive, got a0={a0}, a1={a1}")));
    }
    Ok(())
}

/// Normalized straight-interface coefficients: `A0 = A1 = 1`, `B0 = 1`,
/// `B1 = a0 / a1`, and `C` from `u(0, 0) = 0`.
pub fn solve_straight_coeffs(a0: f64, a1: f64, alpha: f64, theta0: f64, d0: f64) -> Result<StraightSolution> {
    check_coeffs(a0, a1)?;
    if !(alpha >= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 1, got {alpha}")));
    }
    InterfaceGeometry::Straight { d0, theta0 }.validate()?;
    let mut s = StraightSolution { alpha, a0, a1, a: [1.0, 1.0], b: [1.0, a0 / a1], c: 0.0, d0, theta0 };
    s.c = -s.u([0.0, 0.0]);
    Ok(s)
}

/// Circle coefficients from value and flux continuity at `r = rc`, with `a0` inside.
pub fn solve_circle_coeffs(a0: f64, a1: f64, xc: f64, yc: f64, rc: f64) -> Result<CircleSolution> {
    check_coeffs(a0, a1)?;
    InterfaceGeometry::Circle { xc, yc, rc }.validate()?;
    // [rc^2, rc^-2; 2 a1 rc, -2 a1 rc^-3] [B0; B1] = [rc^2; 2 a0 rc]
    let (m11, m12, m21, m22) = (rc * rc, rc.powi(-2), 2.0 * a1 * rc, -2.0 * a1 * rc.powi(-3));
    let (r1, r2) = (rc * rc, 2.0 * a0 * rc);
    let det = m11 * m22 - m12 * m21;
    let b0 = (r1 * m22 - m12 * r2) / det;
    let b1 = (m11 * r2 - m21 * r1) / det;
    let mut s = CircleSolution { a0, a1, xc, yc, rc, b0, b1, c: 0.0 };
    s.c = -s.u([0.0, 0.0]);
    Ok(s)
}

impl StraightSolution {
    pub fn geometry(&self) -> InterfaceGeometry {
        InterfaceGeometry::Straight { d0: self.d0, theta0: self.theta0 }
    }

    fn polar(&self, p: Point) -> (f64, f64) {
        let dx = p[0] + self.d0;
        let dy = 1.0 - p[1];
        (dx.hypot(dy), dy.atan2(dx))
    }

    fn branch(&self, side: Side) -> usize {
        match side {
            Side::Omega0 => 0,
            Side::Omega1 => 1,
        }
    }

    pub fn u_side(&self, p: Point, side: Side) -> f64 {
        let k = self.branch(side);
        let (r, th) = self.polar(p);
        let phi = self.alpha * (th - self.theta0);
        r.powf(self.alpha) * (self.a[k] * phi.cos() + self.b[k] * phi.sin()) + self.c
    }

    pub fn grad_side(&self, p: Point, side: Side) -> Point {
        let k = self.branch(side);
        let (r, th) = self.polar(p);
        let al = self.alpha;
        let phi = al * (th - self.theta0);
        let ur = al * r.powf(al - 1.0) * (self.a[k] * phi.cos() + self.b[k] * phi.sin());
        let ut_r = al * r.powf(al - 1.0) * (-self.a[k] * phi.sin() + self.b[k] * phi.cos());
        let (er, et) = ([th.cos(), -th.sin()], [-th.sin(), -th.cos()]);
        [ur * er[0] + ut_r * et[0], ur * er[1] + ut_r * et[1]]
    }

    pub fn u(&self, p: Point) -> f64 {
        self.u_side(p, self.geometry().side(p))
    }
}

impl CircleSolution {
    pub fn geometry(&self) -> InterfaceGeometry {
        InterfaceGeometry::Circle { xc: self.xc, yc: self.yc, rc: self.rc }
    }

    pub fn u_side(&self, p: Point, side: Side) -> f64 {
        let (dx, dy) = (p[0] - self.xc, p[1] - self.yc);
        let q = dx * dx - dy * dy;
        match side {
            Side::Omega0 => q + self.c,
            Side::Omega1 => {
                let r2 = dx * dx + dy * dy;
                self.b0 * q + self.b1 * q / (r2 * r2) + self.c
            }
        }
    }

    pub fn grad_side(&self, p: Point, side: Side) -> Point {
        let (dx, dy) = (p[0] - self.xc, p[1] - self.yc);
        match side {
            Side::Omega0 => [2.0 * dx, -2.0 * dy],
            Side::Omega1 => {
                let q = dx * dx - dy * dy;
                let r2 = dx * dx + dy * dy;
                let r4 = r2 * r2;
                let r6 = r4 * r2;
                [
                    self.b0 * 2.0 * dx + self.b1 * (2.0 * dx / r4 - 4.0 * dx * q / r6),
                    -self.b0 * 2.0 * dy + self.b1 * (-2.0 * dy / r4 - 4.0 * dy * q / r6),
                ]
            }
        }
    }

    pub fn u(&self, p: Point) -> f64 {
        self.u_side(p, self.geometry().side(p))
    }
}

/// Either manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    Straight(StraightSolution),
    Circle(CircleSolution),
}

impl ExactSolution {
    /// Straight problem with the default geometry, `a0 = 1`, `a1 = 10` and [`DEFAULT_ALPHA`].
    pub fn default_straight() -> Self {
        let InterfaceGeometry::Straight { d0, theta0 } = InterfaceGeometry::default_straight() else { unreachable!() };
        ExactSolution::Straight(solve_straight_coeffs(1.0, 10.0, DEFAULT_ALPHA, theta0, d0).expect("valid defaults"))
    }

    /// Circle problem with the default geometry, `a0 = 1`, `a1 = 10`.
    pub fn default_circle() -> Self {
        let InterfaceGeometry::Circle { xc, yc, rc } = InterfaceGeometry::default_circle() else { unreachable!() };
        ExactSolution::Circle(solve_circle_coeffs(1.0, 10.0, xc, yc, rc).expect("valid defaults"))
    }

    pub fn geometry(&self) -> InterfaceGeometry {
        match self {
            ExactSolution::Straight(s) => s.geometry(),
            ExactSolution::Circle(s) => s.geometry(),
        }
    }

    pub fn coefficients(&self) -> (f64, f64) {
        match self {
            ExactSolution::Straight(s) => (s.a0, s.a1),
            ExactSolution::Circle(s) => (s.a0, s.a1),
        }
    }

    pub fn coefficient_on(&self, side: Side) -> f64 {
        let (a0, a1) = self.coefficients();
        match side {
            Side::Omega0 => a0,
            Side::Omega1 => a1,
        }
    }

    pub fn u_side(&self, p: Point, side: Side) -> f64 {
        match self {
            ExactSolution::Straight(s) => s.u_side(p, side),
            ExactSolution::Circle(s) => s.u_side(p, side),
        }
    }

    pub fn grad_side(&self, p: Point, side: Side) -> Point {
        match self {
            ExactSolution::Straight(s) => s.grad_side(p, side),
            ExactSolution::Circle(s) => s.grad_side(p, side),
        }
    }

    pub fn u(&self, p: Point) -> f64 {
        self.u_side(p, self.geometry().side(p))
    }

    pub fn grad(&self, p: Point) -> Point {
        self.grad_side(p, self.geometry().side(p))
    }

    /// Neumann datum `a grad(u) . n` at a boundary point.
    pub fn neumann_data(&self, p: Point, normal: Point) -> f64 {
        let side = self.geometry().side(p);
        let g = self.grad_side(p, side);
        self.coefficient_on(side) * (g[0] * normal[0] + g[1] * normal[1])
    }

    /// Integrates `f(x, g_N(x))` over the boundary with `npts`-point Gauss
    /// rules on segments no longer than `seg` that never straddle the interface.
    pub fn boundary_integral(&self, seg: f64, npts: usize, f: impl Fn(Point, f64) -> f64) -> f64 {
        let (x, w) = gauss_legendre(npts);
        let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let geom = self.geometry();
        let mut total = 0.0;
        for k in 0..4 {
            let (p, q) = (corners[k], corners[(k + 1) % 4]);
            let mut breaks = vec![0.0, 1.0];
            if let InterfaceGeometry::Straight { .. } = geom {
                let (gp, gq) = (geom.level_set(p), geom.level_set(q));
                if gp * gq < 0.0 {
                    breaks.push(gp / (gp - gq));
                }
            }
            breaks.sort_by(f64::total_cmp);
            for piece in breaks.windows(2) {
                let (s0, s1) = (piece[0], piece[1]);
                let nseg = ((s1 - s0) / seg).ceil().max(1.0) as usize;
                let dl = (s1 - s0) / nseg as f64;
                for j in 0..nseg {
                    let a = s0 + j as f64 * dl;
                    for (xi, wi) in x.iter().zip(&w) {
                        let s = a + xi * dl;
                        let pt = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                        total += wi * dl * f(pt, self.neumann_data(pt, normals[k]));
                    }
                }
            }
        }
        total
    }

    /// `||u||_E^2 = int_{boundary} u g_N ds` (64-point Gauss on segments of length at most 1/64).
    pub fn exact_energy(&self) -> f64 {
        self.boundary_integral(1.0 / 64.0, 64, |p, g| self.u(p) * g)
    }

    /// `int_{boundary} g_N ds`, which vanishes for compatible data.
    pub fn flux_balance(&self) -> f64 {
        self.boundary_integral(1.0 / 64.0, 16, |_, g| g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference_straight(alpha: f64) -> StraightSolution {
        solve_straight_coeffs(1.0, 10.0, alpha, PI / 6.0, 1.0 - 1.0 / 2f64.sqrt()).unwrap()
    }

    fn reference_circle() -> CircleSolution {
        solve_circle_coeffs(1.0, 10.0, 1.0 / 5f64.sqrt(), 1.0 / 3f64.sqrt(), 1.0 / 10f64.sqrt()).unwrap()
    }

    #[test]
    fn straight_normalization() {
        let s = reference_straight(2.0);
        assert_eq!(s.b, [1.0, 0.1]);
        assert!(s.u([0.0, 0.0]).abs() < 1e-15);
        let e = solve_straight_coeffs(3.0, 3.0, 2.0, PI / 6.0, 0.3).unwrap();
        assert_eq!(e.b, [1.0, 1.0]);
        assert!(solve_straight_coeffs(1.0, 1.0, 0.5, PI / 6.0, 0.3).is_err());
    }

    #[test]
    fn circle_coefficients_match_closed_form() {
        let s = reference_circle();
        let (a0, a1, rc) = (1.0, 10.0, 1.0 / 10f64.sqrt());
        // Closed form of the 2x2 system.
        let b0 = (a1 + a0) / (2.0 * a1);
        let b1 = rc.powi(4) * (a1 - a0) / (2.0 * a1);
        assert!((s.b0 - b0).abs() < 1e-14 && (s.b1 - b1).abs() < 1e-14);
        assert!((s.b0 * rc * rc + s.b1 / (rc * rc) - rc * rc).abs() < 1e-14);
        assert!((a1 * (2.0 * s.b0 * rc - 2.0 * s.b1 / rc.powi(3)) - 2.0 * a0 * rc).abs() < 1e-14);
        let e = solve_circle_coeffs(2.0, 2.0, 0.5, 0.5, 0.2).unwrap();
        assert!((e.b0 - 1.0).abs() < 1e-15 && e.b1.abs() < 1e-15);
    }

    #[test]
    fn jump_conditions_hold_on_both_interfaces() {
        let s = reference_straight(2.0);
        let ex = ExactSolution::Straight(s);
        let (st, ct) = (s.theta0.sin(), s.theta0.cos());
        let normal = [st, ct];
        for k in 0..100 {
            let t = 0.35 + 1.0 * k as f64 / 100.0;
            let p = [-s.d0 + t * ct, 1.0 - t * st];
            let jump = ex.u_side(p, Side::Omega0) - ex.u_side(p, Side::Omega1);
            let g0 = ex.grad_side(p, Side::Omega0);
            let g1 = ex.grad_side(p, Side::Omega1);
            let f0 = s.a0 * (g0[0] * normal[0] + g0[1] * normal[1]);
            let f1 = s.a1 * (g1[0] * normal[0] + g1[1] * normal[1]);
            assert!(jump.abs() < 1e-12 && (f0 - f1).abs() < 1e-12, "k={k}");
        }
        let c = reference_circle();
        let ex = ExactSolution::Circle(c);
        for k in 0..100 {
            let a = 2.0 * PI * k as f64 / 100.0;
            let n = [a.cos(), a.sin()];
            let p = [c.xc + c.rc * n[0], c.yc + c.rc * n[1]];
            let jump = ex.u_side(p, Side::Omega0) - ex.u_side(p, Side::Omega1);
            let g0 = ex.grad_side(p, Side::Omega0);
            let g1 = ex.grad_side(p, Side::Omega1);
            let f0 = c.a0 * (g0[0] * n[0] + g0[1] * n[1]);
            let f1 = c.a1 * (g1[0] * n[0] + g1[1] * n[1]);
            assert!(jump.abs() < 1e-12 && (f0 - f1).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cases = [
            ExactSolution::Straight(reference_straight(2.0)),
            ExactSolution::Straight(reference_straight(1.5)),
            ExactSolution::Circle(reference_circle()),
        ];
        for ex in cases {
            for &p in &[[0.1, 0.2], [0.9, 0.8], [0.5, 0.95], [0.3, 0.6], [0.05, 0.9]] {
                let geom = ex.geometry();
                if geom.distance(p) < 1e-3 {
                    continue;
                }
                let side = geom.side(p);
                let hh = 1e-6;
                let fd = [
                    (ex.u_side([p[0] + hh, p[1]], side) - ex.u_side([p[0] - hh, p[1]], side)) / (2.0 * hh),
                    (ex.u_side([p[0], p[1] + hh], side) - ex.u_side([p[0], p[1] - hh], side)) / (2.0 * hh),
                ];
                let g = ex.grad_side(p, side);
                let scale = g[0].hypot(g[1]).max(1.0);
                assert!((fd[0] - g[0]).abs() < 1e-6 * scale && (fd[1] - g[1]).abs() < 1e-6 * scale);
            }
        }
    }

    #[test]
    fn compatibility_and_energy_stability() {
        for ex in [ExactSolution::Straight(reference_straight(2.0)), ExactSolution::Circle(reference_circle())] {
            assert!(ex.flux_balance().abs() < 1e-8);
            let e1 = ex.exact_energy();
            let e2 = ex.boundary_integral(1.0 / 128.0, 64, |p, g| ex.u(p) * g);
            assert!(((e1 - e2) / e1).abs() < 1e-10);
        }
    }

    #[test]
    fn additive_constant_does_not_change_data() {
        let s = reference_straight(2.0);
        let mut shifted = s;
        shifted.c += 5.0;
        let (a, b) = (ExactSolution::Straight(s), ExactSolution::Straight(shifted));
        for p in [[0.0, 0.3], [1.0, 0.7], [0.4, 1.0]] {
            assert_eq!(a.neumann_data(p, [1.0, 0.0]), b.neumann_data(p, [1.0, 0.0]));
        }
        assert!((a.exact_energy() - b.exact_energy()).abs() < 1e-9 * a.exact_energy());
    }

    #[test]
    fn harmonic_alpha_one_neumann_matches_direct_derivative() {
        // a0 = a1, alpha = 1: u is affine, so g_N is the constant directional derivative.
        let s = solve_straight_coeffs(1.0, 1.0, 1.0, PI / 6.0, 0.3).unwrap();
        let ex = ExactSolution::Straight(s);
        let g = ex.grad([0.5, 0.5]);
        for p in [[0.2, 0.0], [1.0, 0.4], [0.0, 0.9]] {
            let n = if p[1] == 0.0 {
                [0.0, -1.0]
            } else if p[0] == 1.0 {
                [1.0, 0.0]
            } else {
                [-1.0, 0.0]
            };
            assert!((ex.neumann_data(p, n) - (g[0] * n[0] + g[1] * n[1])).abs() < 1e-13);
        }
    }
}
