//! End-to-end discretization of a manufactured interface problem.

use crate::assembly::{assemble, assemble_load, scale, BlockSystem, Coefficients, ScaledSystem};
use crate::enrichment::{build_enrichment, distance_field, EnrichedBasis, EnrichmentScheme};
use crate::interface::{classify_elements, subtriangulate, CutClassification, SubTriangle, SubTriangulation};
use crate::manufactured::ExactSolution;
use crate::mesh::{barycentric, build_mesh, UniformMesh};
use crate::par::Exec;
use crate::{Error, Point, Result};

/// Everything needed to solve and evaluate one `(problem, scheme, m)` cell.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub exact: ExactSolution,
    pub scheme: EnrichmentScheme,
    pub mesh: UniformMesh,
    pub cut: CutClassification,
    pub sub: SubTriangulation,
    pub basis: Option<EnrichedBasis>,
    pub system: BlockSystem,
    pub scaled: ScaledSystem,
    /// `||u||_E^2` from the boundary integral.
    pub exact_energy: f64,
    /// Set when the scheme produced no enriched node and plain FEM was used.
    pub fell_back_to_fem: bool,
}

impl Discretization {
    pub fn new(exact: ExactSolution, scheme: EnrichmentScheme, m: usize, exec: Exec) -> Result<Self> {
        let mesh = build_mesh(m)?;
        let geom = exact.geometry();
        let cut = classify_elements(&mesh, &geom)?;
        let sub = subtriangulate(&mesh, &cut);
        let (basis, fell_back_to_fem) = if scheme.is_fem() {
            (None, false)
        } else {
            let wstar = distance_field(&geom, &cut);
            match build_enrichment(scheme, &wstar, &mesh, &cut) {
                Ok(b) => (Some(b), false),
                Err(Error::NoEnrichment) => (None, true),
                Err(e) => return Err(e),
            }
        };
        let (a0, a1) = exact.coefficients();
        let coeffs = Coefficients::new(a0, a1)?;
        let mut system = assemble(&mesh, &cut, &sub, basis.as_ref(), coeffs, exec)?;
        assemble_load(&mut system, &mesh, &cut, basis.as_ref(), &|p, n| exact.neumann_data(p, n));
        let scaled = scale(&system)?;
        Ok(Discretization {
            exact_energy: exact.exact_energy(),
            exact,
            scheme,
            mesh,
            cut,
            sub,
            basis,
            system,
            scaled,
            fell_back_to_fem,
        })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    pub fn m(&self) -> usize {
        self.mesh.m
    }

    pub fn has_enrichment(&self) -> bool {
        self.scaled.has_enrichment()
    }

    /// Perturbed coefficient on a sub-triangle.
    pub fn coefficient(&self, st: &SubTriangle) -> f64 {
        self.exact.coefficient_on(st.side)
    }

    /// Nodal coefficient arrays (length = node count) from scaled unknowns.
    pub fn nodal_coefficients(&self, x1: &[f64], x2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (c1, c2) = self.scaled.unscale(x1, x2);
        let nn = self.mesh.num_nodes();
        let mut n1 = vec![0.0; nn];
        let mut n2 = vec![0.0; nn];
        for (r, &node) in self.system.fem_nodes.iter().enumerate() {
            n1[node] = c1[r];
        }
        for (r, &node) in self.system.enr_nodes.iter().enumerate() {
            n2[node] = c2[r];
        }
        (n1, n2)
    }

    /// Gradient of the discrete function with nodal coefficients `(c1, c2)` at `p` in sub-triangle `st`.
    pub fn gradient(&self, c1: &[f64], c2: &[f64], st: &SubTriangle, p: Point) -> Point {
        let e = st.element;
        let tri = self.mesh.elements[e];
        let g = self.mesh.hat_gradients(e);
        let mut out = [0.0; 2];
        for a in 0..3 {
            out[0] += c1[tri[a]] * g[a][0];
            out[1] += c1[tri[a]] * g[a][1];
        }
        let Some(basis) = &self.basis else { return out };
        if tri.iter().all(|&v| c2[v] == 0.0) {
            return out;
        }
        let sp: [Point; 3] = std::array::from_fn(|k| self.cut.point(st.vertices[k]));
        let sw: [f64; 3] = std::array::from_fn(|k| basis.w[st.vertices[k]]);
        let det = (sp[1][0] - sp[0][0]) * (sp[2][1] - sp[0][1]) - (sp[2][0] - sp[0][0]) * (sp[1][1] - sp[0][1]);
        let gw = [
            ((sw[1] - sw[0]) * (sp[2][1] - sp[0][1]) - (sw[2] - sw[0]) * (sp[1][1] - sp[0][1])) / det,
            ((sw[2] - sw[0]) * (sp[1][0] - sp[0][0]) - (sw[1] - sw[0]) * (sp[2][0] - sp[0][0])) / det,
        ];
        let ls = barycentric(&sp, p);
        let wp = ls[0] * sw[0] + ls[1] * sw[1] + ls[2] * sw[2];
        let lam = self.mesh.barycentric(e, p);
        for a in 0..3 {
            let c = c2[tri[a]];
            out[0] += c * (lam[a] * gw[0] + wp * g[a][0]);
            out[1] += c * (lam[a] * gw[1] + wp * g[a][1]);
        }
        out
    }

    /// Sub-triangle vertex coordinates.
    pub fn sub_points(&self, st: &SubTriangle) -> [Point; 3] {
        std::array::from_fn(|k| self.cut.point(st.vertices[k]))
    }

    /// All sub-triangles in element order.
    pub fn sub_triangles(&self) -> &[SubTriangle] {
        &self.sub.triangles
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::{solve_circle_coeffs, solve_straight_coeffs};
    use crate::quadrature::TriangleRule;

    fn straight() -> ExactSolution {
        let t = std::f64::consts::FRAC_PI_6;
        ExactSolution::Straight(solve_straight_coeffs(1.0, 10.0, 2.0, t, 1.0 - 0.5f64.sqrt()).unwrap())
    }

    fn circle() -> ExactSolution {
        ExactSolution::Circle(
            solve_circle_coeffs(1.0, 10.0, 1.0 / 5f64.sqrt(), 1.0 / 3f64.sqrt(), 1.0 / 10f64.sqrt()).unwrap(),
        )
    }

    #[test]
    fn galerkin_consistency() {
        for exact in [straight(), circle()] {
            for scheme in [EnrichmentScheme::None, EnrichmentScheme::MGfem, EnrichmentScheme::Sgfem] {
                let d = Discretization::new(exact, scheme, 8, Exec::default()).unwrap();
                let (x1, x2) = d.scaled.solve_direct().unwrap();
                let s = &d.scaled;
                let mut r1 = s.a11.residual(&s.f1, &x1);
                let mut r2 = s.a22.residual(&s.f2, &x2);
                let c = s.a12.matvec(&x2);
                r1.iter_mut().zip(&c).for_each(|(r, c)| *r -= c);
                let c = s.a21.matvec(&x1);
                r2.iter_mut().zip(&c).for_each(|(r, c)| *r -= c);
                let rn = crate::sparse::norm2(&r1).hypot(crate::sparse::norm2(&r2));
                let fnorm = crate::sparse::norm2(&s.full_rhs());
                assert!(rn <= 1e-9 * fnorm, "{} {rn}", scheme.name());
            }
        }
    }

    #[test]
    fn fem_block_is_scheme_independent() {
        let exact = circle();
        let base = Discretization::new(exact, EnrichmentScheme::None, 8, Exec::default()).unwrap();
        for scheme in [EnrichmentScheme::Topological, EnrichmentScheme::MGfem, EnrichmentScheme::Sgfem] {
            let d = Discretization::new(exact, scheme, 8, Exec::default()).unwrap();
            assert_eq!(d.system.a11, base.system.a11);
        }
    }

    #[test]
    fn assembled_energy_matches_seven_point_oracle() {
        use rand::{Rng, SeedableRng};
        let d = Discretization::new(circle(), EnrichmentScheme::Sgfem, 16, Exec::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x1: Vec<f64> = (0..d.scaled.n1()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x2: Vec<f64> = (0..d.scaled.n2()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (c1, c2) = d.nodal_coefficients(&x1, &x2);
        let rule = TriangleRule::seven_point();
        let mut oracle = 0.0;
        for st in d.sub_triangles() {
            let pts = rule.points(&d.sub_points(st));
            for (p, w) in pts.iter().zip(&rule.weights) {
                let g = d.gradient(&c1, &c2, st, *p);
                oracle += d.coefficient(st) * st.area * w * (g[0] * g[0] + g[1] * g[1]);
            }
        }
        let e = d.scaled.energy_sq(&x1, &x2);
        assert!((e - oracle).abs() <= 1e-12 * oracle, "{e} {oracle}");
    }
}
