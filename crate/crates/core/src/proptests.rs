//! Randomized invariants over interface geometries, coefficients and meshes.

use proptest::prelude::*;

use crate::assembly::Coefficients;
use crate::diagnostics::{fit_rate, subspace_angle};
use crate::enrichment::EnrichmentScheme;
use crate::manufactured::{solve_circle_coeffs, solve_straight_coeffs, ExactSolution, DEFAULT_ALPHA};
use crate::oned::{solve_1d, OneDProblem};
use crate::par::Exec;
use crate::problem::Discretization;
use crate::solvers::multigrid::{MeshHierarchy, Smoothing};
use crate::sparse::dot;

fn straight() -> impl Strategy<Value = ExactSolution> {
    (0.05f64..0.5, 0.2f64..1.0, 0.5f64..5.0, 1.0f64..50.0).prop_map(|(d0, theta0, a0, a1)| {
        ExactSolution::Straight(solve_straight_coeffs(a0, a1, DEFAULT_ALPHA, theta0, d0).unwrap())
    })
}

fn circle() -> impl Strategy<Value = ExactSolution> {
    (0.35f64..0.65, 0.35f64..0.65, 0.1f64..0.3, 0.5f64..5.0, 1.0f64..50.0)
        .prop_map(|(xc, yc, rc, a0, a1)| ExactSolution::Circle(solve_circle_coeffs(a0, a1, xc, yc, rc).unwrap()))
}

fn either() -> impl Strategy<Value = ExactSolution> {
    prop_oneof![straight(), circle()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn subtriangles_partition_every_element(exact in either(), m in 3usize..24) {
        let d = Discretization::new(exact, EnrichmentScheme::None, m, Exec::Sequential).unwrap();
        for e in 0..d.mesh.num_elements() {
            let sum: f64 = d.sub.of_element(e).iter().map(|t| t.area).sum();
            prop_assert!((sum - d.mesh.element_area()).abs() <= 1e-12 * d.mesh.element_area());
        }
    }

    #[test]
    fn sgfem_enrichment_vanishes_at_nodes(exact in either(), m in 3usize..24) {
        let d = Discretization::new(exact, EnrichmentScheme::Sgfem, m, Exec::Sequential).unwrap();
        if let Some(b) = &d.basis {
            prop_assert!(b.w[..d.mesh.num_nodes()].iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn angle_eigenvalue_lies_in_unit_interval(exact in either(), m in 4usize..14, pick in 0usize..4) {
        let scheme = [
            EnrichmentScheme::Topological,
            EnrichmentScheme::MGfem,
            EnrichmentScheme::Sgfem,
            EnrichmentScheme::Geometric { r: 1.0 / 3.0 },
        ][pick];
        let d = Discretization::new(exact, scheme, m, Exec::Sequential).unwrap();
        if d.has_enrichment() {
            let a = subspace_angle(&d.scaled.a11, &d.scaled.a12, &d.scaled.a22).unwrap();
            prop_assert!(a.lambda_max >= -1e-10 && a.lambda_max <= 1.0 + 1e-10, "{}", a.lambda_max);
        }
    }

    #[test]
    fn boundary_flux_is_compatible(exact in either()) {
        let scale = exact.exact_energy().abs().max(1.0);
        prop_assert!(exact.flux_balance().abs() <= 1e-8 * scale, "{}", exact.flux_balance());
    }

    #[test]
    fn restriction_is_adjoint_to_prolongation(
        exact in either(),
        levels in 1u32..6,
        x in prop::collection::vec(-1.0f64..1.0, 4096),
        y in prop::collection::vec(-1.0f64..1.0, 4096),
    ) {
        let (a0, a1) = exact.coefficients();
        let c = Coefficients::new(a0, a1).unwrap();
        let h = MeshHierarchy::build(&exact.geometry(), c, 1 << levels, Smoothing::Adaptive, Exec::Sequential).unwrap();
        for l in 1..h.num_levels() {
            let (p, r) = (&h.prolong[l], &h.restrict[l]);
            let (x, y) = (&x[..p.ncols], &y[..p.nrows]);
            let lhs = dot(&p.matvec(x), y);
            let rhs = dot(x, &r.matvec(y));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn rate_fit_recovers_planted_power(p in 0.25f64..3.0, c in 1e-3f64..1e3, noise in prop::collection::vec(-0.01f64..0.01, 6)) {
        let pts: Vec<(f64, f64)> = noise.iter().enumerate().map(|(k, n)| {
            let h = 1.0 / (4 << k) as f64;
            (h, c * h.powf(p) * n.exp())
        }).collect();
        // Noise of at most 1% in log space moves the slope by less than 0.02 over 5 halvings.
        prop_assert!((fit_rate(&pts).unwrap() - p).abs() < 0.02);
    }

    #[test]
    fn oned_enrichment_never_loses_to_fem(gamma in 0.05f64..0.95, a1 in 1.5f64..50.0, m in 5usize..60) {
        let pr = OneDProblem::new(gamma, 1.0, a1, m).unwrap();
        let fem = solve_1d(pr, EnrichmentScheme::None).unwrap();
        for scheme in [EnrichmentScheme::MGfem, EnrichmentScheme::Sgfem] {
            // Both spaces contain the FEM space, so the energy error cannot grow.
            let r = solve_1d(pr, scheme).unwrap();
            prop_assert!(r.error <= fem.error * (1.0 + 1e-9) + 1e-12);
        }
    }
}
