//! Estimator-driven solvers: FMG-preconditioned CG for FEM and the
//! block Gauss-Seidel iteration between the FEM and enrichment blocks.

use std::time::Instant;

use crate::assembly::ScaledSystem;
use crate::skyline::SkylineCholesky;
use crate::solvers::estimators::{estimator_fem, richardson_outer_estimator};
use crate::solvers::krylov::{cg, fcg};
use crate::solvers::multigrid::MeshHierarchy;
use crate::sparse::{norm2, Csr};
use crate::{Error, Result};

/// Safety factors and a priori error scale of the stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingConfig {
    /// Outer safety factor.
    pub k: f64,
    /// Inner safety factor.
    pub k_prime: f64,
    /// A priori discretization error scale.
    pub epsilon: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Consecutive undefined outer estimates tolerated before giving up.
    pub max_undefined: usize,
}

impl StoppingConfig {
    /// `k = 100`, `k' = 4`, `epsilon = h^{1/2}` for FEM and `h` with enrichment.
    pub fn standard(h: f64, enriched: bool) -> Self {
        StoppingConfig {
            k: 100.0,
            k_prime: 4.0,
            epsilon: if enriched { h } else { h.sqrt() },
            max_outer: 1000,
            max_inner: 5000,
            max_undefined: 3,
        }
    }

    pub fn with_factors(mut self, k: f64, k_prime: f64) -> Self {
        self.k = k;
        self.k_prime = k_prime;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 1.0 && self.k_prime > 1.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stopping factors must exceed 1 and epsilon be positive (k={}, k'={}, eps={})",
                self.k, self.k_prime, self.epsilon
            )));
        }
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.epsilon / self.k
    }
}

/// How the two block solves inside an outer iteration are carried out.
#[derive(Clone, Copy)]
pub enum InnerMode<'a> {
    /// FMG-preconditioned flexible CG on `A11`, plain CG on `A22`, both with estimator stops.
    Iterative(&'a MeshHierarchy),
    /// Direct block solves (each counted as one inner iteration).
    Exact,
}

/// One outer iteration of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub i: usize,
    pub estimate: f64,
    pub inner_fem: usize,
    pub inner_enr: usize,
    pub time: f64,
    /// Energy distance to a reference solution, when one was supplied.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outer: usize,
    pub inner_fem: usize,
    pub inner_enr: usize,
    pub wall_time: f64,
    pub estimate: f64,
    pub trace: Vec<OuterRecord>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub converged: bool,
    pub flags: Vec<String>,
}

impl SolveReport {
    /// Estimates strictly decrease over the last three outer iterations.
    pub fn monotone_tail(&self) -> bool {
        let n = self.trace.len();
        if n < 3 {
            return true;
        }
        self.trace[n - 3..].windows(2).all(|w| w[1].estimate < w[0].estimate)
    }

    /// Iteration counts in the form `i (j, j')`.
    pub fn label(&self) -> String {
        format!("{} ({},{})", self.outer, self.inner_fem, self.inner_enr)
    }
}

/// FMG-preconditioned CG on the FEM system, stopped when `||r|| / h < epsilon / k`.
pub fn fem_solve(
    a11: &Csr,
    f1: &[f64],
    h: f64,
    hierarchy: &MeshHierarchy,
    cfg: &StoppingConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut x = vec![0.0; a11.nrows];
    let mut trace = Vec::new();
    let tol = cfg.tolerance();
    let mut last = f64::INFINITY;
    let out = {
        let mut stop = |k: usize, r: &[f64]| {
            last = estimator_fem(r, h);
            trace.push(OuterRecord {
                i: k,
                estimate: last,
                inner_fem: 0,
                inner_enr: 0,
                time: start.elapsed().as_secs_f64(),
                delta: None,
            });
            last < tol
        };
        fcg(a11, f1, &mut x, &|r| hierarchy.fmg(r), &mut stop, cfg.max_outer)?
    };
    let estimate = if out.iterations == 0 { 0.0 } else { last };
    Ok(SolveReport {
        outer: out.iterations,
        inner_fem: 0,
        inner_enr: 0,
        wall_time: start.elapsed().as_secs_f64(),
        estimate,
        trace,
        x1: x,
        x2: Vec::new(),
        converged: out.converged,
        flags: Vec::new(),
    })
}

enum Inner<'a> {
    Iterative(&'a MeshHierarchy),
    Exact(SkylineCholesky, SkylineCholesky),
}

/// Block Gauss-Seidel between the FEM and enrichment blocks with the
/// Richardson outer estimator and residual-based inner stops.
pub fn block_gs_outer(
    sys: &ScaledSystem,
    h: f64,
    mode: InnerMode<'_>,
    cfg: &StoppingConfig,
    reference: Option<(&[f64], &[f64])>,
) -> Result<SolveReport> {
    cfg.validate()?;
    if !sys.has_enrichment() {
        return Err(Error::NoEnrichment);
    }
    let start = Instant::now();
    let inner = match mode {
        InnerMode::Iterative(hier) => Inner::Iterative(hier),
        InnerMode::Exact => Inner::Exact(SkylineCholesky::factor(&sys.a11)?, SkylineCholesky::factor(&sys.a22)?),
    };
    let (n1, n2) = (sys.n1(), sys.n2());
    let mut x1 = vec![0.0; n1];
    let mut x2 = vec![0.0; n2];
    let mut estimate = f64::INFINITY;
    let mut d_prev = f64::NAN;
    let mut undefined = 0usize;
    let mut report = SolveReport {
        outer: 0,
        inner_fem: 0,
        inner_enr: 0,
        wall_time: 0.0,
        estimate,
        trace: Vec::new(),
        x1: Vec::new(),
        x2: Vec::new(),
        converged: false,
        flags: Vec::new(),
    };
    let tol = cfg.tolerance();
    for i in 1..=cfg.max_outer {
        let (old1, old2) = (x1.clone(), x2.clone());
        let inner_tol = estimate / cfg.k_prime;

        let mut rhs1 = sys.f1.clone();
        let c = sys.a12.matvec(&x2);
        rhs1.iter_mut().zip(&c).for_each(|(r, c)| *r -= c);
        let j = match &inner {
            Inner::Iterative(hier) => {
                let mut stop = |_: usize, r: &[f64]| estimator_fem(r, h) < inner_tol;
                let out = fcg(&sys.a11, &rhs1, &mut x1, &|r| hier.fmg(r), &mut stop, cfg.max_inner)?;
                if !out.converged {
                    report.flags.push(format!("outer {i}: FEM inner solve hit {} iterations", cfg.max_inner));
                }
                out.iterations
            }
            Inner::Exact(c11, _) => {
                x1 = c11.solve(&rhs1);
                1
            }
        };

        let mut rhs2 = sys.f2.clone();
        let c = sys.a21.matvec(&x1);
        rhs2.iter_mut().zip(&c).for_each(|(r, c)| *r -= c);
        let jp = match &inner {
            Inner::Iterative(_) => {
                let mut stop = |_: usize, r: &[f64]| norm2(r) < inner_tol;
                let out = cg(&sys.a22, &rhs2, &mut x2, &mut stop, cfg.max_inner)?;
                if !out.converged {
                    report.flags.push(format!("outer {i}: enrichment inner solve hit {} iterations", cfg.max_inner));
                }
                out.iterations
            }
            Inner::Exact(_, c22) => {
                x2 = c22.solve(&rhs2);
                1
            }
        };

        let dx1: Vec<f64> = x1.iter().zip(&old1).map(|(a, b)| a - b).collect();
        let dx2: Vec<f64> = x2.iter().zip(&old2).map(|(a, b)| a - b).collect();
        let d = sys.energy_sq(&dx1, &dx2).max(0.0).sqrt();
        if i >= 2 {
            match richardson_outer_estimator(d, d_prev) {
                Some(e) => {
                    estimate = e;
                    undefined = 0;
                }
                None => {
                    undefined += 1;
                    report.flags.push(format!("outer {i}: iterate differences did not contract"));
                }
            }
        }
        d_prev = d;
        let delta = reference.map(|(r1, r2)| {
            let e1: Vec<f64> = x1.iter().zip(r1).map(|(a, b)| a - b).collect();
            let e2: Vec<f64> = x2.iter().zip(r2).map(|(a, b)| a - b).collect();
            sys.energy_sq(&e1, &e2).max(0.0).sqrt()
        });
        report.outer = i;
        report.inner_fem += j;
        report.inner_enr += jp;
        report.trace.push(OuterRecord {
            i,
            estimate,
            inner_fem: j,
            inner_enr: jp,
            time: start.elapsed().as_secs_f64(),
            delta,
        });
        if estimate < tol {
            report.converged = true;
            break;
        }
        if undefined > cfg.max_undefined {
            report.flags.push(format!("outer {i}: estimator undefined {undefined} times in a row"));
            break;
        }
    }
    report.estimate = estimate;
    report.wall_time = start.elapsed().as_secs_f64();
    report.x1 = x1;
    report.x2 = x2;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_subspace(theta: f64) -> ScaledSystem {
        let c = theta.cos();
        ScaledSystem::from_blocks(
            Csr::identity(1),
            Csr::from_dense(&[vec![c]]),
            Csr::identity(1),
            vec![1.0],
            vec![-0.5],
        )
    }

    #[test]
    fn exact_inner_solves_contract_by_cos_squared() {
        for deg in [15.0f64, 30.0, 60.0] {
            let theta = deg.to_radians();
            let sys = two_subspace(theta);
            let refsol = SkylineCholesky::factor(&sys.full_matrix()).unwrap().solve(&sys.full_rhs());
            let cfg = StoppingConfig { epsilon: 1e-12, ..StoppingConfig::standard(0.1, true) };
            let rep = block_gs_outer(&sys, 0.1, InnerMode::Exact, &cfg, Some((&refsol[..1], &refsol[1..]))).unwrap();
            let deltas: Vec<f64> = rep.trace.iter().map(|r| r.delta.unwrap()).collect();
            let q = theta.cos().powi(2);
            for w in deltas.windows(2).take(5) {
                assert!((w[1] / w[0] - q).abs() < 1e-10, "{deg}: {} vs {q}", w[1] / w[0]);
            }
        }
    }

    #[test]
    fn richardson_estimate_tracks_the_true_error() {
        let sys = two_subspace(std::f64::consts::FRAC_PI_6);
        let refsol = SkylineCholesky::factor(&sys.full_matrix()).unwrap().solve(&sys.full_rhs());
        let cfg = StoppingConfig { epsilon: 1e-10, ..StoppingConfig::standard(0.1, true) };
        let rep = block_gs_outer(&sys, 0.1, InnerMode::Exact, &cfg, Some((&refsol[..1], &refsol[1..]))).unwrap();
        for r in rep.trace.iter().skip(5) {
            let ratio = r.estimate / r.delta.unwrap();
            assert!((1.0 / 3.0..=3.0).contains(&ratio), "{ratio}");
        }
        assert!(rep.converged && rep.monotone_tail());
    }

    #[test]
    fn invalid_factors_are_rejected() {
        let cfg = StoppingConfig::standard(0.1, true).with_factors(1.0, 4.0);
        assert!(cfg.validate().is_err());
    }
}
