//! Experiment runners over `(scheme, m)` grids.
//!
//! Every record type exposes a CSV header and row through [`Record`]; rows
//! begin with the full parameter set so each output file is self-describing.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::Coefficients;
use crate::diagnostics::{
    conditioning_report, discretization_error, fit_rate, subspace_angle, total_error_decomposition, truncation_error,
    ConditionMode,
};
use crate::enrichment::EnrichmentScheme;
use crate::interface::InterfaceGeometry;
use crate::manufactured::{solve_circle_coeffs, solve_straight_coeffs, ExactSolution, DEFAULT_ALPHA};
use crate::oned::{solve_1d, OneDProblem};
use crate::par::{map_slice, Exec};
use crate::problem::Discretization;
use crate::solvers::{
    block_gs_outer, extrapolated_error, fem_solve, InnerMode, MeshHierarchy, OuterRecord, Smoothing, StoppingConfig,
};
use crate::sparse::dot;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Straight,
    Circle,
    OneD,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Straight => "straight",
            ProblemKind::Circle => "circle",
            ProblemKind::OneD => "oned",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "straight" => Ok(ProblemKind::Straight),
            "circle" => Ok(ProblemKind::Circle),
            "oned" | "1d" => Ok(ProblemKind::OneD),
            other => Err(Error::InvalidArgument(format!("unknown problem '{other}'"))),
        }
    }
}

/// Parameters of an experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub schemes: Vec<EnrichmentScheme>,
    pub ms: Vec<usize>,
    pub a0: f64,
    pub a1: f64,
    pub alpha: f64,
    pub d0: f64,
    pub theta0: f64,
    pub xc: f64,
    pub yc: f64,
    pub rc: f64,
    pub gamma: f64,
    /// Geometric enrichment radius.
    pub radius: f64,
    pub k: f64,
    pub k_prime: f64,
    pub direct_verify_max_m: usize,
    pub seed: u64,
    pub smoothing: Smoothing,
    pub condition_mode: ConditionMode,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::for_problem(ProblemKind::Straight)
    }
}

impl ExperimentConfig {
    /// Default parameters of each problem.
    pub fn for_problem(problem: ProblemKind) -> Self {
        let (radius, ms) = match problem {
            ProblemKind::OneD => (0.2, vec![10, 20, 40, 80, 160, 320]),
            _ => (1.0 / 3.0, vec![8, 16, 32, 64, 128]),
        };
        ExperimentConfig {
            problem,
            schemes: Vec::new(),
            ms,
            a0: 1.0,
            a1: 10.0,
            alpha: DEFAULT_ALPHA,
            d0: 1.0 - 1.0 / 2f64.sqrt(),
            theta0: PI / 6.0,
            xc: 1.0 / 5f64.sqrt(),
            yc: 1.0 / 3f64.sqrt(),
            rc: 1.0 / 10f64.sqrt(),
            gamma: (2.0 + 1.0 / PI) / 5.0,
            radius,
            k: 100.0,
            k_prime: 4.0,
            direct_verify_max_m: 128,
            seed: 0,
            smoothing: Smoothing::Adaptive,
            condition_mode: ConditionMode::Auto,
            exec: Exec::default(),
        }
        .with_all_schemes()
    }

    pub fn with_all_schemes(mut self) -> Self {
        self.schemes = vec![
            EnrichmentScheme::None,
            EnrichmentScheme::Topological,
            EnrichmentScheme::Geometric { r: self.radius },
            EnrichmentScheme::MGfem,
            EnrichmentScheme::Sgfem,
        ];
        self
    }

    /// Re-applies `radius` to any geometric scheme in the list.
    pub fn sync_radius(&mut self) {
        for s in &mut self.schemes {
            if let EnrichmentScheme::Geometric { r } = s {
                *r = self.radius;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.a1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coefficients must be positive: a0={}, a1={}",
                self.a0, self.a1
            )));
        }
        if let Some(&m) = self.ms.iter().find(|&&m| m == 0) {
            return Err(Error::InvalidArgument(format!("mesh size m must be positive, got {m}")));
        }
        StoppingConfig::standard(0.5, true).with_factors(self.k, self.k_prime).validate()?;
        match self.problem {
            ProblemKind::Straight => InterfaceGeometry::Straight { d0: self.d0, theta0: self.theta0 }.validate(),
            ProblemKind::Circle => InterfaceGeometry::Circle { xc: self.xc, yc: self.yc, rc: self.rc }.validate(),
            ProblemKind::OneD => OneDProblem::new(self.gamma, self.a0, self.a1, 1).map(|_| ()),
        }
    }

    pub fn exact(&self) -> Result<ExactSolution> {
        match self.problem {
            ProblemKind::Straight => {
                Ok(ExactSolution::Straight(solve_straight_coeffs(self.a0, self.a1, self.alpha, self.theta0, self.d0)?))
            }
            ProblemKind::Circle => {
                Ok(ExactSolution::Circle(solve_circle_coeffs(self.a0, self.a1, self.xc, self.yc, self.rc)?))
            }
            ProblemKind::OneD => Err(Error::InvalidArgument("the 1-D problem has no 2-D exact solution".into())),
        }
    }

    pub fn dimension(&self) -> usize {
        if self.problem == ProblemKind::OneD {
            1
        } else {
            2
        }
    }

    fn cells(&self) -> Vec<(EnrichmentScheme, usize)> {
        self.schemes.iter().flat_map(|&s| self.ms.iter().map(move |&m| (s, m))).collect()
    }

    fn param_values(&self) -> Vec<String> {
        vec![
            self.problem.name().into(),
            self.dimension().to_string(),
            fmt(self.a0),
            fmt(self.a1),
            fmt(self.alpha),
            fmt(self.d0),
            fmt(self.theta0),
            fmt(self.xc),
            fmt(self.yc),
            fmt(self.rc),
            fmt(self.gamma),
            fmt(self.radius),
            fmt(self.k),
            fmt(self.k_prime),
        ]
    }
}

const PARAM_HEADER: [&str; 14] =
    ["problem", "dimension", "a0", "a1", "alpha", "d0", "theta0", "xc", "yc", "rc", "gamma", "R", "k", "kprime"];

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.10e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt)
}

/// A CSV-serializable result row.
pub trait Record {
    fn header() -> Vec<&'static str>;
    fn row(&self) -> Vec<String>;
}

fn with_params(cfg: &[String], rest: Vec<String>) -> Vec<String> {
    cfg.iter().cloned().chain(rest).collect()
}

fn header_with(rest: &[&'static str]) -> Vec<&'static str> {
    PARAM_HEADER.iter().chain(rest).copied().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub params: Vec<String>,
    pub scheme: String,
    pub m: usize,
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    pub epsilon: f64,
    pub relative: f64,
    pub fell_back_to_fem: bool,
}

impl Record for ConvergenceRecord {
    fn header() -> Vec<&'static str> {
        header_with(&["scheme", "m", "h", "n1", "n2", "epsilon_h", "relative_epsilon_h", "fem_fallback"])
    }

    fn row(&self) -> Vec<String> {
        with_params(
            &self.params,
            vec![
                self.scheme.clone(),
                self.m.to_string(),
                fmt(self.h),
                self.n1.to_string(),
                self.n2.to_string(),
                fmt(self.epsilon),
                fmt(self.relative),
                self.fell_back_to_fem.to_string(),
            ],
        )
    }
}

/// Fitted log-log slope for each scheme of a set of `(scheme, h, value)` triples.
pub fn slopes_by_scheme<'a>(points: impl IntoIterator<Item = (&'a str, f64, f64)>) -> Vec<(String, Option<f64>)> {
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (s, h, v) in points {
        match groups.iter_mut().find(|g| g.0 == s) {
            Some(g) => g.1.push((h, v)),
            None => groups.push((s.to_string(), vec![(h, v)])),
        }
    }
    groups.into_iter().map(|(s, pts)| (s, if pts.len() >= 2 { fit_rate(&pts).ok() } else { None })).collect()
}

/// Direct solves and discretization errors.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    let params = cfg.param_values();
    let cells = cfg.cells();
    let rows = map_slice(cfg.exec, &cells, |&(scheme, m)| -> Result<ConvergenceRecord> {
        if cfg.problem == ProblemKind::OneD {
            let r = solve_1d(OneDProblem::new(cfg.gamma, cfg.a0, cfg.a1, m)?, scheme)?;
            return Ok(ConvergenceRecord {
                params: params.clone(),
                scheme: scheme.name().into(),
                m,
                h: 1.0 / m as f64,
                n1: r.system.n1(),
                n2: r.system.n2(),
                epsilon: r.error,
                relative: r.relative_error,
                fell_back_to_fem: r.system.safety_dropped,
            });
        }
        let d = Discretization::new(cfg.exact()?, scheme, m, cfg.exec)?;
        let (x1, x2) = d.scaled.solve_direct()?;
        let e = discretization_error(&d, &x1, &x2);
        Ok(ConvergenceRecord {
            params: params.clone(),
            scheme: scheme.name().into(),
            m,
            h: d.h(),
            n1: d.scaled.n1(),
            n2: d.scaled.n2(),
            epsilon: e.absolute,
            relative: e.relative,
            fell_back_to_fem: d.fell_back_to_fem,
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningRecord {
    pub params: Vec<String>,
    pub scheme: String,
    pub m: usize,
    pub h: f64,
    pub kappa_a: f64,
    pub kappa_a11: f64,
    pub kappa_a22: Option<f64>,
    pub method: String,
    pub converged: bool,
}

impl Record for ConditioningRecord {
    fn header() -> Vec<&'static str> {
        header_with(&["scheme", "m", "h", "kappa_A", "kappa_A11", "kappa_A22", "method", "converged"])
    }

    fn row(&self) -> Vec<String> {
        with_params(
            &self.params,
            vec![
                self.scheme.clone(),
                self.m.to_string(),
                fmt(self.h),
                fmt(self.kappa_a),
                fmt(self.kappa_a11),
                fmt_opt(self.kappa_a22),
                self.method.clone(),
                self.converged.to_string(),
            ],
        )
    }
}

pub fn run_conditioning(cfg: &ExperimentConfig) -> Result<Vec<ConditioningRecord>> {
    cfg.validate()?;
    let params = cfg.param_values();
    let cells = cfg.cells();
    let rows = map_slice(cfg.exec, &cells, |&(scheme, m)| -> Result<ConditioningRecord> {
        if cfg.problem == ProblemKind::OneD {
            let r = solve_1d(OneDProblem::new(cfg.gamma, cfg.a0, cfg.a1, m)?, scheme)?;
            return Ok(ConditioningRecord {
                params: params.clone(),
                scheme: scheme.name().into(),
                m,
                h: 1.0 / m as f64,
                kappa_a: r.kappa_a,
                kappa_a11: r.kappa_a11,
                kappa_a22: r.kappa_a22,
                method: "dense".into(),
                converged: true,
            });
        }
        let d = Discretization::new(cfg.exact()?, scheme, m, cfg.exec)?;
        let r = conditioning_report(&d, cfg.condition_mode)?;
        Ok(ConditioningRecord {
            params: params.clone(),
            scheme: scheme.name().into(),
            m,
            h: d.h(),
            kappa_a: r.kappa_a.kappa,
            kappa_a11: r.kappa_a11.kappa,
            kappa_a22: r.kappa_a22.map(|c| c.kappa),
            method: r.kappa_a.method.name().into(),
            converged: r.kappa_a.converged && r.kappa_a22.is_none_or(|c| c.converged),
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleRecord {
    pub params: Vec<String>,
    pub scheme: String,
    pub m: usize,
    pub h: f64,
    pub theta_degrees: f64,
    pub lambda_max: f64,
    pub converged: bool,
}

impl Record for AngleRecord {
    fn header() -> Vec<&'static str> {
        header_with(&["scheme", "m", "h", "theta_degrees", "lambda_max", "converged"])
    }

    fn row(&self) -> Vec<String> {
        with_params(
            &self.params,
            vec![
                self.scheme.clone(),
                self.m.to_string(),
                fmt(self.h),
                fmt(self.theta_degrees),
                fmt(self.lambda_max),
                self.converged.to_string(),
            ],
        )
    }
}

/// Subspace angles; FEM cells are skipped.
pub fn run_angle(cfg: &ExperimentConfig) -> Result<Vec<AngleRecord>> {
    cfg.validate()?;
    let params = cfg.param_values();
    let cells: Vec<_> = cfg.cells().into_iter().filter(|(s, _)| !s.is_fem()).collect();
    let rows = map_slice(cfg.exec, &cells, |&(scheme, m)| -> Result<Option<AngleRecord>> {
        let (h, a11, a12, a22) = if cfg.problem == ProblemKind::OneD {
            let s = crate::oned::assemble_1d(OneDProblem::new(cfg.gamma, cfg.a0, cfg.a1, m)?, scheme)?;
            if s.n2() == 0 {
                return Ok(None);
            }
            let (a11, a12, a22) = s.blocks();
            (1.0 / m as f64, a11, a12, a22)
        } else {
            let d = Discretization::new(cfg.exact()?, scheme, m, cfg.exec)?;
            if !d.has_enrichment() {
                return Ok(None);
            }
            let s = d.scaled;
            (d.mesh.h, s.a11, s.a12, s.a22)
        };
        let a = subspace_angle(&a11, &a12, &a22)?;
        Ok(Some(AngleRecord {
            params: params.clone(),
            scheme: scheme.name().into(),
            m,
            h,
            theta_degrees: a.theta_degrees,
            lambda_max: a.lambda_max,
            converged: a.converged,
        }))
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// Geometry of the proximity sweep: `theta0 = pi/4`, the interface on the line
/// `x + y = (k + rho) h`, which sits a fraction `rho` of a cell away from a mesh diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximitySweep {
    pub m: usize,
    pub line: usize,
    pub radius: f64,
    pub rhos: Vec<f64>,
}

impl Default for ProximitySweep {
    fn default() -> Self {
        ProximitySweep { m: 16, line: 11, radius: 1.0 / 6.0, rhos: (1..=8).map(|e| 10f64.powi(-e)).collect() }
    }
}

impl ProximitySweep {
    pub fn d0(&self, rho: f64) -> f64 {
        1.0 - (self.line as f64 + rho) / self.m as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximityRecord {
    pub params: Vec<String>,
    pub scheme: String,
    pub m: usize,
    pub rho: f64,
    pub d0: f64,
    pub kappa_a: f64,
    pub kappa_a22: Option<f64>,
    pub theta_degrees: Option<f64>,
}

impl Record for ProximityRecord {
    fn header() -> Vec<&'static str> {
        header_with(&["scheme", "m", "rho", "sweep_d0", "kappa_A", "kappa_A22", "theta_degrees"])
    }

    fn row(&self) -> Vec<String> {
        with_params(
            &self.params,
            vec![
                self.scheme.clone(),
                self.m.to_string(),
                fmt(self.rho),
                fmt(self.d0),
                fmt(self.kappa_a),
                fmt_opt(self.kappa_a22),
                fmt_opt(self.theta_degrees),
            ],
        )
    }
}

/// Conditioning and angle as the straight interface approaches a family of mesh lines.
pub fn run_proximity(cfg: &ExperimentConfig, sweep: &ProximitySweep) -> Result<Vec<ProximityRecord>> {
    cfg.validate()?;
    let mut pcfg = cfg.clone();
    pcfg.problem = ProblemKind::Straight;
    pcfg.theta0 = PI / 4.0;
    pcfg.radius = sweep.radius;
    pcfg.sync_radius();
    let cells: Vec<(EnrichmentScheme, f64)> =
        pcfg.schemes.iter().flat_map(|&s| sweep.rhos.iter().map(move |&r| (s, r))).collect();
    let rows = map_slice(cfg.exec, &cells, |&(scheme, rho)| -> Result<ProximityRecord> {
        let mut c = pcfg.clone();
        c.d0 = sweep.d0(rho);
        let d = Discretization::new(c.exact()?, scheme, sweep.m, cfg.exec)?;
        let r = conditioning_report(&d, cfg.condition_mode)?;
        let theta = if d.has_enrichment() {
            Some(subspace_angle(&d.scaled.a11, &d.scaled.a12, &d.scaled.a22)?.theta_degrees)
        } else {
            None
        };
        Ok(ProximityRecord {
            params: c.param_values(),
            scheme: scheme.name().into(),
            m: sweep.m,
            rho,
            d0: c.d0,
            kappa_a: r.kappa_a.kappa,
            kappa_a22: r.kappa_a22.map(|k| k.kappa),
            theta_degrees: theta,
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRecord {
    pub params: Vec<String>,
    pub scheme: String,
    pub m: usize,
    pub h: f64,
    pub outer: usize,
    pub inner_fem: usize,
    pub inner_enr: usize,
    pub wall_time: f64,
    pub estimate: f64,
    pub converged: bool,
    pub monotone_tail: bool,
    pub flags: usize,
    /// `||v_h||` of the iterate, in the (perturbed) energy norm.
    pub norm: f64,
    /// Relative discretization error, when a direct solve was run.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub total: Option<f64>,
    pub ih: Option<f64>,
    pub eta: Option<f64>,
    pub extrapolated: Option<f64>,
    pub efficiency: Option<f64>,
    pub trace: Vec<OuterRecord>,
}

impl SolverRecord {
    pub fn label(&self) -> String {
        if self.scheme == EnrichmentScheme::None.name() {
            self.outer.to_string()
        } else {
            format!("{} ({},{})", self.outer, self.inner_fem, self.inner_enr)
        }
    }
}

impl Record for SolverRecord {
    fn header() -> Vec<&'static str> {
        header_with(&[
            "scheme",
            "m",
            "h",
            "iterations",
            "i_star",
            "j_star",
            "jprime_star",
            "t_seconds",
            "final_estimate",
            "converged",
            "monotone_tail",
            "flags",
            "epsilon_h",
            "delta",
            "total_error",
            "i_h",
            "eta",
            "extrapolated_error",
            "efficiency",
        ])
    }

    fn row(&self) -> Vec<String> {
        with_params(
            &self.params,
            vec![
                self.scheme.clone(),
                self.m.to_string(),
                fmt(self.h),
                self.label(),
                self.outer.to_string(),
                self.inner_fem.to_string(),
                self.inner_enr.to_string(),
                format!("{:.6}", self.wall_time),
                fmt(self.estimate),
                self.converged.to_string(),
                self.monotone_tail.to_string(),
                self.flags.to_string(),
                fmt_opt(self.epsilon),
                fmt_opt(self.delta),
                fmt_opt(self.total),
                fmt_opt(self.ih),
                fmt_opt(self.eta),
                fmt_opt(self.extrapolated),
                fmt_opt(self.efficiency),
            ],
        )
    }
}

/// One row of a solver trace export.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub scheme: String,
    pub m: usize,
    pub outer: OuterRecord,
}

impl Record for TraceRecord {
    fn header() -> Vec<&'static str> {
        vec!["scheme", "m", "i", "e_i", "j", "jprime", "t_seconds", "delta"]
    }

    fn row(&self) -> Vec<String> {
        let o = &self.outer;
        vec![
            self.scheme.clone(),
            self.m.to_string(),
            o.i.to_string(),
            fmt(o.estimate),
            o.inner_fem.to_string(),
            o.inner_enr.to_string(),
            format!("{:.6}", o.time),
            fmt_opt(o.delta),
        ]
    }
}

/// Convergence order of `||u|| - ||v_h||`, used by the extrapolated estimator.
pub fn norm_deficit_order(scheme: EnrichmentScheme) -> f64 {
    if scheme.is_fem() || matches!(scheme, EnrichmentScheme::Topological) {
        1.0
    } else {
        2.0
    }
}

/// Iterative solves with optional direct verification and extrapolated error estimates.
///
/// Cells run one after another so that wall times are not distorted by
/// concurrent work; assembly inside a cell still follows `cfg.exec`.
pub fn run_solver(cfg: &ExperimentConfig) -> Result<Vec<SolverRecord>> {
    cfg.validate()?;
    if cfg.problem == ProblemKind::OneD {
        return Err(Error::InvalidArgument("iterative solvers run on 2-D problems only".into()));
    }
    if let Some(&m) = cfg.ms.iter().find(|m| !m.is_power_of_two()) {
        return Err(Error::InvalidArgument(format!("multigrid needs m = 2^L, got {m}")));
    }
    let exact = cfg.exact()?;
    let norm_u = exact.exact_energy().sqrt();
    let (a0, a1) = exact.coefficients();
    let coeffs = Coefficients::new(a0, a1)?;
    let params = cfg.param_values();
    let mut out: Vec<SolverRecord> = Vec::new();
    for &scheme in &cfg.schemes {
        let mut ms = cfg.ms.clone();
        ms.sort_unstable();
        for m in ms {
            let d = Discretization::new(exact, scheme, m, cfg.exec)?;
            let h = d.h();
            let hier = MeshHierarchy::build(&exact.geometry(), coeffs, m, cfg.smoothing, cfg.exec)?;
            let direct = if m <= cfg.direct_verify_max_m { Some(d.scaled.solve_direct()?) } else { None };
            let enriched = d.has_enrichment();
            let stop = StoppingConfig::standard(h, !scheme.is_fem()).with_factors(cfg.k, cfg.k_prime);
            let rep = if enriched {
                let reference = direct.as_ref().map(|(r1, r2)| (&r1[..], &r2[..]));
                block_gs_outer(&d.scaled, h, InnerMode::Iterative(&hier), &stop, reference)?
            } else {
                fem_solve(&d.scaled.a11, &d.scaled.f1, h, &hier, &stop)?
            };
            let x2 = if rep.x2.is_empty() { vec![0.0; d.scaled.n2()] } else { rep.x2.clone() };
            let norm = d.scaled.energy_sq(&rep.x1, &x2).max(0.0).sqrt();
            let (epsilon, delta, total, ih) = match &direct {
                Some((r1, r2)) => {
                    let eps = discretization_error(&d, r1, r2).absolute;
                    let delta = truncation_error(&d, (&rep.x1, &x2), (r1, r2));
                    let (total, ih) = total_error_decomposition(eps, delta);
                    (Some(eps / norm_u), Some(delta / norm_u), Some(total / norm_u), Some(ih))
                }
                None => (None, None, None, None),
            };
            let coarse = out.iter().find(|r| r.scheme == scheme.name() && r.m * 2 == m);
            let (eta, extrapolated, efficiency) = match coarse {
                Some(c) => {
                    let x = extrapolated_error(norm, c.norm, h, norm_deficit_order(scheme));
                    let rel = x.error / norm_u;
                    (Some(x.eta), Some(rel), total.map(|t| rel / t))
                }
                None => (None, None, None),
            };
            out.push(SolverRecord {
                params: params.clone(),
                scheme: scheme.name().into(),
                m,
                h,
                outer: rep.outer,
                inner_fem: rep.inner_fem,
                inner_enr: rep.inner_enr,
                wall_time: rep.wall_time,
                estimate: rep.estimate,
                converged: rep.converged,
                monotone_tail: rep.monotone_tail(),
                flags: rep.flags.len(),
                norm,
                epsilon,
                delta,
                total,
                ih,
                eta,
                extrapolated,
                efficiency,
                trace: rep.trace,
            });
        }
    }
    Ok(out)
}

/// Outcome of one randomized or structural invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyRecord {
    pub check: String,
    pub scheme: String,
    pub m: usize,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Record for PropertyRecord {
    fn header() -> Vec<&'static str> {
        vec!["check", "scheme", "m", "value", "tolerance", "pass"]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.check.clone(),
            self.scheme.clone(),
            self.m.to_string(),
            fmt(self.value),
            fmt(self.tolerance),
            self.pass.to_string(),
        ]
    }
}

fn check(name: &str, scheme: &str, m: usize, value: f64, tolerance: f64) -> PropertyRecord {
    PropertyRecord { check: name.into(), scheme: scheme.into(), m, value, tolerance, pass: value <= tolerance }
}

/// Structural invariants over the grid: area partition, SGFEM nodal
/// vanishing, angle eigenvalue range, boundary flux compatibility and
/// transfer-operator adjointness (with seeded random vectors).
pub fn run_properties(cfg: &ExperimentConfig) -> Result<Vec<PropertyRecord>> {
    cfg.validate()?;
    if cfg.problem == ProblemKind::OneD {
        return Err(Error::InvalidArgument("property checks run on 2-D problems only".into()));
    }
    let exact = cfg.exact()?;
    let cells = cfg.cells();
    let per_cell = map_slice(cfg.exec, &cells, |&(scheme, m)| -> Result<Vec<PropertyRecord>> {
        let d = Discretization::new(exact, scheme, m, cfg.exec)?;
        let name = scheme.name();
        let mut out = Vec::new();
        let mut worst: f64 = 0.0;
        for e in 0..d.mesh.num_elements() {
            let sum: f64 = d.sub.of_element(e).iter().map(|t| t.area).sum();
            worst = worst.max((sum - d.mesh.element_area()).abs() / d.mesh.element_area());
        }
        out.push(check("subtriangle_area_partition", name, m, worst, 1e-12));
        if let (EnrichmentScheme::Sgfem, Some(b)) = (scheme, &d.basis) {
            let v = b.w[..d.mesh.num_nodes()].iter().fold(0.0f64, |a, w| a.max(w.abs()));
            out.push(check("sgfem_nodal_vanishing", name, m, v, 0.0));
        }
        if d.has_enrichment() {
            let a = subspace_angle(&d.scaled.a11, &d.scaled.a12, &d.scaled.a22)?;
            let excess = (-a.lambda_max).max(a.lambda_max - 1.0).max(0.0);
            out.push(check("angle_lambda_in_unit_interval", name, m, excess, 1e-10));
        }
        Ok(out)
    });
    let mut out: Vec<PropertyRecord> =
        per_cell.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    out.push(check("boundary_flux_compatibility", "-", 0, exact.flux_balance().abs(), 1e-8));
    let (a0, a1) = exact.coefficients();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for &m in cfg.ms.iter().filter(|m| m.is_power_of_two() && **m >= 2) {
        let hier = MeshHierarchy::build(&exact.geometry(), Coefficients::new(a0, a1)?, m, cfg.smoothing, cfg.exec)?;
        let mut worst: f64 = 0.0;
        for l in 1..hier.num_levels() {
            let (p, r) = (&hier.prolong[l], &hier.restrict[l]);
            let x: Vec<f64> = (0..p.ncols).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..p.nrows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (lhs, rhs) = (dot(&p.matvec(&x), &y), dot(&x, &r.matvec(&y)));
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        out.push(check("transfer_adjointness", "FEM", m, worst, 1e-12));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(problem: ProblemKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::for_problem(problem);
        c.ms = if problem == ProblemKind::OneD { vec![10, 20] } else { vec![4, 8] };
        c
    }

    #[test]
    fn defaults_match_the_reference_setups() {
        let c = ExperimentConfig::default();
        assert_eq!((c.a0, c.a1, c.k, c.k_prime), (1.0, 10.0, 100.0, 4.0));
        assert!((c.radius - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.schemes.len(), 5);
    }

    #[test]
    fn empty_scheme_list_gives_empty_tables() {
        let mut c = small(ProblemKind::Straight);
        c.schemes.clear();
        assert!(run_convergence(&c).unwrap().is_empty());
        assert!(run_proximity(&c, &ProximitySweep::default()).unwrap().is_empty());
    }

    #[test]
    fn one_row_per_cell_with_consistent_width() {
        for problem in [ProblemKind::Straight, ProblemKind::Circle, ProblemKind::OneD] {
            let c = small(problem);
            let rows = run_convergence(&c).unwrap();
            assert_eq!(rows.len(), c.schemes.len() * c.ms.len());
            for r in &rows {
                assert_eq!(r.row().len(), ConvergenceRecord::header().len());
            }
        }
    }

    #[test]
    fn sequential_and_parallel_grids_agree() {
        let mut c = small(ProblemKind::Circle);
        c.exec = Exec::Sequential;
        let a = run_conditioning(&c).unwrap();
        c.exec = Exec::Parallel;
        let b = run_conditioning(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn proximity_line_is_parallel_to_mesh_diagonals() {
        let s = ProximitySweep::default();
        for &rho in &s.rhos {
            // The interface x + y = 1 - d0 sits rho cells past the diagonal x + y = k h.
            let offset = (1.0 - s.d0(rho)) * s.m as f64 - s.line as f64;
            assert!((offset - rho).abs() < 1e-12);
        }
    }
}
