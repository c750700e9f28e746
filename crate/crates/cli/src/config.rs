//! Experiment configuration from a `key=value` file overlaid with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use sgfem_core::enrichment::EnrichmentScheme;
use sgfem_core::experiments::{ExperimentConfig, ProblemKind};
use sgfem_core::par::Exec;
use sgfem_core::solvers::Smoothing;

/// Options shared by every experiment.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Plain-text `key=value` file using the flag names as keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// straight | circle | oned
    #[arg(long)]
    pub problem: Option<String>,
    /// Enrichment scheme (fem, topological, geometric, mgfem, sgfem); repeatable.
    #[arg(long = "scheme")]
    pub schemes: Vec<String>,
    /// Mesh subdivisions per side; repeatable.
    #[arg(long = "m")]
    pub ms: Vec<usize>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    /// Exponent of the straight-interface solution.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub d0: Option<f64>,
    #[arg(long)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub xc: Option<f64>,
    #[arg(long)]
    pub yc: Option<f64>,
    #[arg(long)]
    pub rc: Option<f64>,
    /// Interface position of the 1-D problem.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Geometric enrichment radius.
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub kprime: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest m for which a direct solve verifies iterative results.
    #[arg(long = "direct-verify-max-m")]
    pub direct_verify_max_m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed Gauss-Seidel sweeps (pre = post) in the multigrid preconditioner.
    #[arg(long)]
    pub fixed_sweeps: Option<usize>,
    /// Run every grid on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Resolved configuration plus the output directory.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got '{}'", n + 1, raw.trim());
        };
        let key = k.trim().trim_start_matches("--").to_string();
        let values = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
        map.entry(key).or_default().extend(values);
    }
    Ok(map)
}

fn file_options(path: &Path) -> Result<Options> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map = parse_key_values(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut o = Options::default();
    for (key, values) in &map {
        let one = || -> Result<&str> {
            match values.as_slice() {
                [v] => Ok(v),
                _ => bail!("key '{key}' expects a single value"),
            }
        };
        let num = || -> Result<f64> { one()?.parse().with_context(|| format!("key '{key}'")) };
        match key.as_str() {
            "problem" => o.problem = Some(one()?.to_string()),
            "scheme" => o.schemes = values.clone(),
            "m" => {
                o.ms = values
                    .iter()
                    .map(|v| v.parse().with_context(|| format!("key 'm': '{v}'")))
                    .collect::<Result<_>>()?
            }
            "a0" => o.a0 = Some(num()?),
            "a1" => o.a1 = Some(num()?),
            "alpha" => o.alpha = Some(num()?),
            "d0" => o.d0 = Some(num()?),
            "theta0" => o.theta0 = Some(num()?),
            "xc" => o.xc = Some(num()?),
            "yc" => o.yc = Some(num()?),
            "rc" => o.rc = Some(num()?),
            "gamma" => o.gamma = Some(num()?),
            "R" => o.radius = Some(num()?),
            "k" => o.k = Some(num()?),
            "kprime" => o.kprime = Some(num()?),
            "out" => o.out = Some(PathBuf::from(one()?)),
            "direct-verify-max-m" => o.direct_verify_max_m = Some(one()?.parse()?),
            "seed" => o.seed = Some(one()?.parse()?),
            "fixed-sweeps" => o.fixed_sweeps = Some(one()?.parse()?),
            "sequential" => o.sequential = one()?.parse()?,
            other => bail!("unknown configuration key '{other}'"),
        }
    }
    Ok(o)
}

/// Flags take precedence over the file.
fn overlay(file: Options, flags: Options) -> Options {
    Options {
        config: flags.config,
        problem: flags.problem.or(file.problem),
        schemes: if flags.schemes.is_empty() { file.schemes } else { flags.schemes },
        ms: if flags.ms.is_empty() { file.ms } else { flags.ms },
        a0: flags.a0.or(file.a0),
        a1: flags.a1.or(file.a1),
        alpha: flags.alpha.or(file.alpha),
        d0: flags.d0.or(file.d0),
        theta0: flags.theta0.or(file.theta0),
        xc: flags.xc.or(file.xc),
        yc: flags.yc.or(file.yc),
        rc: flags.rc.or(file.rc),
        gamma: flags.gamma.or(file.gamma),
        radius: flags.radius.or(file.radius),
        k: flags.k.or(file.k),
        kprime: flags.kprime.or(file.kprime),
        out: flags.out.or(file.out),
        direct_verify_max_m: flags.direct_verify_max_m.or(file.direct_verify_max_m),
        seed: flags.seed.or(file.seed),
        fixed_sweeps: flags.fixed_sweeps.or(file.fixed_sweeps),
        sequential: flags.sequential || file.sequential,
    }
}

impl Options {
    pub fn resolve(self) -> Result<Resolved> {
        let o = match &self.config {
            Some(path) => overlay(file_options(path)?, self),
            None => self,
        };
        let problem = ProblemKind::parse(o.problem.as_deref().unwrap_or("straight"))?;
        let mut c = ExperimentConfig::for_problem(problem);
        macro_rules! set {
            ($($field:ident <- $opt:ident),*) => { $( if let Some(v) = o.$opt { c.$field = v; } )* };
        }
        set!(a0 <- a0, a1 <- a1, alpha <- alpha, d0 <- d0, theta0 <- theta0, xc <- xc, yc <- yc, rc <- rc,
             gamma <- gamma, radius <- radius, k <- k, k_prime <- kprime,
             direct_verify_max_m <- direct_verify_max_m, seed <- seed);
        if !o.ms.is_empty() {
            c.ms = o.ms.clone();
        }
        c = c.with_all_schemes();
        if !o.schemes.is_empty() {
            c.schemes =
                o.schemes.iter().map(|s| EnrichmentScheme::parse(s, c.radius)).collect::<sgfem_core::Result<_>>()?;
        }
        if let Some(n) = o.fixed_sweeps {
            c.smoothing = Smoothing::Fixed { pre: n, post: n };
        }
        if o.sequential {
            c.exec = Exec::Sequential;
        }
        c.validate()?;
        Ok(Resolved { config: c, out: o.out.unwrap_or_else(|| PathBuf::from("out")) })
    }
}
