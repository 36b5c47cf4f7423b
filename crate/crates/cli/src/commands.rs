//! Subcommands. Each one turns its arguments into tables plus the resolved
//! configuration recorded in the manifest.

use std::f64::consts::FRAC_PI_4;

use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ginprod::analytic::{
    self, dp_dbeta, hypergeom_pfq, mean_f, p2_22_integral, p_nn_single, p_theta_quadrature, p_theta_series,
    AnalyticError, Approx, QuadratureError, QuadratureSpec, SeriesResult,
};
use ginprod::entanglement::{
    fraction_cooptimal_nested, fraction_cooptimal_pairs, fraction_cooptimal_theta, EntanglementError,
};
use ginprod::montecarlo::{fit_gamma, Engine, Estimate, ExpectedRealCurve, ExperimentConfig, MonteCarloError};
use ginprod::sampling::SamplingError;
use ginprod::ThetaPoint;

use crate::output::{format_float, Cell, Table};

const HISTOGRAM: &[&str] = &["n", "K", "k", "count", "p_hat", "stderr"];
const CURVE: &[&str] = &["n", "K", "E", "stderr"];
const GAMMA: &[&str] = &["n", "gamma", "intercept", "rms_residual", "k_min", "k_max", "points"];
const CLOUD: &[&str] = &["trial", "re", "im"];
const ANALYTIC: &[&str] = &["name", "params", "value", "err_est"];

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::InvalidConfig(_) | MonteCarloError::OverBudget { .. } => CliError::Usage(e.to_string()),
            MonteCarloError::Pool(_) => CliError::Io(e.to_string()),
            MonteCarloError::TrialFailed { .. }
            | MonteCarloError::TooManyFailures { .. }
            | MonteCarloError::TooFewFitPoints(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Quadrature(QuadratureError::InvalidSpec(_))
            | AnalyticError::InvalidParameter(_)
            | AnalyticError::Unsupported(_) => CliError::Usage(e.to_string()),
            AnalyticError::Quadrature(_) | AnalyticError::Divergent => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EntanglementError> for CliError {
    fn from(e: EntanglementError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// What a subcommand hands back for emission.
pub struct Report {
    pub config: Value,
    pub tables: Vec<Table>,
    pub failures: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Probability that all n eigenvalues of a K-fold product are real.
    ProbAllReal(SweepArgs),
    /// Distribution of the number of real eigenvalues (parity-valid k only).
    Histogram(SweepArgs),
    /// Expected number of real eigenvalues over a grid of n and K.
    ExpectedSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Append a fit of ln(n − E) = intercept − γK for each n.
        #[arg(long)]
        fit_gamma: bool,
    },
    /// Closed-form and numerically integrated quantities.
    #[command(subcommand)]
    Analytic(AnalyticCommand),
    /// Frobenius-normalised eigenvalues of each sampled product.
    Eigencloud {
        #[arg(long)]
        n: usize,
        #[arg(long = "k-products")]
        k_products: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Fraction of concurrence-optimal pairs of real two-qubit states.
    #[command(subcommand)]
    Cooptimal(CooptimalCommand),
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Matrix dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Numbers of factors, comma separated; sorted and deduplicated.
    #[arg(long = "k-products", value_delimiter = ',', required = true)]
    pub k_products: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct QuadArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_subdivisions: usize,
}

impl QuadArgs {
    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    fn json(&self) -> Value {
        json!({ "abs_tol": self.abs_tol, "rel_tol": self.rel_tol, "max_subdivisions": self.max_subdivisions })
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SeriesArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = analytic::DEFAULT_MAX_TERMS)]
    pub max_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PThetaMethod {
    Quadrature,
    Series,
}

#[derive(Subcommand, Debug)]
pub enum AnalyticCommand {
    /// Probability that a Schmidt-angle product has real eigenvalues.
    PTheta {
        #[arg(long)]
        theta: f64,
        #[arg(long, value_enum, default_value_t = PThetaMethod::Quadrature)]
        method: PThetaMethod,
        #[command(flatten)]
        quad: QuadArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// All-real probability for two 2x2 factors, π/4.
    P2_22 {
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Average of p_θ − 1/2 over the Schmidt density, (π − 2)/4.
    MeanF {
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// 2^(−n(n−1)/4) for each n.
    PNn {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Derivative of p with respect to β = 1/sin 2θ, for β ≥ 1.
    DpDbeta {
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Generalized hypergeometric series pFq(top; bottom; z) for z in (−1, 1].
    Pfq {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        top: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        bottom: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        #[command(flatten)]
        series: SeriesArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum CooptimalCommand {
    /// Against the Schmidt state cos θ|00⟩ + sin θ|11⟩, θ in (0, π/4].
    Theta {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Over independent uniform pairs.
    Pairs {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Sample θ from its density first, then one state against it.
        #[arg(long)]
        nested: bool,
    },
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::ProbAllReal(_) => "prob-all-real".into(),
            Command::Histogram(_) => "histogram".into(),
            Command::ExpectedSweep { .. } => "expected-sweep".into(),
            Command::Analytic(a) => format!("analytic {}", a.name()),
            Command::Eigencloud { .. } => "eigencloud".into(),
            Command::Cooptimal(CooptimalCommand::Theta { .. }) => "cooptimal theta".into(),
            Command::Cooptimal(CooptimalCommand::Pairs { .. }) => "cooptimal pairs".into(),
        }
    }

    pub fn run(&self, engine: &Engine, seed: u64) -> Result<Report, CliError> {
        match self {
            Command::ProbAllReal(s) => histogram_report(engine, s, seed, true),
            Command::Histogram(s) => histogram_report(engine, s, seed, false),
            Command::ExpectedSweep { sweep, fit_gamma } => expected_report(engine, sweep, seed, *fit_gamma),
            Command::Analytic(a) => a.run(),
            Command::Eigencloud { n, k_products, trials } => cloud_report(engine, *n, *k_products, *trials, seed),
            Command::Cooptimal(c) => c.run(engine, seed),
        }
    }
}

/// Sorted, deduplicated K list with every (n, K) pair checked up front.
fn resolve_sweep(s: &SweepArgs, seed: u64) -> Result<Vec<usize>, CliError> {
    let mut ks = s.k_products.clone();
    ks.sort_unstable();
    ks.dedup();
    if s.n.is_empty() || ks.is_empty() {
        return Err(CliError::Usage("need at least one n and one K".into()));
    }
    for &n in &s.n {
        for (i, &k) in ks.iter().enumerate() {
            let offset = (i as u64).checked_mul(s.trials as u64);
            let cfg = ExperimentConfig::new(n, k, s.trials, seed);
            cfg.validate()?;
            let end = offset.and_then(|o| o.checked_add(s.trials as u64));
            if end.is_none_or(|e| e > ginprod::montecarlo::RESAMPLE_STREAM_BASE) {
                return Err(CliError::Usage("trials x |K| exceeds the stream range".into()));
            }
        }
    }
    Ok(ks)
}

/// Inputs up to this far above π/4 are read as π/4, so ten-decimal values
/// such as 0.7853981634 are accepted.
const THETA_SNAP: f64 = 1e-9;

fn theta_point(theta: f64) -> Result<ThetaPoint, CliError> {
    let t = if theta > FRAC_PI_4 && theta <= FRAC_PI_4 + THETA_SNAP {
        FRAC_PI_4
    } else {
        theta
    };
    Ok(ThetaPoint::new(t)?)
}

fn sweep_json(s: &SweepArgs, ks: &[usize]) -> Value {
    json!({ "n": s.n, "k_products": ks, "trials": s.trials })
}

fn histogram_report(engine: &Engine, s: &SweepArgs, seed: u64, all_real_only: bool) -> Result<Report, CliError> {
    let ks = resolve_sweep(s, seed)?;
    let mut table = Table::new("histogram", HISTOGRAM);
    let mut failures = 0;
    for &n in &s.n {
        for h in engine.sweep_histograms(n, &ks, s.trials, seed, 0)? {
            failures += h.failures;
            for b in h.bins().into_iter().filter(|b| !all_real_only || b.k == n) {
                table.push(vec![
                    n.into(),
                    h.config.k_factors.into(),
                    b.k.into(),
                    b.count.into(),
                    b.p_hat.into(),
                    b.stderr.into(),
                ]);
            }
        }
    }
    Ok(Report {
        config: sweep_json(s, &ks),
        tables: vec![table],
        failures,
    })
}

fn expected_report(engine: &Engine, s: &SweepArgs, seed: u64, with_fit: bool) -> Result<Report, CliError> {
    let ks = resolve_sweep(s, seed)?;
    let mut curve_table = Table::new("curve", CURVE);
    let mut gamma_table = Table::new("gamma", GAMMA);
    let mut failures = 0;
    for &n in &s.n {
        let hists = engine.sweep_histograms(n, &ks, s.trials, seed, 0)?;
        failures += hists.iter().map(|h| h.failures).sum::<u64>();
        let curve = ExpectedRealCurve::from_histograms(n, &hists);
        for ((&k, &e), &se) in curve.k_values.iter().zip(&curve.e_values).zip(&curve.stderr) {
            curve_table.push(vec![n.into(), k.into(), e.into(), se.into()]);
        }
        if with_fit {
            let g = fit_gamma(&curve)?;
            gamma_table.push(vec![
                n.into(),
                g.gamma.into(),
                g.intercept.into(),
                g.rms_residual.into(),
                g.k_min.into(),
                g.k_max.into(),
                g.points_used.into(),
            ]);
        }
    }
    let mut config = sweep_json(s, &ks);
    config["fit_gamma"] = json!(with_fit);
    let mut tables = vec![curve_table];
    if with_fit {
        tables.push(gamma_table);
    }
    Ok(Report {
        config,
        tables,
        failures,
    })
}

fn cloud_report(engine: &Engine, n: usize, k: usize, trials: usize, seed: u64) -> Result<Report, CliError> {
    let cfg = ExperimentConfig::new(n, k, trials, seed);
    let cloud = engine.eigencloud(&cfg)?;
    let mut table = Table::new("cloud", CLOUD);
    for p in &cloud.points {
        table.push(vec![p.trial.into(), p.re.into(), p.im.into()]);
    }
    Ok(Report {
        config: json!({ "n": n, "k_products": k, "trials": trials, "normalize_factors": cfg.normalize_factors }),
        tables: vec![table],
        failures: cloud.failures,
    })
}

/// `key=value` pairs joined by `;`, floats in round-trip form.
fn params(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn analytic_row(name: &str, params: String, value: f64, err: f64) -> Vec<Cell> {
    vec![name.into(), params.into(), value.into(), err.into()]
}

fn converged(r: SeriesResult, what: &str) -> Result<SeriesResult, CliError> {
    if r.converged {
        Ok(r)
    } else {
        Err(CliError::Numerical(format!(
            "{what} did not reach the tolerance in {} terms (last term {})",
            r.terms_used,
            format_float(r.last_term_magnitude)
        )))
    }
}

impl AnalyticCommand {
    fn name(&self) -> &'static str {
        match self {
            AnalyticCommand::PTheta { .. } => "p-theta",
            AnalyticCommand::P2_22 { .. } => "p2-22",
            AnalyticCommand::MeanF { .. } => "mean-f",
            AnalyticCommand::PNn { .. } => "p-nn",
            AnalyticCommand::DpDbeta { .. } => "dp-dbeta",
            AnalyticCommand::Pfq { .. } => "pfq",
        }
    }

    fn run(&self) -> Result<Report, CliError> {
        let name = self.name();
        let mut table = Table::new("analytic", ANALYTIC);
        let config = match self {
            AnalyticCommand::PTheta {
                theta,
                method,
                quad,
                series,
            } => {
                let tp = theta_point(*theta)?;
                let (a, mut p) = match method {
                    PThetaMethod::Quadrature => {
                        let a = p_theta_quadrature(tp, &quad.spec())?;
                        (a, vec![("method", "quadrature".to_owned())])
                    }
                    PThetaMethod::Series => {
                        let r = converged(p_theta_series(tp, series.tol, series.max_terms)?, "p_theta series")?;
                        let a = Approx {
                            value: r.value,
                            err_est: r.last_term_magnitude,
                        };
                        (a, vec![("method", "series".to_owned()), ("terms", r.terms_used.to_string())])
                    }
                };
                p.insert(0, ("theta", format!("{:?}", tp.theta)));
                table.push(analytic_row(name, params(&p), a.value, a.err_est));
                json!({
                    "theta": tp.theta,
                    "method": format!("{method:?}").to_lowercase(),
                    "quadrature": quad.json(),
                    "tol": series.tol,
                    "max_terms": series.max_terms,
                })
            }
            AnalyticCommand::P2_22 { quad } => {
                let a = p2_22_integral(&quad.spec())?;
                table.push(analytic_row(name, String::new(), a.value, a.err_est));
                json!({ "quadrature": quad.json() })
            }
            AnalyticCommand::MeanF { quad } => {
                let a = mean_f(&quad.spec())?;
                table.push(analytic_row(name, String::new(), a.value, a.err_est));
                json!({ "quadrature": quad.json() })
            }
            AnalyticCommand::PNn { n } => {
                for &k in n {
                    table.push(analytic_row(name, params(&[("n", k.to_string())]), p_nn_single(k)?, 0.0));
                }
                json!({ "n": n })
            }
            AnalyticCommand::DpDbeta { beta, quad } => {
                let a = dp_dbeta(*beta, &quad.spec())?;
                table.push(analytic_row(name, params(&[("beta", format!("{beta:?}"))]), a.value, a.err_est));
                json!({ "beta": beta, "quadrature": quad.json() })
            }
            AnalyticCommand::Pfq { top, bottom, z, series } => {
                let r = converged(hypergeom_pfq(top, bottom, *z, series.tol, series.max_terms)?, "pFq series")?;
                let p = params(&[
                    ("top", list(top)),
                    ("bottom", list(bottom)),
                    ("z", format!("{z:?}")),
                    ("terms", r.terms_used.to_string()),
                ]);
                table.push(analytic_row(name, p, r.value, r.last_term_magnitude));
                json!({ "top": top, "bottom": bottom, "z": z, "tol": series.tol, "max_terms": series.max_terms })
            }
        };
        Ok(Report {
            config,
            tables: vec![table],
            failures: 0,
        })
    }
}

impl CooptimalCommand {
    fn run(&self, engine: &Engine, seed: u64) -> Result<Report, CliError> {
        let mut table = Table::new("analytic", ANALYTIC);
        let (est, config): (Estimate, Value) = match self {
            CooptimalCommand::Theta { theta, trials } => {
                let tp = theta_point(*theta)?;
                let est = fraction_cooptimal_theta(engine, tp, *trials, seed)?;
                let p = params(&[("theta", format!("{:?}", tp.theta)), ("trials", trials.to_string())]);
                table.push(analytic_row("cooptimal-theta", p, est.value, est.stderr));
                (est, json!({ "theta": tp.theta, "trials": trials }))
            }
            CooptimalCommand::Pairs { trials, nested } => {
                let est = if *nested {
                    fraction_cooptimal_nested(engine, *trials, seed)?
                } else {
                    fraction_cooptimal_pairs(engine, *trials, seed)?
                };
                let p = params(&[("trials", trials.to_string()), ("nested", nested.to_string())]);
                table.push(analytic_row("cooptimal-pairs", p, est.value, est.stderr));
                (est, json!({ "trials": trials, "nested": nested }))
            }
        };
        debug_assert!(est.value.is_finite());
        Ok(Report {
            config,
            tables: vec![table],
            failures: 0,
        })
    }
}
