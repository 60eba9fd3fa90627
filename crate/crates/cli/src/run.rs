use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::Serialize;
use udp_core::bounds::{auto_lambda, ideal_benchmark, l1_bound, noise_level, pred_bound, IdealBenchmark, NoiseModel};
use udp_core::conditions::{
    cone_constant_estimate, h_falsify, rip_constant, udp_falsify, udp_from_distortion, ConditionParameters,
    ConditionReport, ConeKind, UdpCertificate,
};
use udp_core::distortion::{distortion_exact, distortion_search, DistortionEstimate};
use udp_core::harness::{monte_carlo_ideal, run_experiment, write_trials_csv, ExperimentConfig, IdealMonteCarlo};
use udp_core::io::{read_matrix_csv, read_vector_csv};
use udp_core::linalg::{DesignMatrix, DesignSummary};
use udp_core::solvers::{dantzig, lasso, Estimator, RegressionProblem, SolverResult};
use udp_core::Error;

use crate::args::*;

pub const EXIT_OK: u8 = 0;
pub const EXIT_COMPUTE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TUNING: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Compute(_) => EXIT_COMPUTE,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

/// A serialised result document and the exit code it should produce.
pub struct Outcome {
    pub document: serde_json::Value,
    pub code: u8,
}

fn ok<T: Serialize>(value: &T) -> Result<Outcome, Failure> {
    with_code(value, EXIT_OK)
}

fn with_code<T: Serialize>(value: &T, code: u8) -> Result<Outcome, Failure> {
    let document = serde_json::to_value(value).map_err(|e| Failure::Compute(format!("serialising result: {e}")))?;
    Ok(Outcome { document, code })
}

fn require_file(path: &Path, flag: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{flag}: no such file '{}'", path.display())))
    }
}

fn load_matrix(path: &Path, header: bool) -> Result<Array2<f64>, Failure> {
    read_matrix_csv(path, header).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))
}

fn load_vector(path: &Path, header: bool) -> Result<Array1<f64>, Failure> {
    read_vector_csv(path, header).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))
}

fn load_design(path: &Path, header: bool) -> Result<DesignMatrix, Failure> {
    Ok(DesignMatrix::with_default_tol(load_matrix(path, header)?)?)
}

fn load_certificate(path: &Path) -> Result<UdpCertificate, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: not a certificate: {e}", path.display())))
}

pub fn write_document(doc: &serde_json::Value, pretty: bool, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = if pretty { serde_json::to_string_pretty(doc) } else { serde_json::to_string(doc) }
        .map_err(|e| Failure::Compute(e.to_string()))?;
    text.push('\n');
    let result = match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush())
        }
    };
    result.map_err(|e| Failure::Compute(format!("writing output: {e}")))
}

pub fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Certify(a) => certify(a, g),
        Command::Conditions(a) => conditions(a, g),
        Command::Solve(a) => solve(a, g),
        Command::Bound(a) => bound(a, g),
        Command::Ideal(a) => ideal(a, g),
        Command::Experiment(a) => experiment(a, g),
    }
}

#[derive(Serialize)]
struct CertifyReport {
    design: DesignSummary,
    distortion: DistortionEstimate,
    certificate: UdpCertificate,
}

fn certify(a: &CertifyArgs, g: &GlobalOpts) -> Result<Outcome, Failure> {
    require_file(&a.matrix, "--matrix")?;
    let d = load_design(&a.matrix, g.header)?;
    let rho_n = d.certifiable_rho_n()?;
    let est = match a.method {
        DistortionMethodArg::Exact => distortion_exact(&d, a.tol)?,
        DistortionMethodArg::Search => distortion_search(&d, a.restarts, a.iters, g.seed)?,
    };
    if let Some(w) = &est.warning {
        eprintln!("warning: {w}");
    }
    if !(a.to_udp || a.cert_out.is_some()) {
        return ok(&est);
    }
    let kappa0 = a.kappa0.expect("clap enforces --kappa0");
    let cert = udp_from_distortion(&est, rho_n, kappa0, d.p())?;
    if !cert.is_informative() {
        eprintln!("warning: certificate is uninformative (S0 = 0)");
    }
    if let Some(path) = &a.cert_out {
        let doc = serde_json::to_value(&cert).map_err(|e| Failure::Compute(e.to_string()))?;
        write_document(&doc, g.pretty, Some(path))?;
    }
    ok(&CertifyReport { design: d.summary(), distortion: est, certificate: cert })
}

fn conditions(a: &ConditionsArgs, g: &GlobalOpts) -> Result<Outcome, Failure> {
    require_file(&a.matrix, "--matrix")?;
    if let Some(c) = &a.cert {
        require_file(c, "--cert")?;
    }
    let cert = a.cert.as_deref().map(load_certificate).transpose()?;
    let d = load_design(&a.matrix, g.header)?;
    let order = a.re_s.or(a.rip_s).unwrap_or(1);
    if order > d.p() {
        return Err(Failure::Usage(format!("order S = {order} exceeds p = {}", d.p())));
    }
    let rip_theta = a.rip_s.map(|s| rip_constant(&d, s)).transpose()?;
    let (re, compat) = match a.re_s {
        Some(s) => (
            Some(cone_constant_estimate(&d, s, a.c0, ConeKind::Re, a.restarts, g.seed)?),
            Some(cone_constant_estimate(&d, s, a.c0, ConeKind::Compatibility, a.restarts, g.seed)?),
        ),
        None => (None, None),
    };
    let (udp_cx, h_cx) = if a.falsify_budget > 0 {
        let udp = match &cert {
            Some(c) => {
                if !c.is_informative() {
                    eprintln!("warning: certificate has S0 = 0; the UDP search is vacuous");
                }
                udp_falsify(&d, c, a.falsify_budget, g.seed)?
            }
            None => None,
        };
        (udp, h_falsify(&d, order, a.kappa, a.falsify_budget, g.seed)?)
    } else {
        (None, None)
    };
    ok(&ConditionReport {
        rip_theta,
        re_kappa_upper: re,
        compat_phi_upper: compat,
        udp_counterexample: udp_cx,
        h_counterexample: h_cx,
        parameters: ConditionParameters { order, c0: a.c0, kappa: a.kappa },
    })
}

#[derive(Serialize)]
struct SolveReport {
    #[serde(flatten)]
    result: SolverResult,
    residual_norm: f64,
    correlation_sup: f64,
}

fn solve(a: &SolveArgs, g: &GlobalOpts) -> Result<Outcome, Failure> {
    let estimator: Estimator = a.method.into();
    let lambda_ok = match estimator {
        Estimator::Lasso => a.lambda > 0.0,
        Estimator::Dantzig => a.lambda >= 0.0,
    };
    if !(lambda_ok && a.lambda.is_finite()) {
        let rule = if estimator == Estimator::Lasso { "> 0" } else { "≥ 0" };
        return Err(Failure::Usage(format!("--lambda must be {rule} for {estimator:?}, got {}", a.lambda)));
    }
    require_file(&a.matrix, "--matrix")?;
    require_file(&a.response, "--response")?;
    let d = load_design(&a.matrix, g.header)?;
    let y = load_vector(&a.response, g.header)?;
    let prob = RegressionProblem::new(&d, y)?;
    let result = match estimator {
        Estimator::Lasso => lasso(&prob, a.lambda, a.tol, a.max_iter)?,
        Estimator::Dantzig => dantzig(&prob, a.lambda, a.tol, a.max_iter)?,
    };
    let beta = Array1::from(result.estimate.clone());
    let resid = &prob.response - &d.apply(beta.view());
    let residual_norm = udp_core::linalg::norm2(resid.view());
    let correlation_sup = udp_core::linalg::norm_inf(d.apply_t(resid.view()).view());
    ok(&SolveReport { result, residual_norm, correlation_sup })
}

fn bound(a: &BoundArgs, g: &GlobalOpts) -> Result<Outcome, Failure> {
    require_file(&a.matrix, "--matrix")?;
    require_file(&a.target, "--target")?;
    require_file(&a.cert, "--cert")?;
    let cert = load_certificate(&a.cert)?;
    let d = load_design(&a.matrix, g.header)?;
    let beta = load_vector(&a.target, g.header)?;
    if beta.len() != d.p() {
        return Err(Error::DimensionMismatch { expected: d.p(), found: beta.len() }.into());
    }
    let noise: NoiseModel = noise_level(&d, a.sigma, a.t)?;
    let estimator: Estimator = a.estimator.into();
    let lambda = match a.lambda {
        LambdaArg::Value(v) => v,
        LambdaArg::Auto => auto_lambda(noise.lambda0, cert.kappa0, estimator, 1.01)?,
    };
    if !(lambda > 0.0) {
        return Err(Failure::Compute(format!(
            "automatic lambda is {lambda} (sigma = 0 gives lambda0 = 0); pass --lambda explicitly"
        )));
    }
    let report = match a.kind {
        BoundKind::L1 => l1_bound(beta.view(), &cert, lambda, noise.lambda0, estimator)?,
        BoundKind::Pred => pred_bound(beta.view(), &cert, lambda, noise.lambda0, estimator)?,
    };
    if report.tuning_ok {
        ok(&report)
    } else {
        eprintln!(
            "tuning condition fails: lambda = {lambda} does not exceed {}",
            report.lambda_threshold.map_or("any admissible threshold".to_string(), |t| t.to_string())
        );
        with_code(&report, EXIT_TUNING)
    }
}

#[derive(Serialize)]
struct IdealReport {
    benchmark: IdealBenchmark,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<IdealMonteCarlo>,
}

fn ideal(a: &IdealArgs, g: &GlobalOpts) -> Result<Outcome, Failure> {
    require_file(&a.matrix, "--matrix")?;
    require_file(&a.target, "--target")?;
    let d = load_design(&a.matrix, g.header)?;
    let beta = load_vector(&a.target, g.header)?;
    let support = match &a.support {
        Some(s) => s.clone(),
        None => (0..beta.len()).filter(|&j| beta[j] != 0.0).collect(),
    };
    if support.is_empty() {
        return Err(Failure::Usage("support is empty; pass --support".into()));
    }
    let benchmark = ideal_benchmark(&d, beta.view(), a.sigma, &support)?;
    let monte_carlo = a.trials.map(|t| monte_carlo_ideal(&d, beta.view(), a.sigma, &support, t, g.seed)).transpose()?;
    ok(&IdealReport { benchmark, monte_carlo })
}

fn experiment(a: &ExperimentArgs, _g: &GlobalOpts) -> Result<Outcome, Failure> {
    require_file(&a.config, "--config")?;
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Usage(format!("{}: {e}", a.config.display())))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: invalid config: {e}", a.config.display())))?;
    let report = run_experiment(&config)?;
    if let Some(path) = &a.dump_trials {
        let file = File::create(path).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))?;
        write_trials_csv(&report.records, BufWriter::new(file))?;
    }
    eprintln!(
        "{} trials, event frequency {:.4}, violations {}",
        report.trials, report.event_frequency, report.violations
    );
    ok(&report)
}
