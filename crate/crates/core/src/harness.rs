//! Synthetic problems and Monte-Carlo validation of the oracle inequalities.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{ideal_benchmark, l1_bound, noise_level, pred_bound, tuning_threshold, NoiseModel};
use crate::conditions::{rip_constant, udp_from_distortion, udp_from_rip, UdpCertificate};
use crate::distortion::distortion_exact;
use crate::error::{param, Error, Result};
use crate::linalg::{norm1, norm2, norm_inf, DesignMatrix, DesignSummary};
use crate::rng::{gaussian_vec, rng_for, Stream};
use crate::solvers::{dantzig, lasso, Estimator, SolverStatus, SupportLeastSquares, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// λ is never set below this, so σ = 0 still yields a well-posed problem.
pub const LAMBDA_FLOOR: f64 = 1e-12;
/// Numerical slack for bound and diagnostic comparisons.
pub const CHECK_SLACK: f64 = 1e-7;

pub fn gen_gaussian_design(n: usize, p: usize, normalize: bool, seed: u64) -> Result<DesignMatrix> {
    if n == 0 || n > p {
        return param(format!("need 1 ≤ n ≤ p, got n = {n}, p = {p}"));
    }
    let mut rng = rng_for(seed, Stream::Design);
    let flat = gaussian_vec(&mut rng, n * p);
    let mut x = Array2::from_shape_vec((n, p), flat.to_vec()).expect("shape matches length");
    if normalize {
        for mut col in x.columns_mut() {
            let norm = norm2(col.view());
            if norm == 0.0 {
                return Err(Error::InvalidInput("drew an all-zero column".into()));
            }
            col /= norm;
        }
    }
    DesignMatrix::with_default_tol(x)
}

/// `s` coordinates chosen uniformly, each set to ±amplitude with a fair sign.
pub fn gen_sparse_target(p: usize, s: usize, amplitude: f64, seed: u64) -> Result<Array1<f64>> {
    if s == 0 || s > p {
        return param(format!("need 1 ≤ s ≤ p, got s = {s}, p = {p}"));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return param(format!("amplitude must be > 0, got {amplitude}"));
    }
    let mut rng = rng_for(seed, Stream::Target);
    let mut beta = Array1::zeros(p);
    for j in sample(&mut rng, p, s).into_vec() {
        beta[j] = if rng.random::<bool>() { amplitude } else { -amplitude };
    }
    Ok(beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub noise_event_held: bool,
    /// ‖Xᵀε‖_∞.
    pub noise_sup: f64,
    pub lambda: f64,
    pub l1_error: f64,
    pub pred_error: f64,
    pub bound_l1: Option<f64>,
    pub bound_pred: Option<f64>,
    pub violated: bool,
    /// Vacuously true off the noise event.
    pub appendix_diag_ok: bool,
    /// Right side minus left side of the basic inequality, on the event.
    pub appendix_margin: Option<f64>,
    pub solver_status: SolverStatus,
    pub kkt_residual: f64,
}

/// Everything a trial needs that does not depend on the noise draw.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub design: &'a DesignMatrix,
    pub beta_star: Array1<f64>,
    pub certificate: UdpCertificate,
    pub noise: NoiseModel,
    pub estimator: Estimator,
    pub lambda: f64,
    pub lambda_floored: bool,
    pub tuning_ok: bool,
    pub bound_l1: Option<f64>,
    pub bound_pred: Option<f64>,
    signal: Array1<f64>,
}

impl<'a> TrialSetup<'a> {
    /// λ = lambda_rule·λ₀/(1−2κ₀) for the lasso, /(1−4κ₀) for the Dantzig
    /// selector, floored at [`LAMBDA_FLOOR`].
    pub fn new(
        design: &'a DesignMatrix,
        beta_star: Array1<f64>,
        certificate: UdpCertificate,
        sigma: f64,
        t: f64,
        lambda_rule: f64,
        estimator: Estimator,
    ) -> Result<Self> {
        if beta_star.len() != design.p() {
            return Err(Error::DimensionMismatch { expected: design.p(), found: beta_star.len() });
        }
        if !(lambda_rule > 1.0 && lambda_rule.is_finite()) {
            return param(format!("lambda_rule must be > 1, got {lambda_rule}"));
        }
        let noise = noise_level(design, sigma, t)?;
        let Some(threshold) = tuning_threshold(noise.lambda0, certificate.kappa0, estimator) else {
            return param(format!(
                "kappa0 = {} leaves no admissible lambda for the {estimator:?} estimator",
                certificate.kappa0
            ));
        };
        let raw = lambda_rule * threshold;
        let lambda = raw.max(LAMBDA_FLOOR);
        let (bound_l1, bound_pred, tuning_ok) = if certificate.is_informative() {
            let l1 = l1_bound(beta_star.view(), &certificate, lambda, noise.lambda0, estimator)?;
            let pred = pred_bound(beta_star.view(), &certificate, lambda, noise.lambda0, estimator)?;
            (l1.bound, pred.bound, l1.tuning_ok)
        } else {
            (None, None, crate::bounds::tuning_ok(lambda, noise.lambda0, certificate.kappa0, estimator))
        };
        let signal = design.apply(beta_star.view());
        Ok(TrialSetup {
            design,
            beta_star,
            certificate,
            noise,
            estimator,
            lambda,
            lambda_floored: raw < LAMBDA_FLOOR,
            tuning_ok,
            bound_l1,
            bound_pred,
            signal,
        })
    }

    pub fn run(&self, seed: u64) -> Result<TrialRecord> {
        let d = self.design;
        let mut rng = rng_for(seed, Stream::Noise);
        let eps = gaussian_vec(&mut rng, d.n()) * self.noise.sigma;
        let y = &self.signal + &eps;
        let noise_sup = norm_inf(d.apply_t(eps.view()).view());
        let event = noise_sup <= self.noise.lambda0;

        let prob = crate::solvers::RegressionProblem::new(d, y)?;
        let fit = match self.estimator {
            Estimator::Lasso => lasso(&prob, self.lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?,
            Estimator::Dantzig => dantzig(&prob, self.lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?,
        };
        let h = Array1::from(fit.estimate.clone()) - &self.beta_star;
        let xh = d.apply(h.view());
        let l1_error = norm1(h.view());
        let pred_error = norm2(xh.view());

        let exceeds = |err: f64, bound: Option<f64>| bound.is_some_and(|b| err > b + CHECK_SLACK * (1.0 + b));
        let violated = event && (exceeds(l1_error, self.bound_l1) || exceeds(pred_error, self.bound_pred));

        let appendix_margin = (event && self.lambda >= self.noise.lambda0)
            .then(|| appendix_margin(self.estimator, h.view(), xh.view(), self.beta_star.view(), self.lambda, self.noise.lambda0));
        Ok(TrialRecord {
            seed,
            noise_event_held: event,
            noise_sup,
            lambda: self.lambda,
            l1_error,
            pred_error,
            bound_l1: self.bound_l1,
            bound_pred: self.bound_pred,
            violated,
            appendix_diag_ok: appendix_margin.is_none_or(|m| m >= -CHECK_SLACK),
            appendix_margin,
            solver_status: fit.status,
            kkt_residual: fit.kkt_residual,
        })
    }
}

/// min_S(‖h_S‖₁ + ‖β*_{S^c}‖₁) minus the left side of the basic inequality:
/// (1/2λ)[½‖Xh‖² + (λ−λ₀)‖h‖₁] for the lasso, (1/4λ)[‖Xh‖² + (λ−λ₀)‖h‖₁]
/// for the Dantzig selector. The minimum over S is Σ_i min(|h_i|, |β*_i|).
pub fn appendix_margin(
    estimator: Estimator,
    h: ArrayView1<f64>,
    xh: ArrayView1<f64>,
    beta_star: ArrayView1<f64>,
    lambda: f64,
    lambda0: f64,
) -> f64 {
    let fit = xh.dot(&xh);
    let spread = (lambda - lambda0) * norm1(h);
    let lhs = match estimator {
        Estimator::Lasso => (0.5 * fit + spread) / (2.0 * lambda),
        Estimator::Dantzig => (fit + spread) / (4.0 * lambda),
    };
    let rhs: f64 = h.iter().zip(beta_star.iter()).map(|(a, b)| a.abs().min(b.abs())).sum();
    rhs - lhs
}

#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    d: &DesignMatrix,
    beta_star: Array1<f64>,
    cert: UdpCertificate,
    sigma: f64,
    t: f64,
    lambda_rule: f64,
    estimator: Estimator,
    seed: u64,
) -> Result<TrialRecord> {
    TrialSetup::new(d, beta_star, cert, sigma, t, lambda_rule, estimator)?.run(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateSource {
    /// Exact kernel distortion; needs kernel dimension ≤ 3.
    #[default]
    DistortionExact,
    /// Exhaustive RIP constant of order 5·`order`.
    Rip { order: usize },
    Assumed {
        #[serde(rename = "S0")]
        s0: usize,
        #[serde(rename = "Delta")]
        delta: f64,
    },
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_distortion_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    pub t: f64,
    pub kappa0: f64,
    pub lambda_rule: f64,
    pub estimator: Estimator,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub certificate_source: CertificateSource,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default = "default_distortion_tol")]
    pub distortion_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub design: DesignSummary,
    pub certificate: UdpCertificate,
    pub certificate_informative: bool,
    /// The target has more nonzeros than S0.
    pub target_exceeds_s0: bool,
    pub lambda0: f64,
    pub lambda: f64,
    pub lambda_floored: bool,
    pub tuning_ok: bool,
    pub bound_l1: Option<f64>,
    pub bound_pred: Option<f64>,
    pub trials: usize,
    pub event_count: usize,
    pub event_frequency: f64,
    pub prob_floor: f64,
    pub violations: usize,
    pub appendix_failures: usize,
    pub solver_unconverged: usize,
    pub mean_l1_error: Option<f64>,
    pub median_l1_error: Option<f64>,
    pub mean_pred_error: Option<f64>,
    pub median_pred_error: Option<f64>,
    pub max_l1_ratio: Option<f64>,
    pub max_pred_ratio: Option<f64>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

fn certificate_for(config: &ExperimentConfig, d: &DesignMatrix) -> Result<UdpCertificate> {
    match &config.certificate_source {
        CertificateSource::DistortionExact => {
            let est = distortion_exact(d, config.distortion_tol)?;
            udp_from_distortion(&est, d.certifiable_rho_n()?, config.kappa0, d.p())
        }
        CertificateSource::Rip { order } => {
            let theta = rip_constant(d, 5 * order)?;
            udp_from_rip(theta, *order, config.kappa0)
        }
        CertificateSource::Assumed { s0, delta } => UdpCertificate::assumed(*s0, config.kappa0, *delta),
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

/// Design and target come from `seed`; trial i draws its noise from seed + i.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = gen_gaussian_design(config.n, config.p, config.normalize, config.seed)?;
    let beta = gen_sparse_target(config.p, config.s, config.amplitude, config.seed)?;
    let cert = certificate_for(config, &d)?;
    let setup = TrialSetup::new(&d, beta, cert.clone(), config.sigma, config.t, config.lambda_rule, config.estimator)?;

    let records = (0..config.trials)
        .into_par_iter()
        .map(|i| setup.run(config.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;

    let l1: Vec<f64> = records.iter().map(|r| r.l1_error).collect();
    let pred: Vec<f64> = records.iter().map(|r| r.pred_error).collect();
    let event_count = records.iter().filter(|r| r.noise_event_held).count();
    let ratio = |err: &dyn Fn(&TrialRecord) -> f64, bound: Option<f64>| {
        bound.filter(|&b| b > 0.0).and_then(|b| {
            records.iter().filter(|r| r.noise_event_held).map(|r| err(r) / b).reduce(f64::max)
        })
    };
    Ok(ExperimentReport {
        config: config.clone(),
        design: d.summary(),
        certificate_informative: cert.is_informative(),
        target_exceeds_s0: config.s > cert.s0,
        certificate: cert,
        lambda0: setup.noise.lambda0,
        lambda: setup.lambda,
        lambda_floored: setup.lambda_floored,
        tuning_ok: setup.tuning_ok,
        bound_l1: setup.bound_l1,
        bound_pred: setup.bound_pred,
        trials: records.len(),
        event_count,
        event_frequency: if records.is_empty() { 0.0 } else { event_count as f64 / records.len() as f64 },
        prob_floor: setup.noise.prob_floor,
        violations: records.iter().filter(|r| r.violated).count(),
        appendix_failures: records.iter().filter(|r| !r.appendix_diag_ok).count(),
        solver_unconverged: records.iter().filter(|r| r.solver_status != SolverStatus::Converged).count(),
        mean_l1_error: mean(&l1),
        median_l1_error: median(&l1),
        mean_pred_error: mean(&pred),
        median_pred_error: median(&pred),
        max_l1_ratio: ratio(&|r| r.l1_error, setup.bound_l1),
        max_pred_ratio: ratio(&|r| r.pred_error, setup.bound_pred),
        records,
    })
}

/// Writes one CSV row per trial.
pub fn write_trials_csv<W: std::io::Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealMonteCarlo {
    pub trials: usize,
    /// Mean of ‖β^ideal − β*_S‖₂².
    pub mean_sq_error: f64,
    /// Mean of ‖Xβ^ideal − Xβ*_S‖₂².
    pub mean_sq_pred_error: f64,
    pub se_sq_error: f64,
    pub se_sq_pred_error: f64,
    pub trace_term: f64,
    pub pred_term: f64,
    pub trace_lower: f64,
    /// |empirical − exact| / exact; absent when the exact value is 0.
    pub rel_dev_error: Option<f64>,
    pub rel_dev_pred: Option<f64>,
}

/// Empirical risk of least squares on `support`, over `trials` noise draws
/// seeded seed, seed+1, ….
pub fn monte_carlo_ideal(
    d: &DesignMatrix,
    beta_star: ArrayView1<f64>,
    sigma: f64,
    support: &[usize],
    trials: usize,
    seed: u64,
) -> Result<IdealMonteCarlo> {
    if trials == 0 {
        return param("trials must be ≥ 1");
    }
    let bench = ideal_benchmark(d, beta_star, sigma, support)?;
    let ls = SupportLeastSquares::new(d, support)?;
    let mut target = Array1::<f64>::zeros(d.p());
    for &j in support {
        target[j] = beta_star[j];
    }
    let signal = d.apply(beta_star);
    let target_fit = d.apply(target.view());

    let draws: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed.wrapping_add(i as u64), Stream::Noise);
            let y = &signal + &(gaussian_vec(&mut rng, d.n()) * sigma);
            let est = ls.solve(y.view());
            let diff = &est - &target;
            let fit = d.apply(est.view()) - &target_fit;
            (diff.dot(&diff), fit.dot(&fit))
        })
        .collect();

    let n = trials as f64;
    let stats = |pick: fn(&(f64, f64)) -> f64| {
        let m = draws.iter().map(pick).sum::<f64>() / n;
        let var = if trials > 1 { draws.iter().map(|x| (pick(x) - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        (m, (var / n).sqrt())
    };
    let (mean_err, se_err) = stats(|x| x.0);
    let (mean_pred, se_pred) = stats(|x| x.1);
    let rel = |emp: f64, exact: f64| (exact > 0.0).then(|| (emp - exact).abs() / exact);
    Ok(IdealMonteCarlo {
        trials,
        mean_sq_error: mean_err,
        mean_sq_pred_error: mean_pred,
        se_sq_error: se_err,
        se_sq_pred_error: se_pred,
        trace_term: bench.trace_term,
        pred_term: bench.pred_term,
        trace_lower: bench.trace_lower,
        rel_dev_error: rel(mean_err, bench.trace_term),
        rel_dev_pred: rel(mean_pred, bench.pred_term),
    })
}
