//! Noise calibration, tuning admissibility, oracle-inequality right-hand
//! sides, and the ideal least-squares benchmark.

use std::f64::consts::PI;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::conditions::UdpCertificate;
use crate::error::{param, Error, Result};
use crate::linalg::{order_by_magnitude, tail_norms, DesignMatrix};
use crate::solvers::{Estimator, SupportLeastSquares};

/// Calibration of λ₀ so that ‖Xᵀε‖_∞ ≤ λ₀ holds with probability at least
/// `prob_floor` under i.i.d. N(0, σ²) noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub t: f64,
    pub lambda0: f64,
    /// Unclamped; can be negative for very small p.
    pub prob_floor: f64,
    pub col_norm_max: f64,
    pub p: usize,
}

impl NoiseModel {
    pub fn prob_floor_clamped(&self) -> f64 {
        self.prob_floor.max(0.0)
    }
}

pub fn noise_level(d: &DesignMatrix, sigma: f64, t: f64) -> Result<NoiseModel> {
    noise_level_for(d.column_norm_max(), d.p(), sigma, t)
}

/// λ₀ = (1+t)·max_j‖X_j‖₂·σ·√(log p) and
/// P ≥ 1 − √2 / ((1+t)√(π log p)·p^((1+t)²/2 − 1)).
pub fn noise_level_for(col_norm_max: f64, p: usize, sigma: f64, t: f64) -> Result<NoiseModel> {
    if p < 2 {
        return param(format!("noise calibration needs p ≥ 2, got {p}"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return param(format!("sigma must be ≥ 0, got {sigma}"));
    }
    if !(t >= 1.0 && t.is_finite()) {
        return param(format!("t must be ≥ 1, got {t}"));
    }
    if !(col_norm_max >= 0.0 && col_norm_max.is_finite()) {
        return param(format!("column norm must be ≥ 0, got {col_norm_max}"));
    }
    let log_p = (p as f64).ln();
    let lambda0 = (1.0 + t) * col_norm_max * sigma * log_p.sqrt();
    let exponent = (1.0 + t).powi(2) / 2.0 - 1.0;
    let prob_floor = 1.0 - 2f64.sqrt() / ((1.0 + t) * (PI * log_p).sqrt() * (p as f64).powf(exponent));
    Ok(NoiseModel { sigma, t, lambda0, prob_floor, col_norm_max, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    LassoL1,
    LassoPred,
    DantzigL1,
    DantzigPred,
}

impl Theorem {
    pub fn l1(estimator: Estimator) -> Self {
        match estimator {
            Estimator::Lasso => Theorem::LassoL1,
            Estimator::Dantzig => Theorem::DantzigL1,
        }
    }

    pub fn pred(estimator: Estimator) -> Self {
        match estimator {
            Estimator::Lasso => Theorem::LassoPred,
            Estimator::Dantzig => Theorem::DantzigPred,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SValue {
    pub s: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBoundReport {
    pub theorem: Theorem,
    /// Absent when the tuning condition fails.
    pub bound: Option<f64>,
    pub minimizing_s: Option<usize>,
    pub minimizing_subset: Vec<usize>,
    pub prefactor: Option<f64>,
    pub tuning_ok: bool,
    /// The strict lower limit λ must exceed; absent when no λ qualifies.
    pub lambda_threshold: Option<f64>,
    pub lambda: f64,
    pub lambda0: f64,
    pub kappa0: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    #[serde(rename = "S0")]
    pub s0: usize,
    pub per_s: Vec<SValue>,
}

fn kappa_multiplier(estimator: Estimator) -> f64 {
    match estimator {
        Estimator::Lasso => 2.0,
        Estimator::Dantzig => 4.0,
    }
}

/// λ₀/(1−2κ₀) for the lasso, λ₀/(1−4κ₀) for the Dantzig selector; `None`
/// when κ₀ is too large for any λ to qualify.
pub fn tuning_threshold(lambda0: f64, kappa0: f64, estimator: Estimator) -> Option<f64> {
    let room = 1.0 - kappa_multiplier(estimator) * kappa0;
    (room > 0.0).then(|| lambda0 / room)
}

/// Strict check λ > threshold, with no slack.
pub fn tuning_ok(lambda: f64, lambda0: f64, kappa0: f64, estimator: Estimator) -> bool {
    tuning_threshold(lambda0, kappa0, estimator).is_some_and(|th| lambda > th)
}

/// `factor` times the tuning threshold.
pub fn auto_lambda(lambda0: f64, kappa0: f64, estimator: Estimator, factor: f64) -> Result<f64> {
    match tuning_threshold(lambda0, kappa0, estimator) {
        Some(th) => Ok(factor * th),
        None => param(format!(
            "kappa0 = {kappa0} leaves no admissible lambda for the {estimator:?} estimator"
        )),
    }
}

fn check_inputs(beta_star: ArrayView1<f64>, cert: &UdpCertificate, lambda: f64, lambda0: f64) -> Result<()> {
    if !cert.is_informative() {
        return Err(Error::Uninformative);
    }
    if beta_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("target has non-finite entries".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("lambda must be > 0, got {lambda}"));
    }
    if !(lambda0 >= 0.0 && lambda0.is_finite()) {
        return param(format!("lambda0 must be ≥ 0, got {lambda0}"));
    }
    if !(cert.delta > 0.0 && cert.delta.is_finite()) {
        return param(format!("Delta must be > 0, got {}", cert.delta));
    }
    Ok(())
}

fn evaluate(
    theorem: Theorem,
    beta_star: ArrayView1<f64>,
    cert: &UdpCertificate,
    lambda: f64,
    lambda0: f64,
    estimator: Estimator,
    prefactor: Option<f64>,
    term: impl Fn(usize, f64) -> f64,
) -> OracleBoundReport {
    let ok = tuning_ok(lambda, lambda0, cert.kappa0, estimator);
    let tails = tail_norms(beta_star);
    let s_max = cert.s0.min(beta_star.len());
    let factor = prefactor.unwrap_or(1.0);
    let per_s: Vec<SValue> = (1..=s_max).map(|s| SValue { s, value: factor * term(s, tails[s]) }).collect();
    let best = per_s.iter().fold(None::<SValue>, |acc, v| match acc {
        Some(a) if a.value <= v.value => Some(a),
        _ => Some(*v),
    });
    let mut report = OracleBoundReport {
        theorem,
        bound: None,
        minimizing_s: None,
        minimizing_subset: Vec::new(),
        prefactor,
        tuning_ok: ok,
        lambda_threshold: tuning_threshold(lambda0, cert.kappa0, estimator),
        lambda,
        lambda0,
        kappa0: cert.kappa0,
        delta: cert.delta,
        s0: cert.s0,
        per_s,
    };
    if ok {
        if let Some(b) = best {
            let mut subset = order_by_magnitude(beta_star)[..b.s].to_vec();
            subset.sort_unstable();
            report.bound = Some(b.value);
            report.minimizing_s = Some(b.s);
            report.minimizing_subset = subset;
        }
    } else {
        report.prefactor = None;
        report.per_s.clear();
    }
    report
}

/// ℓ1 estimation bound: m/((1−λ₀/λ) − mκ₀)·min_s(λΔ²s + ‖β*_{S^c}‖₁), with
/// m = 2 for the lasso and 4 for the Dantzig selector.
pub fn l1_bound(
    beta_star: ArrayView1<f64>,
    cert: &UdpCertificate,
    lambda: f64,
    lambda0: f64,
    estimator: Estimator,
) -> Result<OracleBoundReport> {
    check_inputs(beta_star, cert, lambda, lambda0)?;
    let m = kappa_multiplier(estimator);
    let prefactor = m / ((1.0 - lambda0 / lambda) - m * cert.kappa0);
    let d2 = cert.delta * cert.delta;
    Ok(evaluate(Theorem::l1(estimator), beta_star, cert, lambda, lambda0, estimator, Some(prefactor), |s, tail| {
        lambda * d2 * s as f64 + tail
    }))
}

/// Prediction bound min_s(4λΔ√s + ‖β*_{S^c}‖₁/(Δ√s)), the same for both
/// estimators. `lambda0` only enters the tuning check.
pub fn pred_bound(
    beta_star: ArrayView1<f64>,
    cert: &UdpCertificate,
    lambda: f64,
    lambda0: f64,
    estimator: Estimator,
) -> Result<OracleBoundReport> {
    check_inputs(beta_star, cert, lambda, lambda0)?;
    let delta = cert.delta;
    Ok(evaluate(Theorem::pred(estimator), beta_star, cert, lambda, lambda0, estimator, None, |s, tail| {
        let rs = (s as f64).sqrt();
        4.0 * lambda * delta * rs + tail / (delta * rs)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultFactors {
    pub c_mult: f64,
    pub c_mult_prime: f64,
    /// C·p(1+log(p/n))√(log p)/(nρ_n), present when C is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_mult_optimal: Option<f64>,
    /// C·√(p log p (1+log(p/n)))/(ρ_n√n), present when C is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_mult_prime_optimal: Option<f64>,
}

/// δ²√(log p)/ρ_n and δ√(log p)/ρ_n, plus the Gaussian-design forms when a
/// constant C is given.
pub fn mult_factors(delta: f64, rho_n: f64, n: usize, p: usize, c: Option<f64>) -> Result<MultFactors> {
    if n < 2 || n > p {
        return param(format!("need 2 ≤ n ≤ p, got n = {n}, p = {p}"));
    }
    let mut f = mult_factors_log(delta, rho_n, (p as f64).ln())?;
    if let Some(c) = c {
        if !(c > 0.0 && c.is_finite()) {
            return param(format!("constant C must be > 0, got {c}"));
        }
        let (nf, pf) = (n as f64, p as f64);
        let log_p = pf.ln();
        let spread = 1.0 + (pf / nf).ln();
        f.c_mult_optimal = Some(c * pf * spread * log_p.sqrt() / (nf * rho_n));
        f.c_mult_prime_optimal = Some(c * (pf * log_p * spread).sqrt() / (rho_n * nf.sqrt()));
    }
    Ok(f)
}

/// The distortion factors with log p supplied directly.
pub fn mult_factors_log(delta: f64, rho_n: f64, log_p: f64) -> Result<MultFactors> {
    if !(rho_n > 0.0 && rho_n.is_finite()) {
        return param(format!("rho_n must be > 0, got {rho_n}"));
    }
    if !(delta >= 1.0 && delta.is_finite()) {
        return param(format!("delta must be ≥ 1, got {delta}"));
    }
    if !(log_p > 0.0) {
        return param(format!("log p must be > 0, got {log_p}"));
    }
    let root = log_p.sqrt();
    Ok(MultFactors {
        c_mult: delta * delta * root / rho_n,
        c_mult_prime: delta * root / rho_n,
        c_mult_optimal: None,
        c_mult_prime_optimal: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealBenchmark {
    pub support: Vec<usize>,
    pub sigma: f64,
    /// σ²·Trace((X_SᵀX_S)⁻¹) = E‖β^ideal − β*_S‖₂².
    pub trace_term: f64,
    /// σ²|S| = E‖Xβ^ideal − Xβ*_S‖₂².
    pub pred_term: f64,
    /// σ|S|/ρ₁ + ‖β*_{S^c}‖₁.
    pub l1_benchmark: f64,
    /// σ√|S| + ρ₁‖β*_{S^c}‖₁.
    pub pred_benchmark: f64,
    /// (σ/ρ₁)²|S|, a lower bound on `trace_term`.
    pub trace_lower: f64,
    pub tail: f64,
}

pub fn ideal_benchmark(d: &DesignMatrix, beta_star: ArrayView1<f64>, sigma: f64, support: &[usize]) -> Result<IdealBenchmark> {
    if beta_star.len() != d.p() {
        return Err(Error::DimensionMismatch { expected: d.p(), found: beta_star.len() });
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return param(format!("sigma must be ≥ 0, got {sigma}"));
    }
    let ls = SupportLeastSquares::new(d, support)?;
    let s = support.len() as f64;
    let rho1 = d.largest_singular();
    let total: f64 = beta_star.iter().map(|b| b.abs()).sum();
    let inside: f64 = support.iter().map(|&j| beta_star[j].abs()).sum();
    let tail = (total - inside).max(0.0);
    let sigma2 = sigma * sigma;
    Ok(IdealBenchmark {
        support: support.to_vec(),
        sigma,
        trace_term: sigma2 * ls.trace_inverse_gram(),
        pred_term: sigma2 * s,
        l1_benchmark: sigma * s / rho1 + tail,
        pred_benchmark: sigma * s.sqrt() + rho1 * tail,
        trace_lower: sigma2 * s / (rho1 * rho1),
        tail,
    })
}
