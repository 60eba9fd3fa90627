//! UDP certificates and the classical design conditions.
//!
//! UDP(S0, κ0, Δ) asks that ‖γ_S‖₁ ≤ Δ√s‖Xγ‖₂ + κ0‖γ‖₁ for every γ and every
//! |S| = s ≤ S0. Certificates come from sound routes (kernel distortion, RIP,
//! RE, compatibility); the falsifiers search for violations and can only
//! refute, never prove.

use itertools::Itertools;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::DistortionEstimate;
use crate::error::{param, Error, Result};
use crate::linalg::{norm1, norm2, order_by_magnitude, symmetric_eigen, DesignMatrix};
use crate::rng::{gaussian_vec, rng_for, Stream};

/// Absolute slack before a numerical excess counts as a violation.
pub const VIOLATION_SLACK: f64 = 1e-9;
/// Largest number of supports `rip_constant` will enumerate.
pub const RIP_SUPPORT_LIMIT: u128 = 2_000_000;
/// Supports enumerated exhaustively by `cone_constant_estimate` before it
/// switches to sampling.
pub const CONE_SUPPORT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Distortion,
    Rip,
    Re,
    Compatibility,
    Assumed,
}

/// Source quantities a certificate was derived from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_5s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_compat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UdpCertificate {
    #[serde(rename = "S0")]
    pub s0: usize,
    pub kappa0: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub provenance: Provenance,
    #[serde(default)]
    pub inputs: CertificateInputs,
}

impl UdpCertificate {
    /// A certificate taken on faith (no derivation attached).
    pub fn assumed(s0: usize, kappa0: f64, delta: f64) -> Result<Self> {
        if !(kappa0 > 0.0 && kappa0 < 0.5) {
            return param(format!("kappa0 must lie in (0, 1/2), got {kappa0}"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return param(format!("Delta must be > 0, got {delta}"));
        }
        Ok(UdpCertificate {
            s0,
            kappa0,
            delta,
            provenance: Provenance::Assumed,
            inputs: CertificateInputs::default(),
        })
    }

    pub fn is_informative(&self) -> bool {
        self.s0 >= 1
    }
}

/// S0 = ⌊(κ0/δ)²p⌋ and Δ = 2δ/ρ_n.
pub fn udp_from_distortion(
    est: &DistortionEstimate,
    rho_n: f64,
    kappa0: f64,
    p: usize,
) -> Result<UdpCertificate> {
    if !(kappa0 > 0.0 && kappa0 < 0.5) {
        return param(format!("kappa0 must lie in (0, 1/2), got {kappa0}"));
    }
    if !(rho_n > 0.0 && rho_n.is_finite()) {
        return param(format!("rho_n must be > 0, got {rho_n}"));
    }
    let delta = est.upper;
    if !(delta.is_finite() && delta >= 1.0) {
        return param(format!("distortion upper bound must be finite and ≥ 1, got {delta}"));
    }
    Ok(UdpCertificate {
        s0: distortion_sparsity(kappa0, delta, p),
        kappa0,
        delta: 2.0 * delta / rho_n,
        provenance: Provenance::Distortion,
        inputs: CertificateInputs {
            delta_upper: Some(delta),
            rho_n: Some(rho_n),
            p: Some(p),
            ..Default::default()
        },
    })
}

/// ⌊(κ0/δ)²p⌋.
pub fn distortion_sparsity(kappa0: f64, delta: f64, p: usize) -> usize {
    ((kappa0 / delta).powi(2) * p as f64).floor() as usize
}

/// (δ/√p)‖γ‖₁ + (2δ/ρ_n)‖Xγ‖₂ − ‖γ‖₂, non-negative whenever δ bounds the
/// kernel distortion from above.
pub fn interpolation_check(d: &DesignMatrix, delta_upper: f64, gamma: ArrayView1<f64>) -> Result<f64> {
    if gamma.len() != d.p() {
        return Err(Error::DimensionMismatch { expected: d.p(), found: gamma.len() });
    }
    let rho_n = d.smallest_singular()?;
    let sqrt_p = (d.p() as f64).sqrt();
    let xg = d.apply(gamma);
    Ok(delta_upper / sqrt_p * norm1(gamma) + 2.0 * delta_upper / rho_n * norm2(xg.view()) - norm2(gamma))
}

/// A vector and subset violating a defining inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub gamma: Vec<f64>,
    pub subset: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Counterexample {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// ‖γ_S‖₁ − Δ√s‖Xγ‖₂ − κ0‖γ‖₁, recomputed from scratch.
pub fn udp_excess(d: &DesignMatrix, cert: &UdpCertificate, gamma: ArrayView1<f64>, subset: &[usize]) -> f64 {
    let lhs: f64 = subset.iter().map(|&i| gamma[i].abs()).sum();
    let s = subset.len() as f64;
    lhs - cert.delta * s.sqrt() * norm2(d.apply(gamma).view()) - cert.kappa0 * norm1(gamma)
}

/// ‖γ_S‖₁ − λ̂·S·‖Xγ‖₂ − κ‖γ‖₁ with λ̂ = ‖X‖_{ℓ2,∞}.
pub fn h_excess(d: &DesignMatrix, order: usize, kappa: f64, gamma: ArrayView1<f64>, subset: &[usize]) -> f64 {
    let lhs: f64 = subset.iter().map(|&i| gamma[i].abs()).sum();
    lhs - d.column_norm_max() * order as f64 * norm2(d.apply(gamma).view()) - kappa * norm1(gamma)
}

/// Candidate γ number `i` of a falsification run. The mix cycles through
/// dense Gaussian vectors, kernel vectors, kernel vectors with a small
/// row-space perturbation, and sparse vectors.
fn falsify_candidate(d: &DesignMatrix, max_sparsity: usize, i: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let p = d.p();
    let k = d.kernel_dim();
    let kind = if k == 0 { [0, 3][i % 2] } else { i % 4 };
    let mut g = match kind {
        1 => d.kernel_basis().dot(&gaussian_vec(rng, k)),
        2 => {
            let base = d.kernel_basis().dot(&gaussian_vec(rng, k));
            let scale = 10f64.powf(rng.random_range(-6.0..-1.0));
            let noise = gaussian_vec(rng, p);
            &base / norm2(base.view()).max(f64::MIN_POSITIVE) + &(noise * (scale / (p as f64).sqrt()))
        }
        3 => {
            let s = rng.random_range(1..=max_sparsity.clamp(1, p));
            let mut v = Array1::zeros(p);
            for j in sample(rng, p, s) {
                v[j] = gaussian_vec(rng, 1)[0];
            }
            v
        }
        _ => gaussian_vec(rng, p),
    };
    let n = norm2(g.view());
    if n > 0.0 {
        g /= n;
    }
    g
}

/// Searches for γ and |S| ≤ S0 violating UDP. For fixed γ and s, the top-s
/// coordinates of |γ| maximize ‖γ_S‖₁ while the right-hand side does not
/// depend on S, so only those subsets are tested.
pub fn udp_falsify(d: &DesignMatrix, cert: &UdpCertificate, budget: usize, seed: u64) -> Result<Option<Counterexample>> {
    if budget == 0 {
        return param("budget must be ≥ 1");
    }
    if cert.s0 == 0 {
        return Ok(None);
    }
    let p = d.p();
    let s_max = cert.s0.min(p);
    let found = search_violation(d, s_max, budget, seed, |gamma, order, prefix| {
        let xg = norm2(d.apply(gamma).view());
        let l1 = prefix[p];
        (1..=s_max).find_map(|s| {
            let lhs = prefix[s];
            let rhs = cert.delta * (s as f64).sqrt() * xg + cert.kappa0 * l1;
            (lhs > rhs + VIOLATION_SLACK).then(|| Counterexample {
                gamma: gamma.to_vec(),
                subset: sorted(&order[..s]),
                lhs,
                rhs,
            })
        })
    });
    Ok(found)
}

/// Searches for a violation of H_{S,1}(κ). Since the right-hand side uses the
/// order S rather than |S|, only subsets of size S need testing.
pub fn h_falsify(d: &DesignMatrix, order: usize, kappa: f64, budget: usize, seed: u64) -> Result<Option<Counterexample>> {
    if budget == 0 {
        return param("budget must be ≥ 1");
    }
    if !(kappa < 0.5) || kappa.is_nan() {
        return param(format!("kappa must be < 1/2, got {kappa}"));
    }
    if order == 0 {
        return param("order S must be ≥ 1");
    }
    let p = d.p();
    let s = order.min(p);
    let lam_hat = d.column_norm_max();
    let found = search_violation(d, s, budget, seed, |gamma, idx, prefix| {
        let lhs = prefix[s];
        let rhs = lam_hat * order as f64 * norm2(d.apply(gamma).view()) + kappa * prefix[p];
        (lhs > rhs + VIOLATION_SLACK).then(|| Counterexample {
            gamma: gamma.to_vec(),
            subset: sorted(&idx[..s]),
            lhs,
            rhs,
        })
    });
    Ok(found)
}

fn sorted(idx: &[usize]) -> Vec<usize> {
    let mut v = idx.to_vec();
    v.sort_unstable();
    v
}

const FALSIFY_CHUNK: usize = 4096;

/// Runs `check` over `budget` candidates in deterministic chunks and returns
/// the violation with the smallest candidate index.
fn search_violation<F>(d: &DesignMatrix, max_sparsity: usize, budget: usize, seed: u64, check: F) -> Option<Counterexample>
where
    F: Fn(ArrayView1<f64>, &[usize], &[f64]) -> Option<Counterexample> + Sync,
{
    let chunks = budget.div_ceil(FALSIFY_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed.wrapping_add(c as u64), Stream::Falsifier);
            let start = c * FALSIFY_CHUNK;
            let end = (start + FALSIFY_CHUNK).min(budget);
            for i in start..end {
                let gamma = falsify_candidate(d, max_sparsity, i, &mut rng);
                let order = order_by_magnitude(gamma.view());
                let mut prefix = vec![0.0; gamma.len() + 1];
                for (s, &j) in order.iter().enumerate() {
                    prefix[s + 1] = prefix[s] + gamma[j].abs();
                }
                if let Some(cx) = check(gamma.view(), &order, &prefix) {
                    return Some(cx);
                }
            }
            None
        })
        .find_first(|r| r.is_some())
        .flatten()
}

/// Number of supports of size `s` among `p` columns.
pub fn binomial(p: usize, s: usize) -> u128 {
    if s > p {
        return 0;
    }
    let s = s.min(p - s);
    (0..s).fold(1u128, |acc, i| acc * (p - i) as u128 / (i + 1) as u128)
}

/// Exact S-restricted isometry constant by enumeration of all supports of
/// size S. Extreme eigenvalues of principal submatrices interlace, so smaller
/// supports never give a larger deviation.
pub fn rip_constant(d: &DesignMatrix, order: usize) -> Result<f64> {
    let p = d.p();
    if order == 0 || order > p {
        return param(format!("order must satisfy 1 ≤ S ≤ p = {p}, got {order}"));
    }
    let count = binomial(p, order);
    if count > RIP_SUPPORT_LIMIT {
        return Err(Error::BudgetExceeded { count, limit: RIP_SUPPORT_LIMIT });
    }
    let gram = d.gram();
    let supports: Vec<Vec<usize>> = (0..p).combinations(order).collect();
    let theta = supports
        .par_iter()
        .map(|t| {
            let sub = gram.select(Axis(0), t).select(Axis(1), t);
            let (vals, _) = symmetric_eigen(sub.view());
            (vals[order - 1] - 1.0).max(1.0 - vals[0])
        })
        .reduce(|| 0.0, f64::max);
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    Re,
    Compatibility,
}

/// Ratio defining the cone constant for support `t`: ‖Xγ‖₂/‖γ_T‖₂ (RE) or
/// √|T|·‖Xγ‖₂/‖γ_T‖₁ (compatibility).
pub fn cone_ratio(d: &DesignMatrix, kind: ConeKind, gamma: ArrayView1<f64>, t: &[usize]) -> f64 {
    let xg = norm2(d.apply(gamma).view());
    match kind {
        ConeKind::Re => {
            let den = t.iter().map(|&i| gamma[i] * gamma[i]).sum::<f64>().sqrt();
            xg / den
        }
        ConeKind::Compatibility => {
            let den: f64 = t.iter().map(|&i| gamma[i].abs()).sum();
            (t.len() as f64).sqrt() * xg / den
        }
    }
}

/// Whether ‖γ_{T^c}‖₁ ≤ c0‖γ_T‖₁ (with a relative tolerance of 1e-12).
pub fn in_cone(gamma: ArrayView1<f64>, t: &[usize], c0: f64) -> bool {
    let on: f64 = t.iter().map(|&i| gamma[i].abs()).sum();
    let off = norm1(gamma) - on;
    on > 0.0 && off <= c0 * on * (1.0 + 1e-12)
}

/// Euclidean projection onto the ℓ1 ball of the given radius.
fn project_l1_ball(w: &mut [f64], radius: f64) {
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius <= 0.0 {
        w.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (i + 1) as f64;
        if *m > t {
            tau = t;
        }
    }
    w.iter_mut().for_each(|x| *x = x.signum() * (x.abs() - tau).max(0.0));
}

/// Upper estimate of κ(S, c0) or φ(S, c0).
///
/// Every evaluated point is feasible for its support, so the returned value
/// is an upper bound on the true minimum. Candidates per support: the
/// smallest eigenvector (RE) or equal-magnitude sign patterns
/// (compatibility) with an empty off-support part, kernel vectors that fall
/// in the cone, and random cone points refined by projected gradient on
/// ‖Xγ‖₂² with the on-support part renormalised each step.
pub fn cone_constant_estimate(
    d: &DesignMatrix,
    order: usize,
    c0: f64,
    kind: ConeKind,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let p = d.p();
    if order == 0 || order > p {
        return param(format!("order must satisfy 1 ≤ S ≤ p = {p}, got {order}"));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return param(format!("c0 must be > 0, got {c0}"));
    }
    if restarts == 0 {
        return param("restarts must be ≥ 1");
    }

    let total: u128 = (1..=order).map(|s| binomial(p, s)).sum();
    let supports: Vec<Vec<usize>> = if total <= CONE_SUPPORT_LIMIT as u128 {
        (1..=order).flat_map(|s| (0..p).combinations(s)).collect()
    } else {
        let mut rng = rng_for(seed, Stream::Cone);
        (0..CONE_SUPPORT_LIMIT)
            .map(|_| {
                let s = rng.random_range(1..=order);
                sorted(&sample(&mut rng, p, s).into_vec())
            })
            .collect()
    };

    let gram = d.gram();
    let step = 1.0 / d.largest_singular().powi(2);
    let kernel = d.kernel_basis();

    // a kernel vertex in the cone of its own top entries gives ratio ≈ 0
    let vertex_best = kernel_vertices(d).iter().fold(f64::INFINITY, |acc, v| {
        let idx = order_by_magnitude(v.view());
        (1..=order).fold(acc, |a, s| {
            let t = &idx[..s];
            if in_cone(v.view(), t, c0) {
                a.min(cone_ratio(d, kind, v.view(), t))
            } else {
                a
            }
        })
    });

    let best = supports
        .par_iter()
        .enumerate()
        .map(|(si, t)| {
            let mut rng = rng_for(seed.wrapping_add(si as u64), Stream::Cone);
            let off: Vec<usize> = (0..p).filter(|j| !t.contains(j)).collect();
            let mut best = f64::INFINITY;
            let mut eval = |g: &Array1<f64>| {
                if in_cone(g.view(), t, c0) {
                    best = best.min(cone_ratio(d, kind, g.view(), t));
                }
            };

            // on-support candidates
            let sub = gram.select(Axis(0), t).select(Axis(1), t);
            let (_, vecs) = symmetric_eigen(sub.view());
            let mut g = Array1::zeros(p);
            for (a, &i) in t.iter().enumerate() {
                g[i] = vecs[[a, 0]];
            }
            eval(&g);

            // kernel vectors
            for c in 0..kernel.ncols().min(8) {
                eval(&kernel.column(c).to_owned());
            }
            if kernel.ncols() > 0 {
                for _ in 0..restarts {
                    let z = gaussian_vec(&mut rng, kernel.ncols());
                    eval(&kernel.dot(&z));
                }
            }

            for r in 0..restarts {
                let mut u: Vec<f64> = match (kind, r) {
                    (_, 0) => t.iter().enumerate().map(|(a, _)| vecs[[a, 0]]).collect(),
                    (ConeKind::Compatibility, r) if r % 2 == 1 => {
                        t.iter().map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
                    }
                    _ => gaussian_vec(&mut rng, t.len()).to_vec(),
                };
                let mut w: Vec<f64> = if r == 0 {
                    vec![0.0; off.len()]
                } else {
                    let mut w = gaussian_vec(&mut rng, off.len()).to_vec();
                    let radius = c0 * u.iter().map(|x| x.abs()).sum::<f64>() * rng.random::<f64>();
                    let l1: f64 = w.iter().map(|x| x.abs()).sum();
                    if l1 > 0.0 {
                        w.iter_mut().for_each(|x| *x *= radius / l1);
                    }
                    w
                };
                let assemble = |u: &[f64], w: &[f64]| {
                    let mut g = Array1::zeros(p);
                    for (a, &i) in t.iter().enumerate() {
                        g[i] = u[a];
                    }
                    for (b, &j) in off.iter().enumerate() {
                        g[j] = w[b];
                    }
                    g
                };
                renormalize(kind, &mut u, &mut w);
                let mut g = assemble(&u, &w);
                eval(&g);
                for _ in 0..200 {
                    let grad = gram.dot(&g);
                    for (a, &i) in t.iter().enumerate() {
                        u[a] -= step * grad[i];
                    }
                    for (b, &j) in off.iter().enumerate() {
                        w[b] -= step * grad[j];
                    }
                    if !renormalize(kind, &mut u, &mut w) {
                        break;
                    }
                    project_l1_ball(&mut w, c0 * u.iter().map(|x| x.abs()).sum::<f64>());
                    g = assemble(&u, &w);
                    eval(&g);
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
        .min(vertex_best);

    if !best.is_finite() {
        return Err(Error::InvalidInput("no cone-feasible point was found".into()));
    }
    Ok(best)
}

/// Vertices of the kernel cut by the ℓ1 ball, up to scale: kernel vectors
/// with dim − 1 prescribed zeros. These are the kernel directions that put
/// the most ℓ1 mass on few coordinates. Empty when there are more than
/// [`CONE_SUPPORT_LIMIT`] of them.
fn kernel_vertices(d: &DesignMatrix) -> Vec<Array1<f64>> {
    let k = d.kernel_dim();
    let p = d.p();
    if k == 0 || binomial(p, k - 1) > CONE_SUPPORT_LIMIT as u128 {
        return Vec::new();
    }
    let basis = d.kernel_basis();
    (0..p)
        .combinations(k - 1)
        .map(|zeros| {
            let rows = basis.select(Axis(0), &zeros);
            let (_, vecs) = symmetric_eigen(rows.t().dot(&rows).view());
            basis.dot(&vecs.column(0))
        })
        .filter(|v| norm1(v.view()) > 0.0)
        .collect()
}

/// Scales (u, w) so that the denominator of the cone ratio equals 1.
fn renormalize(kind: ConeKind, u: &mut [f64], w: &mut [f64]) -> bool {
    let n = match kind {
        ConeKind::Re => u.iter().map(|x| x * x).sum::<f64>().sqrt(),
        ConeKind::Compatibility => u.iter().map(|x| x.abs()).sum(),
    };
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    u.iter_mut().for_each(|x| *x /= n);
    w.iter_mut().for_each(|x| *x /= n);
    true
}

/// Smallest admissible κ0 under RIP(θ_{5S}): [1 + 2√((1−θ)/(1+θ))]⁻¹.
pub fn rip_kappa_floor(theta: f64) -> f64 {
    1.0 / (1.0 + 2.0 * ((1.0 - theta) / (1.0 + theta)).sqrt())
}

/// Certificate from the 5S-restricted isometry constant, with the smallest
/// admissible Δ = [√(1−θ) + ((κ0−1)/(2κ0))√(1+θ)]⁻¹.
pub fn udp_from_rip(theta_5s: f64, order: usize, kappa0: f64) -> Result<UdpCertificate> {
    let limit = 2f64.sqrt() - 1.0;
    if !(theta_5s >= 0.0 && theta_5s < limit) {
        return param(format!("theta_5S must satisfy 0 ≤ θ < √2 − 1, got {theta_5s}"));
    }
    let floor = rip_kappa_floor(theta_5s);
    if !(kappa0 > floor) {
        return param(format!(
            "kappa0 = {kappa0} violates the lower bound kappa0 > [1 + 2((1−θ)/(1+θ))^(1/2)]^(-1) = {floor}"
        ));
    }
    if !(kappa0 < 0.5) {
        return param(format!("kappa0 = {kappa0} violates the upper bound kappa0 < 1/2"));
    }
    let bracket = (1.0 - theta_5s).sqrt() + (kappa0 - 1.0) / (2.0 * kappa0) * (1.0 + theta_5s).sqrt();
    Ok(UdpCertificate {
        s0: order,
        kappa0,
        delta: 1.0 / bracket,
        provenance: Provenance::Rip,
        inputs: CertificateInputs { theta_5s: Some(theta_5s), ..Default::default() },
    })
}

/// UDP(S, c0, 1/constant) from a restricted eigenvalue or compatibility
/// constant.
///
/// The cone constant only controls γ inside the cone. Outside it,
/// ‖γ_S‖₁ < ‖γ‖₁/(1 + c0), so the certificate is guaranteed only when
/// c0 ≥ 1/(1 + c0), i.e. c0 ≥ (√5 − 1)/2. For smaller c0 the falsifier can
/// refute it; raising kappa0 to 1/(1 + c0) restores soundness.
pub fn udp_from_cone(constant: f64, order: usize, c0: f64, kind: ConeKind) -> Result<UdpCertificate> {
    if !(constant > 0.0 && constant.is_finite()) {
        return param(format!("cone constant must be > 0 (the condition fails otherwise), got {constant}"));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return param(format!("c0 must be > 0, got {c0}"));
    }
    let (provenance, inputs) = match kind {
        ConeKind::Re => (
            Provenance::Re,
            CertificateInputs { kappa_re: Some(constant), c0: Some(c0), ..Default::default() },
        ),
        ConeKind::Compatibility => (
            Provenance::Compatibility,
            CertificateInputs { phi_compat: Some(constant), c0: Some(c0), ..Default::default() },
        ),
    };
    Ok(UdpCertificate { s0: order, kappa0: c0, delta: 1.0 / constant, provenance, inputs })
}

/// Parameters echoed in a [`ConditionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionParameters {
    #[serde(rename = "S")]
    pub order: usize,
    pub c0: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub rip_theta: Option<f64>,
    pub re_kappa_upper: Option<f64>,
    pub compat_phi_upper: Option<f64>,
    pub udp_counterexample: Option<Counterexample>,
    pub h_counterexample: Option<Counterexample>,
    pub parameters: ConditionParameters,
}

/// Convenience: the n×p matrix with unit-norm columns.
pub fn normalize_columns(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let n = norm2(col.view());
        if n > 0.0 {
            col /= n;
        }
    }
    out
}
