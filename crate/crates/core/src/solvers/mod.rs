//! Estimators: lasso, Dantzig selector, and least squares on a fixed support.

mod dantzig;
mod lasso;
pub mod simplex;

pub use dantzig::dantzig;
pub use lasso::{lasso, lasso_kkt_residual};

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::DesignMatrix;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Lasso,
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    IterationLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub estimator: Estimator,
    pub estimate: Vec<f64>,
    pub lambda: f64,
    /// Lasso: ½‖Xβ−y‖² + λ‖β‖₁. Dantzig: ‖β‖₁.
    pub objective: f64,
    /// Lasso: KKT violation. Dantzig: max(0, ‖Xᵀ(y−Xβ)‖_∞ − λ).
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
}

/// y = Xβ* + ε, with β* and σ known only in simulations.
#[derive(Debug, Clone)]
pub struct RegressionProblem<'a> {
    pub design: &'a DesignMatrix,
    pub response: Array1<f64>,
    pub true_target: Option<Array1<f64>>,
    pub noise_sd: Option<f64>,
}

impl<'a> RegressionProblem<'a> {
    pub fn new(design: &'a DesignMatrix, response: Array1<f64>) -> Result<Self> {
        if response.len() != design.n() {
            return Err(Error::DimensionMismatch { expected: design.n(), found: response.len() });
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("response has non-finite entries".into()));
        }
        Ok(RegressionProblem { design, response, true_target: None, noise_sd: None })
    }

    pub fn with_truth(mut self, beta_star: Array1<f64>, noise_sd: f64) -> Result<Self> {
        if beta_star.len() != self.design.p() {
            return Err(Error::DimensionMismatch { expected: self.design.p(), found: beta_star.len() });
        }
        if !(noise_sd >= 0.0) {
            return param(format!("noise_sd must be ≥ 0, got {noise_sd}"));
        }
        self.true_target = Some(beta_star);
        self.noise_sd = Some(noise_sd);
        Ok(self)
    }
}

/// sign(v_i)·max(|v_i| − λ, 0); ties |v_i| = λ map to 0.
pub fn soft_threshold(v: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    assert!(lambda >= 0.0, "soft_threshold needs lambda ≥ 0, got {lambda}");
    v.mapv(|x| soft(x, lambda))
}

#[inline]
pub(crate) fn soft(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Least squares restricted to a support, factorised once.
#[derive(Debug, Clone)]
pub struct SupportLeastSquares {
    support: Vec<usize>,
    p: usize,
    /// V Σ⁻¹ Uᵀ for X_S: maps y to the coefficients on the support.
    pinv: Array2<f64>,
    singular_values: Array1<f64>,
}

impl SupportLeastSquares {
    /// Requires X_S to have full column rank, judged by its smallest singular
    /// value against 1e-10·ρ₁(X).
    pub fn new(d: &DesignMatrix, support: &[usize]) -> Result<Self> {
        if support.is_empty() {
            return param("support must be nonempty");
        }
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return param("support has repeated indices");
        }
        let xs = d.select_columns(support)?;
        let sub = DesignMatrix::decompose(xs, 1e-14)?;
        let floor = 1e-10 * d.largest_singular();
        let well_posed = sub.rank() == support.len() && sub.smallest_singular()? > floor;
        if !well_posed {
            return Err(Error::RankDeficient { rank: sub.rank(), required: support.len() });
        }
        let sv = sub.singular_values().to_owned();
        let scaled_v = &sub.right_vectors() / &sv;
        let pinv = scaled_v.dot(&sub.left_vectors().t());
        Ok(SupportLeastSquares { support: support.to_vec(), p: d.p(), pinv, singular_values: sv })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Coefficients on the support, in support order.
    pub fn coefficients(&self, y: ArrayView1<f64>) -> Array1<f64> {
        self.pinv.dot(&y)
    }

    /// The full p-vector with zeros off the support.
    pub fn solve(&self, y: ArrayView1<f64>) -> Array1<f64> {
        let coef = self.coefficients(y);
        let mut beta = Array1::zeros(self.p);
        for (c, &j) in coef.iter().zip(&self.support) {
            beta[j] = *c;
        }
        beta
    }

    /// Trace((X_SᵀX_S)⁻¹) = Σ 1/σ_i².
    pub fn trace_inverse_gram(&self) -> f64 {
        self.singular_values.iter().map(|s| 1.0 / (s * s)).sum()
    }
}

/// Ordinary least squares of y on the columns in `support`.
pub fn oracle_ls(prob: &RegressionProblem, support: &[usize]) -> Result<Array1<f64>> {
    Ok(SupportLeastSquares::new(prob.design, support)?.solve(prob.response.view()))
}
