use ndarray::{Array1, ArrayView1};

use super::{soft, Estimator, RegressionProblem, SolverResult, SolverStatus};
use crate::error::{param, Result};
use crate::linalg::{norm1, DesignMatrix};

/// Lasso by cyclic coordinate descent from β = 0.
///
/// Convergence is declared when the KKT residual (see
/// [`lasso_kkt_residual`]) drops to `tol`; `max_iter` counts full sweeps.
pub fn lasso(prob: &RegressionProblem, lambda: f64, tol: f64, max_iter: usize) -> Result<SolverResult> {
    let d = prob.design;
    let x = d.entries();
    let (_, p) = x.dim();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return param(format!("lambda must be > 0, got {lambda}"));
    }
    if !(tol > 0.0) {
        return param(format!("tol must be > 0, got {tol}"));
    }
    let col_sq: Vec<f64> = d.column_norms().iter().map(|c| c * c).collect();
    if lambda == 0.0 && col_sq.iter().any(|&c| c == 0.0) {
        return param("zero column with lambda = 0: coordinate is unbounded");
    }
    let cols: Vec<Array1<f64>> = x.columns().into_iter().map(|c| c.to_owned()).collect();
    let y = prob.response.view();

    let mut beta = Array1::<f64>::zeros(p);
    let mut resid = y.to_owned();
    let mut kkt = lasso_kkt_residual(d, y, beta.view(), lambda);
    let mut sweeps = 0;

    while kkt > tol && sweeps < max_iter {
        for j in 0..p {
            if col_sq[j] == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let old = beta[j];
            let rho = cols[j].dot(&resid) + col_sq[j] * old;
            let new = soft(rho, lambda) / col_sq[j];
            if new != old {
                resid.scaled_add(old - new, &cols[j]);
                beta[j] = new;
            }
        }
        sweeps += 1;
        resid = &y - &d.apply(beta.view());
        kkt = lasso_kkt_residual(d, y, beta.view(), lambda);
    }

    let objective = 0.5 * resid.dot(&resid) + lambda * norm1(beta.view());
    Ok(SolverResult {
        estimator: Estimator::Lasso,
        estimate: beta.to_vec(),
        lambda,
        objective,
        kkt_residual: kkt,
        iterations: sweeps,
        status: if kkt <= tol { SolverStatus::Converged } else { SolverStatus::IterationLimit },
    })
}

/// max_j of |X_jᵀ(y−Xβ) − λ·sign(β_j)| where β_j ≠ 0, and
/// max(0, |X_jᵀ(y−Xβ)| − λ) where β_j = 0.
pub fn lasso_kkt_residual(d: &DesignMatrix, y: ArrayView1<f64>, beta: ArrayView1<f64>, lambda: f64) -> f64 {
    let resid = &y - &d.apply(beta);
    let corr = d.apply_t(resid.view());
    corr.iter()
        .zip(beta.iter())
        .map(|(&c, &b)| {
            if b != 0.0 {
                (c - lambda * b.signum()).abs()
            } else {
                (c.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
