use ndarray::{s, Array1, Array2};

use super::simplex::{solve_standard, LpStatus};
use super::{Estimator, RegressionProblem, SolverResult, SolverStatus};
use crate::error::{param, Result};
use crate::linalg::{norm1, norm_inf};

/// Dantzig selector: min ‖β‖₁ s.t. ‖Xᵀ(y−Xβ)‖_∞ ≤ λ, as a linear program
/// over β = β⁺ − β⁻ with slack variables. `max_iter` bounds simplex pivots.
pub fn dantzig(prob: &RegressionProblem, lambda: f64, tol: f64, max_iter: usize) -> Result<SolverResult> {
    let d = prob.design;
    let p = d.p();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return param(format!("lambda must be ≥ 0, got {lambda}"));
    }
    if !(tol > 0.0) {
        return param(format!("tol must be > 0, got {tol}"));
    }
    let y = prob.response.view();
    let corr = d.apply_t(y);
    let gram = d.gram();

    let mut a = Array2::<f64>::zeros((2 * p, 4 * p));
    a.slice_mut(s![..p, ..p]).assign(&gram);
    a.slice_mut(s![..p, p..2 * p]).assign(&(-&gram));
    a.slice_mut(s![p.., ..p]).assign(&(-&gram));
    a.slice_mut(s![p.., p..2 * p]).assign(&gram);
    for i in 0..2 * p {
        a[[i, 2 * p + i]] = 1.0;
    }
    let mut b = Array1::<f64>::zeros(2 * p);
    for i in 0..p {
        b[i] = corr[i] + lambda;
        b[p + i] = lambda - corr[i];
    }
    let mut c = Array1::<f64>::zeros(4 * p);
    c.slice_mut(s![..2 * p]).fill(1.0);

    let lp = solve_standard(a.view(), b.view(), c.view(), max_iter);
    let beta: Array1<f64> = &lp.x.slice(s![..p]) - &lp.x.slice(s![p..2 * p]);
    let resid = &y - &d.apply(beta.view());
    let violation = (norm_inf(d.apply_t(resid.view()).view()) - lambda).max(0.0);
    let status = match lp.status {
        LpStatus::Optimal if violation <= tol => SolverStatus::Converged,
        LpStatus::Optimal | LpStatus::PivotLimit => SolverStatus::IterationLimit,
        LpStatus::Infeasible | LpStatus::Unbounded => SolverStatus::Infeasible,
    };
    Ok(SolverResult {
        estimator: Estimator::Dantzig,
        objective: norm1(beta.view()),
        estimate: beta.to_vec(),
        lambda,
        kkt_residual: violation,
        iterations: lp.pivots,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DesignMatrix;
    use crate::solvers::DEFAULT_MAX_ITER;
    use ndarray::array;

    #[test]
    fn identity_design_soft_thresholds() {
        let d = DesignMatrix::with_default_tol(Array2::eye(3)).unwrap();
        let prob = RegressionProblem::new(&d, array![3.0, -0.5, 1.0]).unwrap();
        let r = dantzig(&prob, 1.0, 1e-9, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.status, SolverStatus::Converged);
        for (b, e) in r.estimate.iter().zip([2.0, 0.0, 0.0]) {
            assert!((b - e).abs() < 1e-12, "{b} vs {e}");
        }
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn large_lambda_gives_zero() {
        let x = array![[1.0, 2.0, -1.0], [0.5, -1.0, 3.0]];
        let d = DesignMatrix::with_default_tol(x).unwrap();
        let y = array![1.0, -2.0];
        let prob = RegressionProblem::new(&d, y.clone()).unwrap();
        let lam = norm_inf(d.apply_t(y.view()).view());
        let r = dantzig(&prob, lam, 1e-9, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn pivot_limit_reported() {
        let d = DesignMatrix::with_default_tol(Array2::eye(3)).unwrap();
        let prob = RegressionProblem::new(&d, array![3.0, -2.5, 4.0]).unwrap();
        let r = dantzig(&prob, 0.1, 1e-9, 1).unwrap();
        assert_eq!(r.status, SolverStatus::IterationLimit);
    }
}
