//! Dense linear-algebra substrate.
//!
//! Everything downstream works from a [`DesignMatrix`]: the raw entries plus a
//! thin SVD, an orthonormal basis of the kernel and the column norms. The SVD
//! is a one-sided (Hestenes) Jacobi iteration on the columns of `X`, which
//! yields the full right factor `V` (p×p) directly, so the kernel basis falls
//! out as the columns of `V` whose images vanish.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative cutoff below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const JACOBI_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// A dense n×p design with its cached decomposition.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    entries: Array2<f64>,
    singular_values: Array1<f64>,
    left: Array2<f64>,
    right: Array2<f64>,
    kernel_basis: Array2<f64>,
    column_norms: Array1<f64>,
    column_norm_max: f64,
    rank_tol: f64,
}

/// Summary of a decomposition, suitable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    pub rho_1: f64,
    pub rho_n: f64,
    pub column_norm_max: f64,
}

impl DesignMatrix {
    /// Decomposes `entries` with the relative rank cutoff `rank_tol`.
    pub fn decompose(entries: Array2<f64>, rank_tol: f64) -> Result<Self> {
        let (n, p) = entries.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput(format!("empty matrix ({n}×{p})")));
        }
        if !(rank_tol > 0.0 && rank_tol.is_finite()) {
            return Err(Error::Parameter(format!("rank_tol must be > 0, got {rank_tol}")));
        }
        if let Some(((row, col), _)) = entries.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }

        let column_norms: Array1<f64> = entries.axis_iter(Axis(1)).map(|c| norm2(c)).collect();
        let column_norm_max = column_norms.iter().cloned().fold(0.0, f64::max);
        if column_norm_max == 0.0 {
            return Err(Error::RankZero);
        }

        let (w, v) = one_sided_jacobi(&entries);
        let norms: Vec<f64> = w.axis_iter(Axis(1)).map(|c| norm2(c)).collect();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

        let rho_1 = norms[order[0]];
        let rank = order
            .iter()
            .take_while(|&&j| norms[j] > rank_tol * rho_1)
            .count();

        let mut singular_values = Array1::zeros(rank);
        let mut left = Array2::zeros((n, rank));
        let mut right = Array2::zeros((p, rank));
        for (k, &j) in order[..rank].iter().enumerate() {
            let sigma = norms[j];
            singular_values[k] = sigma;
            left.column_mut(k).assign(&(&w.column(j) / sigma));
            right.column_mut(k).assign(&v.column(j));
        }

        let kdim = p - rank;
        let mut kernel_basis = Array2::zeros((p, kdim));
        for (k, &j) in order[rank..].iter().enumerate() {
            let mut b = v.column(j).to_owned();
            fix_sign(&mut b);
            kernel_basis.column_mut(k).assign(&b);
        }

        Ok(DesignMatrix {
            entries,
            singular_values,
            left,
            right,
            kernel_basis,
            column_norms,
            column_norm_max,
            rank_tol,
        })
    }

    pub fn with_default_tol(entries: Array2<f64>) -> Result<Self> {
        Self::decompose(entries, DEFAULT_RANK_TOL)
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    /// Number of observations (rows).
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Ambient dimension (columns).
    pub fn p(&self) -> usize {
        self.entries.ncols()
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Retained singular values, non-increasing and strictly positive.
    pub fn singular_values(&self) -> ArrayView1<'_, f64> {
        self.singular_values.view()
    }

    /// Left singular vectors (n×r).
    pub fn left_vectors(&self) -> ArrayView2<'_, f64> {
        self.left.view()
    }

    /// Right singular vectors (p×r); an orthonormal basis of the row space.
    pub fn right_vectors(&self) -> ArrayView2<'_, f64> {
        self.right.view()
    }

    /// Orthonormal basis of ker(X), one vector per column.
    pub fn kernel_basis(&self) -> ArrayView2<'_, f64> {
        self.kernel_basis.view()
    }

    pub fn column_norms(&self) -> ArrayView1<'_, f64> {
        self.column_norms.view()
    }

    /// ‖X‖_{ℓ2,∞}: the largest Euclidean column norm.
    pub fn column_norm_max(&self) -> f64 {
        self.column_norm_max
    }

    pub fn largest_singular(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest retained singular value ρ_r.
    pub fn smallest_singular(&self) -> Result<f64> {
        self.singular_values.last().copied().ok_or(Error::RankZero)
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.n().min(self.p())
    }

    /// ρ_n for a certifiable design, i.e. one with rank(X) = min(n, p).
    pub fn certifiable_rho_n(&self) -> Result<f64> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank(),
                required: self.n().min(self.p()),
            });
        }
        self.smallest_singular()
    }

    pub fn summary(&self) -> DesignSummary {
        DesignSummary {
            n: self.n(),
            p: self.p(),
            rank: self.rank(),
            kernel_dim: self.kernel_dim(),
            rho_1: self.largest_singular(),
            rho_n: self.singular_values[self.rank() - 1],
            column_norm_max: self.column_norm_max,
        }
    }

    /// Xγ.
    pub fn apply(&self, gamma: ArrayView1<f64>) -> Array1<f64> {
        self.entries.dot(&gamma)
    }

    /// Xᵀr.
    pub fn apply_t(&self, r: ArrayView1<f64>) -> Array1<f64> {
        self.entries.t().dot(&r)
    }

    /// XᵀX.
    pub fn gram(&self) -> Array2<f64> {
        self.entries.t().dot(&self.entries)
    }

    /// Orthogonal projection of γ onto ker(X).
    pub fn project_kernel(&self, gamma: ArrayView1<f64>) -> Array1<f64> {
        let coords = self.kernel_basis.t().dot(&gamma);
        self.kernel_basis.dot(&coords)
    }

    /// The n×|support| submatrix of the given columns.
    pub fn select_columns(&self, support: &[usize]) -> Result<Array2<f64>> {
        if let Some(&j) = support.iter().find(|&&j| j >= self.p()) {
            return Err(Error::InvalidInput(format!(
                "column index {j} out of range for p = {}",
                self.p()
            )));
        }
        Ok(self.entries.select(Axis(1), support))
    }

    /// U·diag(ρ)·Vᵀ from the retained factors.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.left * &self.singular_values;
        scaled.dot(&self.right.t())
    }
}

/// One-sided Jacobi: returns (W, V) with W = X·V, V orthogonal, and the
/// columns of W mutually orthogonal.
fn one_sided_jacobi(x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let p = x.ncols();
    let mut w = x.clone();
    let mut v = Array2::<f64>::eye(p);
    // columns below ε‖X‖_F are numerically null; rotating them further only
    // chases rounding noise into the subnormal range
    let null_floor = (f64::EPSILON * x.iter().map(|a| a * a).sum::<f64>().sqrt()).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let (alpha, beta, gamma) = {
                    let ci = w.column(i);
                    let cj = w.column(j);
                    (ci.dot(&ci), cj.dot(&cj), ci.dot(&cj))
                };
                if gamma == 0.0
                    || alpha <= null_floor
                    || beta <= null_floor
                    || gamma.abs() <= JACOBI_EPS * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

fn rotate_columns(m: &mut Array2<f64>, i: usize, j: usize, c: f64, s: f64) {
    for mut row in m.rows_mut() {
        let a = row[i];
        let b = row[j];
        row[i] = c * a - s * b;
        row[j] = s * a + c * b;
    }
}

/// Flips `v` so that its first non-negligible entry is positive.
fn fix_sign(v: &mut Array1<f64>) {
    let scale = norm_inf(v.view());
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale).copied() {
        if first < 0.0 {
            v.mapv_inplace(|x| -x);
        }
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi.
///
/// Returns eigenvalues in ascending order with matching eigenvector columns.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let m = a.nrows();
    assert_eq!(m, a.ncols(), "symmetric_eigen needs a square matrix");
    let mut a = a.to_owned();
    let mut v = Array2::<f64>::eye(m);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        let diag: f64 = (0..m).map(|i| a[[i, i]] * a[[i, i]]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = v.select(Axis(1), &order);
    (values, vectors)
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-14` times the largest entry.
pub fn solve_dense(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Option<Array1<f64>> {
    let m = a.nrows();
    assert_eq!(m, a.ncols());
    assert_eq!(m, b.len());
    let mut aug = Array2::zeros((m, m + 1));
    aug.slice_mut(s![.., ..m]).assign(&a);
    aug.column_mut(m).assign(&b);
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return None;
    }

    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| aug[[i, col]].abs().total_cmp(&aug[[j, col]].abs()))?;
        if aug[[pivot, col]].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..=m {
                aug.swap([pivot, k], [col, k]);
            }
        }
        for row in (col + 1)..m {
            let f = aug[[row, col]] / aug[[col, col]];
            if f != 0.0 {
                for k in col..=m {
                    aug[[row, k]] -= f * aug[[col, k]];
                }
            }
        }
    }
    let mut x = Array1::zeros(m);
    for row in (0..m).rev() {
        let mut acc = aug[[row, m]];
        for k in (row + 1)..m {
            acc -= aug[[row, k]] * x[k];
        }
        x[row] = acc / aug[[row, row]];
    }
    Some(x)
}

pub fn norm1(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn norm_inf(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Indices sorted by decreasing |v_i|, ties broken by index.
pub fn order_by_magnitude(v: ArrayView1<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx
}

/// ‖v_{S^c}‖₁ for S = the top-s coordinates of |v|, for every s in 0..=len.
pub fn tail_norms(v: ArrayView1<f64>) -> Vec<f64> {
    let order = order_by_magnitude(v);
    let mut tails = vec![0.0; v.len() + 1];
    for s in (0..v.len()).rev() {
        tails[s] = tails[s + 1] + v[order[s]].abs();
    }
    tails
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn identity_has_unit_spectrum_and_no_kernel() {
        let d = DesignMatrix::decompose(Array2::eye(3), 1e-12).unwrap();
        assert_eq!(d.singular_values().to_vec(), vec![1.0, 1.0, 1.0]);
        assert_eq!(d.kernel_dim(), 0);
        assert_eq!(d.smallest_singular().unwrap(), 1.0);
        assert_eq!(d.column_norm_max(), 1.0);
    }

    #[test]
    fn one_row_kernel_is_antidiagonal() {
        let d = DesignMatrix::with_default_tol(array![[1.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(d.singular_values()[0], 2f64.sqrt(), epsilon = 1e-14);
        let b = d.kernel_basis();
        assert_eq!(b.ncols(), 1);
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(b[[0, 0]], h, epsilon = 1e-14);
        assert_abs_diff_eq!(b[[1, 0]], -h, epsilon = 1e-14);
    }

    #[test]
    fn diag_smallest_singular() {
        let d = DesignMatrix::with_default_tol(array![[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(d.smallest_singular().unwrap(), 1.0);
        assert_eq!(d.largest_singular(), 2.0);
    }

    #[test]
    fn three_four_five_column() {
        let d = DesignMatrix::with_default_tol(array![[3.0, 0.0], [4.0, 0.0]]).unwrap();
        assert_eq!(d.column_norm_max(), 5.0);
        assert_eq!(d.rank(), 1);
        assert!(!d.is_full_rank());
        assert!(matches!(d.certifiable_rho_n(), Err(Error::RankDeficient { rank: 1, required: 2 })));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            DesignMatrix::with_default_tol(array![[1.0, f64::NAN]]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            DesignMatrix::with_default_tol(Array2::zeros((2, 3))),
            Err(Error::RankZero)
        ));
        assert!(DesignMatrix::decompose(Array2::eye(2), 0.0).is_err());
    }

    #[test]
    fn tall_full_column_rank_has_trivial_kernel() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let d = DesignMatrix::with_default_tol(x.clone()).unwrap();
        assert_eq!(d.rank(), 2);
        assert_eq!(d.kernel_dim(), 0);
        assert!(d.is_full_rank());
        let err = (&d.reconstruct() - &x).mapv(f64::abs).sum();
        assert!(err < 1e-13);
    }

    #[test]
    fn symmetric_eigen_small() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(a.view());
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-14);
        let av = a.dot(&vecs.column(1));
        assert_abs_diff_eq!(av[0], 3.0 * vecs[[0, 1]], epsilon = 1e-13);
    }

    #[test]
    fn dense_solve_and_singular() {
        let a = array![[0.0, 2.0], [1.0, 1.0]];
        let x = solve_dense(a.view(), array![4.0, 3.0].view()).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-14);
        assert!(solve_dense(array![[1.0, 2.0], [2.0, 4.0]].view(), array![1.0, 1.0].view()).is_none());
    }

    #[test]
    fn tails_match_sorted_magnitudes() {
        let v = array![0.5, -3.0, 1.0, 0.0];
        assert_eq!(order_by_magnitude(v.view()), vec![1, 2, 0, 3]);
        assert_eq!(tail_norms(v.view()), vec![4.5, 1.5, 0.5, 0.0, 0.0]);
    }
}
