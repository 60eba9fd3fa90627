//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

pub fn to_na(x: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]])
}

pub fn to_na_vec(v: ArrayView1<f64>) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().copied())
}

pub fn from_na_vec(v: &DVector<f64>) -> Array1<f64> {
    Array1::from_iter(v.iter().copied())
}

/// Eigenpairs of XᵀX in ascending order.
pub fn gram_eigen(x: ArrayView2<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = to_na(x);
    let eig = SymmetricEigen::new(m.transpose() * &m);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.ncols(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Orthonormal kernel basis of X from the eigenvectors of XᵀX with
/// eigenvalue below `tol`·λ_max.
pub fn kernel_basis(x: ArrayView2<f64>, tol: f64) -> DMatrix<f64> {
    let (vals, vecs) = gram_eigen(x);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= tol * top).collect();
    DMatrix::from_fn(vecs.nrows(), cols.len(), |r, c| vecs[(r, cols[c])])
}

/// Smallest singular value of an n×p matrix with n ≤ p, from XXᵀ.
pub fn smallest_singular(x: ArrayView2<f64>) -> f64 {
    let m = to_na(x);
    let eig = SymmetricEigen::new(&m * m.transpose());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt()
}

fn ratio(v: &DVector<f64>) -> f64 {
    let l1: f64 = v.iter().map(|a| a.abs()).sum();
    (v.len() as f64).sqrt() * v.norm() / l1
}

/// Exact distortion of the span of `k` (2 or 3 columns): the ℓ1 unit ball cut
/// by the kernel is a polytope and the convex ‖·‖₂ peaks at a vertex, where
/// dim − 1 coordinates vanish. Enumerates those vertices.
pub fn distortion_vertices(k: &DMatrix<f64>) -> f64 {
    let p = k.nrows();
    let mut best: f64 = 1.0;
    let mut consider = |c: DVector<f64>| {
        if c.norm() > 1e-12 {
            best = best.max(ratio(&(k * c)));
        }
    };
    match k.ncols() {
        2 => (0..p).for_each(|i| consider(DVector::from_vec(vec![-k[(i, 1)], k[(i, 0)]]))),
        3 => {
            for (i, j) in (0..p).tuple_combinations() {
                let a = k.row(i).transpose();
                let b = k.row(j).transpose();
                consider(a.cross(&b));
            }
        }
        d => panic!("vertex oracle handles kernel dim 2 or 3, got {d}"),
    }
    best
}

fn csc(rows: &[Vec<f64>]) -> CscMatrix<f64> {
    CscMatrix::from(rows)
}

fn settings() -> clarabel::solver::DefaultSettings<f64> {
    DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .max_iter(500)
        .build()
        .unwrap()
}

/// Dantzig selector by interior point: min 1ᵀu subject to −u ≤ β ≤ u and
/// ‖Xᵀ(y − Xβ)‖_∞ ≤ λ. Returns (β, ‖β‖₁).
pub fn dantzig_ipm(x: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64) -> (Array1<f64>, f64) {
    let p = x.ncols();
    let g = x.t().dot(&x);
    let c = x.t().dot(&y);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..p {
        let mut r = vec![0.0; 2 * p];
        r[i] = 1.0;
        r[p + i] = -1.0;
        a.push(r);
        b.push(0.0);
        let mut r = vec![0.0; 2 * p];
        r[i] = -1.0;
        r[p + i] = -1.0;
        a.push(r);
        b.push(0.0);
    }
    for i in 0..p {
        let mut r = vec![0.0; 2 * p];
        r[..p].iter_mut().enumerate().for_each(|(j, v)| *v = g[[i, j]]);
        a.push(r.clone());
        b.push(lambda + c[i]);
        r[..p].iter_mut().for_each(|v| *v = -*v);
        a.push(r);
        b.push(lambda - c[i]);
    }
    let q: Vec<f64> = (0..2 * p).map(|i| if i < p { 0.0 } else { 1.0 }).collect();
    let pm = CscMatrix::<f64>::zeros((2 * p, 2 * p));
    let am = csc(&a);
    let cones = [NonnegativeConeT(a.len())];
    let mut solver = DefaultSolver::new(&pm, &q, &am, &b, &cones, settings()).unwrap();
    solver.solve();
    assert!(matches!(solver.solution.status, SolverStatus::Solved), "{:?}", solver.solution.status);
    let beta = Array1::from_iter(solver.solution.x[..p].iter().copied());
    let obj = beta.iter().map(|v| v.abs()).sum();
    (beta, obj)
}

/// min over w with ‖w‖₁ ≤ r of ‖a + Bw‖₂, by interior point on the split QP.
pub fn min_l2_over_l1_ball(a: &DVector<f64>, bm: &DMatrix<f64>, r: f64) -> f64 {
    let m = bm.ncols();
    if m == 0 || r == 0.0 {
        return a.norm();
    }
    let btb = bm.transpose() * bm;
    let lin = bm.transpose() * a;
    let nv = 2 * m;
    let mut prow = vec![vec![0.0; nv]; nv];
    for i in 0..m {
        for j in i..m {
            // upper triangle only
            prow[i][j] = btb[(i, j)];
        }
    }
    let pm = csc(&prow);
    let q: Vec<f64> = (0..nv).map(|i| if i < m { lin[i] } else { 0.0 }).collect();
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; nv];
        row[i] = 1.0;
        row[m + i] = -1.0;
        rows.push(row);
        b.push(0.0);
        let mut row = vec![0.0; nv];
        row[i] = -1.0;
        row[m + i] = -1.0;
        rows.push(row);
        b.push(0.0);
    }
    let mut row = vec![0.0; nv];
    row[m..].iter_mut().for_each(|v| *v = 1.0);
    rows.push(row);
    b.push(r);
    let am = csc(&rows);
    let cones = [NonnegativeConeT(rows.len())];
    let mut solver = DefaultSolver::new(&pm, &q, &am, &b, &cones, settings()).unwrap();
    solver.solve();
    let w = DVector::from_iterator(m, solver.solution.x[..m].iter().copied());
    // clamp any interior-point overshoot back into the ball
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let w = if l1 > r { w * (r / l1) } else { w };
    (a + bm * w).norm()
}

/// Restricted-eigenvalue constant over supports of size ≤ `order` (1 or 2) by
/// an angle grid on each support, an exact inner convex solve, and
/// golden-section refinement around the best grid points.
pub fn re_constant_small(x: ArrayView2<f64>, order: usize, c0: f64, grid: usize) -> f64 {
    assert!(order == 1 || order == 2);
    let m = to_na(x);
    let p = m.ncols();
    let inner = |t: &[usize], coef: &[f64]| {
        let off: Vec<usize> = (0..p).filter(|j| !t.contains(j)).collect();
        let a = t.iter().zip(coef).fold(DVector::zeros(m.nrows()), |acc, (&j, &c)| acc + m.column(j) * c);
        let bm = DMatrix::from_fn(m.nrows(), off.len(), |r, c| m[(r, off[c])]);
        let l1: f64 = coef.iter().map(|v| v.abs()).sum();
        let l2: f64 = coef.iter().map(|v| v * v).sum::<f64>().sqrt();
        min_l2_over_l1_ball(&a, &bm, c0 * l1) / l2
    };
    let mut best = f64::INFINITY;
    for j in 0..p {
        best = best.min(inner(&[j], &[1.0]));
    }
    if order == 1 {
        return best;
    }
    let mut cands: Vec<(f64, [usize; 2], f64)> = Vec::new();
    for t in (0..p).combinations(2) {
        for g in 0..grid {
            let th = std::f64::consts::PI * g as f64 / grid as f64;
            let v = inner(&t, &[th.cos(), th.sin()]);
            cands.push((v, [t[0], t[1]], th));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let h = std::f64::consts::PI / grid as f64;
    for &(v, t, th) in cands.iter().take(8) {
        best = best.min(v);
        let f = |a: f64| inner(&t, &[a.cos(), a.sin()]);
        let (mut lo, mut hi) = (th - h, th + h);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..40 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
        }
        best = best.min(f1).min(f2);
    }
    best
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Lasso ½‖y − Xβ‖² + λ‖β‖₁ by FISTA with adaptive restart. Returns (β, objective).
pub fn lasso_fista(x: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64, tol: f64) -> (Array1<f64>, f64) {
    let m = to_na(x);
    let yv = to_na_vec(y);
    let p = m.ncols();
    let lip = SymmetricEigen::new(m.transpose() * &m).eigenvalues.max();
    let step = 1.0 / lip;
    let obj = |b: &DVector<f64>| 0.5 * (&yv - &m * b).norm_squared() + lambda * b.lp_norm(1);
    let mut b = DVector::zeros(p);
    let mut z = b.clone();
    let mut t = 1.0f64;
    let mut prev = obj(&b);
    for _ in 0..2_000_000 {
        let grad = m.transpose() * (&m * &z - &yv);
        let nb = (&z - grad * step).map(|v| soft(v, lambda * step));
        let f = obj(&nb);
        if f > prev {
            // restart momentum
            t = 1.0;
            z = b.clone();
            continue;
        }
        let nt = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &nb + (&nb - &b) * ((t - 1.0) / nt);
        let moved = (&nb - &b).norm();
        b = nb;
        t = nt;
        prev = f;
        if moved < tol {
            break;
        }
    }
    (from_na_vec(&b), prev)
}

/// Least squares on the columns `support` via Householder QR.
pub fn ls_qr(x: ArrayView2<f64>, y: ArrayView1<f64>, support: &[usize]) -> Array1<f64> {
    let m = to_na(x);
    let xs = DMatrix::from_fn(m.nrows(), support.len(), |r, c| m[(r, support[c])]);
    let qr = xs.qr();
    let q = qr.q();
    let r = qr.r();
    let rhs = q.transpose() * to_na_vec(y);
    let coef = r.solve_upper_triangular(&rhs).expect("full column rank");
    let mut out = Array1::zeros(m.ncols());
    for (a, &j) in support.iter().enumerate() {
        out[j] = coef[a];
    }
    out
}

/// RIP constant of order ≤ 2 by a double loop over column pairs with the
/// closed-form 2×2 eigenvalues.
pub fn rip_pairs(x: ArrayView2<f64>) -> f64 {
    let p = x.ncols();
    let col = |j: usize| x.column(j);
    let mut theta: f64 = 0.0;
    for i in 0..p {
        let a = col(i).dot(&col(i));
        theta = theta.max((a - 1.0).abs());
        for j in i + 1..p {
            let d = col(j).dot(&col(j));
            let b = col(i).dot(&col(j));
            let mid = (a + d) / 2.0;
            let rad = (((a - d) / 2.0).powi(2) + b * b).sqrt();
            theta = theta.max(mid + rad - 1.0).max(1.0 - (mid - rad));
        }
    }
    theta
}

/// Square matrix with orthonormal columns, from the QR of a Gaussian matrix.
pub fn random_orthogonal(p: usize, seed: u64) -> Array2<f64> {
    let g = udp_core::harness::gen_gaussian_design(p, p, false, seed).unwrap();
    let q = to_na(g.entries()).qr().q();
    Array2::from_shape_fn((p, p), |(i, j)| q[(i, j)])
}
