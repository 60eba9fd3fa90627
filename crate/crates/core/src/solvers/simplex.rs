//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves min cᵀx subject to Ax = b, x ≥ 0.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use crate::linalg::solve_dense;

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-12;
const REINVERSIONS: usize = 4;
/// Reduced costs above this (relative) with no pivot are treated as round-off.
const NOISE_COST: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    PivotLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Array1<f64>,
    pub objective: f64,
    pub pivots: usize,
    pub status: LpStatus,
}

struct Tableau {
    /// m constraint rows then one cost row; last column is the right-hand side.
    t: Array2<f64>,
    /// The constraint rows as first built, for reinversion.
    orig: Array2<f64>,
    basis: Vec<usize>,
    m: usize,
    /// Columns allowed to enter the basis.
    enterable: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[[row, col]];
        self.t.row_mut(row).mapv_inplace(|v| v / piv);
        let pivot_row = self.t.row(row).to_owned();
        for r in 0..=self.m {
            if r == row {
                continue;
            }
            let f = self.t[[r, col]];
            if f != 0.0 {
                self.t.row_mut(r).scaled_add(-f, &pivot_row);
                self.t[[r, col]] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Harris two-pass ratio test: the step allowed by a small feasibility
    /// tolerance, then the largest pivot among rows within that step.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let rhs = self.rhs_col();
        let col_scale = (0..self.m).map(|r| self.t[[r, col]].abs()).fold(0.0, f64::max);
        let piv_tol = PIVOT_EPS * col_scale.max(1.0);
        let rhs_scale = 1.0 + (0..self.m).map(|r| self.t[[r, rhs]].abs()).fold(0.0, f64::max);
        let feas_tol = FEAS_EPS * rhs_scale;
        let rows: Vec<usize> = (0..self.m).filter(|&r| self.t[[r, col]] > piv_tol).collect();
        let step = rows
            .iter()
            .map(|&r| (self.t[[r, rhs]].max(0.0) + feas_tol) / self.t[[r, col]])
            .fold(f64::INFINITY, f64::min);
        rows.into_iter()
            .filter(|&r| self.t[[r, rhs]].max(0.0) / self.t[[r, col]] <= step)
            .max_by(|&a, &b| {
                self.t[[a, col]]
                    .total_cmp(&self.t[[b, col]])
                    .then(self.basis[b].cmp(&self.basis[a]))
            })
    }

    /// Bland's entering rule with the Harris leaving rule. A column whose
    /// reduced cost is only noise and that has no usable pivot is skipped.
    fn optimise(&mut self, max_pivots: usize) -> LpStatus {
        let mut skipped = vec![false; self.enterable];
        loop {
            let cost_scale = 1.0 + (0..self.enterable).map(|j| self.t[[self.m, j]].abs()).fold(0.0, f64::max);
            let entering = (0..self.enterable).find(|&j| !skipped[j] && self.t[[self.m, j]] < -PIVOT_EPS * cost_scale);
            let Some(col) = entering else {
                return LpStatus::Optimal;
            };
            if self.pivots >= max_pivots {
                return LpStatus::PivotLimit;
            }
            match self.leaving_row(col) {
                Some(row) => {
                    self.pivot(row, col);
                    skipped.iter_mut().for_each(|v| *v = false);
                }
                None if self.t[[self.m, col]] > -NOISE_COST * cost_scale => skipped[col] = true,
                None => return LpStatus::Unbounded,
            }
        }
    }

    /// Rebuilds the constraint rows as B⁻¹[A | b] from the original data to
    /// shed accumulated pivot error. Leaves the tableau alone if B is singular.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        let mut bmat = Array2::<f64>::zeros((m, m));
        for (k, &j) in self.basis.iter().enumerate() {
            bmat.column_mut(k).assign(&self.orig.column(j));
        }
        let mut fresh = Array2::<f64>::zeros(self.orig.dim());
        for j in 0..self.orig.ncols() {
            let Some(col) = solve_dense(bmat.view(), self.orig.column(j)) else {
                return false;
            };
            fresh.column_mut(j).assign(&col);
        }
        for (k, &j) in self.basis.iter().enumerate() {
            // exact unit columns for the basis
            fresh.column_mut(j).fill(0.0);
            fresh[[k, j]] = 1.0;
        }
        self.t.slice_mut(s![..m, ..]).assign(&fresh);
        true
    }

    /// Optimises, then reinverts and re-optimises until the cost row of the
    /// rebuilt tableau confirms optimality.
    fn optimise_stable(&mut self, cost: &[f64], max_pivots: usize) -> LpStatus {
        let mut status = self.optimise(max_pivots);
        for _ in 0..REINVERSIONS {
            if status != LpStatus::Optimal || !self.reinvert() {
                break;
            }
            self.set_cost_row(cost);
            let before = self.pivots;
            status = self.optimise(max_pivots);
            if self.pivots == before {
                break;
            }
        }
        status
    }

    fn set_cost_row(&mut self, cost: &[f64]) {
        let rhs = self.rhs_col();
        let mut row = Array1::<f64>::zeros(rhs + 1);
        for (j, &c) in cost.iter().enumerate() {
            row[j] = c;
        }
        for r in 0..self.m {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                row.scaled_add(-cb, &self.t.row(r));
            }
        }
        self.t.row_mut(self.m).assign(&row);
    }
}

/// min cᵀx s.t. Ax = b, x ≥ 0.
pub fn solve_standard(a: ArrayView2<f64>, b: ArrayView1<f64>, c: ArrayView1<f64>, max_pivots: usize) -> LpSolution {
    let (m, nv) = a.dim();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(c.len(), nv, "cost length");
    let width = nv + m + 1;
    let mut t = Array2::<f64>::zeros((m + 1, width));
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nv {
            t[[r, j]] = sign * a[[r, j]];
        }
        t[[r, nv + r]] = 1.0;
        t[[r, width - 1]] = sign * b[r];
    }
    let orig = t.slice(s![..m, ..]).to_owned();
    let mut tab = Tableau { t, orig, basis: (nv..nv + m).collect(), m, enterable: nv, pivots: 0 };

    // Phase one: minimise the sum of artificials.
    let mut phase_one = vec![0.0; nv + m];
    phase_one[nv..].iter_mut().for_each(|v| *v = 1.0);
    tab.set_cost_row(&phase_one);
    let status = tab.optimise_stable(&phase_one, max_pivots);
    let infeasibility = -tab.t[[m, width - 1]];
    let b_scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if status == LpStatus::PivotLimit {
        return finish(&tab, nv, c, LpStatus::PivotLimit);
    }
    if infeasibility > 1e-8 * b_scale {
        return finish(&tab, nv, c, LpStatus::Infeasible);
    }

    // Drive zero-level artificials out; rows with no structural entry are redundant.
    let mut redundant = vec![false; m];
    for r in 0..m {
        if tab.basis[r] >= nv {
            match (0..nv).find(|&j| tab.t[[r, j]].abs() > 1e-9) {
                Some(j) => tab.pivot(r, j),
                None => redundant[r] = true,
            }
        }
    }
    for r in 0..m {
        if redundant[r] {
            tab.t.row_mut(r).fill(0.0);
        }
    }

    let cost = c.to_vec();
    tab.set_cost_row(&cost);
    let status = tab.optimise_stable(&cost, max_pivots);
    let mut sol = finish(&tab, nv, c, status);
    if status == LpStatus::Optimal {
        polish(&mut sol, &tab, a, b, c, &redundant);
    }
    sol
}

fn finish(tab: &Tableau, nv: usize, c: ArrayView1<f64>, status: LpStatus) -> LpSolution {
    let rhs = tab.rhs_col();
    let mut x = Array1::<f64>::zeros(nv);
    for r in 0..tab.m {
        let j = tab.basis[r];
        if j < nv {
            x[j] = tab.t[[r, rhs]].max(0.0);
        }
    }
    let objective = c.dot(&x);
    LpSolution { x, objective, pivots: tab.pivots, status }
}

/// Re-solves the optimal basis system directly to remove accumulated pivot error.
fn polish(sol: &mut LpSolution, tab: &Tableau, a: ArrayView2<f64>, b: ArrayView1<f64>, c: ArrayView1<f64>, redundant: &[bool]) {
    let nv = a.ncols();
    let rows: Vec<usize> = (0..tab.m).filter(|&r| !redundant[r]).collect();
    let cols: Vec<usize> = rows.iter().map(|&r| tab.basis[r]).collect();
    if cols.iter().any(|&j| j >= nv) {
        return;
    }
    let k = rows.len();
    let mut sub = Array2::<f64>::zeros((k, k));
    let mut rhs = Array1::<f64>::zeros(k);
    for (i, &r) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            sub[[i, jj]] = a[[r, j]];
        }
        rhs[i] = b[r];
    }
    let Some(xb) = solve_dense(sub.view(), rhs.view()) else {
        return;
    };
    let scale = 1.0 + xb.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if xb.iter().any(|&v| v < -1e-9 * scale) {
        return;
    }
    let mut x = Array1::<f64>::zeros(nv);
    for (&j, &v) in cols.iter().zip(xb.iter()) {
        x[j] = v.max(0.0);
    }
    sol.objective = c.dot(&x);
    sol.x = x;
}
