//! Distortion of the kernel of a design.
//!
//! For a subspace Γ ⊂ R^p the distortion is δ = sup_{x∈Γ} √p‖x‖₂/‖x‖₁, so
//! 1 ≤ δ ≤ √p. With B an orthonormal kernel basis this is √p / m where
//! m = min_{‖z‖₂=1} ‖Bz‖₁. The map z ↦ ‖Bz‖₁ is √p-Lipschitz on the sphere,
//! which is what makes a finite covering certify the minimum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{norm1, norm2, DesignMatrix};
use crate::rng::{gaussian_vec, rng_for, Stream};

/// Step scale of the projected subgradient search.
pub const SEARCH_STEP: f64 = 0.1;
pub const DEFAULT_SEARCH_ITERS: usize = 500;
pub const DEFAULT_RESTARTS: usize = 64;

/// Refinement budget for the certified method.
const MAX_CELLS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionMethod {
    ExactGrid,
    RandomizedWitness,
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionEstimate {
    #[serde(rename = "delta_lower")]
    pub lower: f64,
    #[serde(rename = "delta_upper")]
    pub upper: f64,
    pub method: DistortionMethod,
    /// Kernel vector (unit ℓ2 norm) attaining `lower`.
    pub witness: Vec<f64>,
    pub grid_resolution: Option<f64>,
    pub kernel_dim: usize,
    pub p: usize,
    pub warning: Option<String>,
}

/// √p‖x‖₂/‖x‖₁, or 1 for the zero vector.
pub fn witness_ratio(x: ArrayView1<f64>) -> f64 {
    let l1 = norm1(x);
    if l1 == 0.0 {
        return 1.0;
    }
    (x.len() as f64).sqrt() * norm2(x) / l1
}

fn trivial(p: usize) -> DistortionEstimate {
    DistortionEstimate {
        lower: 1.0,
        upper: 1.0,
        method: DistortionMethod::Trivial,
        witness: vec![0.0; p],
        grid_resolution: None,
        kernel_dim: 0,
        p,
        warning: Some("trivial kernel {0}: distortion taken as 1".into()),
    }
}

/// ‖Bz‖₁.
fn l1_image(basis: ArrayView2<f64>, z: &[f64]) -> f64 {
    basis
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(z).map(|(b, zi)| b * zi).sum::<f64>().abs())
        .sum()
}

fn image(basis: ArrayView2<f64>, z: &[f64]) -> Array1<f64> {
    basis.dot(&ArrayView1::from(z))
}

fn normalize(z: &mut [f64]) -> bool {
    let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    z.iter_mut().for_each(|x| *x /= n);
    true
}

/// Moves z to a nearby vertex of the polytope {‖Bz‖₁ ≤ 1}: the k−1 rows of B
/// with the smallest |(Bz)_i| are zeroed by taking the direction orthogonal to
/// them. Repeats while the objective improves.
fn polish(basis: ArrayView2<f64>, z: &[f64], value: f64) -> (Vec<f64>, f64) {
    let k = basis.ncols();
    let mut best = (z.to_vec(), value);
    if k < 2 {
        return best;
    }
    for _ in 0..32 {
        let w = image(basis, &best.0);
        let mut rows: Vec<usize> = (0..w.len()).collect();
        rows.sort_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(a.cmp(&b)));
        let mut cand = match k {
            2 => {
                let b = basis.row(rows[0]);
                vec![-b[1], b[0]]
            }
            3 => {
                let (b, c) = (basis.row(rows[0]), basis.row(rows[1]));
                vec![
                    b[1] * c[2] - b[2] * c[1],
                    b[2] * c[0] - b[0] * c[2],
                    b[0] * c[1] - b[1] * c[0],
                ]
            }
            _ => return best,
        };
        if !normalize(&mut cand) {
            return best;
        }
        let dot: f64 = cand.iter().zip(&best.0).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            cand.iter_mut().for_each(|x| *x = -*x);
        }
        let val = l1_image(basis, &cand);
        if val < best.1 {
            best = (cand, val);
        } else {
            break;
        }
    }
    best
}

/// A region of the unit sphere in R^k, k ∈ {2, 3}, parametrised so that the
/// parameter-space half-diameter bounds the spherical distance from the
/// centre. Only one of each antipodal pair is covered: ‖Bz‖₁ is even in z.
#[derive(Debug, Clone, Copy)]
enum Cell {
    /// z = (cos θ, sin θ), θ ∈ [a, b) ⊂ [0, π).
    Arc { a: f64, b: f64 },
    /// Gnomonic patch of the cube face `axis`: z ∝ e_axis + u·e_i + v·e_j.
    Patch { axis: usize, u0: f64, u1: f64, v0: f64, v1: f64 },
}

impl Cell {
    fn center(&self) -> Vec<f64> {
        match *self {
            Cell::Arc { a, b } => {
                let t = 0.5 * (a + b);
                vec![t.cos(), t.sin()]
            }
            Cell::Patch { axis, u0, u1, v0, v1 } => {
                let (u, v) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
                let mut z = vec![0.0; 3];
                z[axis] = 1.0;
                z[(axis + 1) % 3] = u;
                z[(axis + 2) % 3] = v;
                normalize(&mut z);
                z
            }
        }
    }

    /// Covering radius: every point of the cell lies within this distance of
    /// the centre (arc length bounds chord; the gnomonic map is 1-Lipschitz).
    fn radius(&self) -> f64 {
        match *self {
            Cell::Arc { a, b } => 0.5 * (b - a),
            Cell::Patch { u0, u1, v0, v1, .. } => 0.5 * (u1 - u0).hypot(v1 - v0),
        }
    }

    fn split(&self) -> Vec<Cell> {
        match *self {
            Cell::Arc { a, b } => {
                let m = 0.5 * (a + b);
                vec![Cell::Arc { a, b: m }, Cell::Arc { a: m, b }]
            }
            Cell::Patch { axis, u0, u1, v0, v1 } => {
                let (um, vm) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
                vec![
                    Cell::Patch { axis, u0, u1: um, v0, v1: vm },
                    Cell::Patch { axis, u0: um, u1, v0, v1: vm },
                    Cell::Patch { axis, u0, u1: um, v0: vm, v1 },
                    Cell::Patch { axis, u0: um, u1, v0: vm, v1 },
                ]
            }
        }
    }
}

fn initial_cells(k: usize) -> Vec<Cell> {
    match k {
        2 => {
            let n = 64;
            let h = std::f64::consts::PI / n as f64;
            (0..n).map(|i| Cell::Arc { a: i as f64 * h, b: (i + 1) as f64 * h }).collect()
        }
        3 => {
            let n = 8;
            let h = 2.0 / n as f64;
            let mut cells = Vec::with_capacity(3 * n * n);
            for axis in 0..3 {
                for i in 0..n {
                    for j in 0..n {
                        let (u0, v0) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
                        cells.push(Cell::Patch { axis, u0, u1: u0 + h, v0, v1: v0 + h });
                    }
                }
            }
            cells
        }
        _ => unreachable!("cells only for k = 2, 3"),
    }
}

struct Open {
    lb: f64,
    seq: u64,
    cell: Cell,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // min-heap on (lb, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

/// Certified distortion for kernel dimension 1 ≤ k ≤ 3.
///
/// Best-first branch and bound over a covering of the half-sphere. Each cell
/// carries the lower bound ‖Bz_c‖₁ − √p·r; the incumbent (polished on every
/// improvement) gives the witness. Refinement stops once the induced bracket
/// on δ is narrower than `tol`. Runs with a smaller `tol` extend runs with a
/// larger one, so the bracket only tightens.
pub fn distortion_exact(d: &DesignMatrix, tol: f64) -> Result<DistortionEstimate> {
    if !(tol > 0.0 && tol.is_finite()) {
        return param(format!("tol must be > 0, got {tol}"));
    }
    let p = d.p();
    let k = d.kernel_dim();
    match k {
        0 => Ok(trivial(p)),
        1..=3 => exact_on_basis(d.kernel_basis(), tol),
        _ => Err(Error::KernelTooLarge { dim: k }),
    }
}

pub(crate) fn exact_on_basis(basis: ArrayView2<f64>, tol: f64) -> Result<DistortionEstimate> {
    let (p, k) = basis.dim();
    let sqrt_p = (p as f64).sqrt();

    if k == 1 {
        let w = basis.column(0).to_owned();
        let delta = witness_ratio(w.view()).clamp(1.0, sqrt_p);
        return Ok(DistortionEstimate {
            lower: delta,
            upper: delta,
            method: DistortionMethod::ExactGrid,
            witness: w.to_vec(),
            grid_resolution: Some(0.0),
            kernel_dim: 1,
            p,
            warning: None,
        });
    }

    let lipschitz = sqrt_p;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut best_z: Vec<f64> = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut finest = f64::INFINITY;
    let mut evaluated = 0usize;

    let mut consider = |cell: Cell,
                        heap: &mut BinaryHeap<Open>,
                        best_z: &mut Vec<f64>,
                        best_val: &mut f64,
                        seq: &mut u64| {
        let z = cell.center();
        let val = l1_image(basis, &z);
        let r = cell.radius();
        finest = finest.min(r);
        if val < *best_val {
            let (pz, pv) = polish(basis, &z, val);
            *best_z = pz;
            *best_val = pv;
        }
        let lb = val - lipschitz * r;
        if lb < *best_val {
            heap.push(Open { lb, seq: *seq, cell });
            *seq += 1;
        }
    };

    for cell in initial_cells(k) {
        consider(cell, &mut heap, &mut best_z, &mut best_val, &mut seq);
        evaluated += 1;
    }

    let bracket = |heap: &BinaryHeap<Open>, best_val: f64| {
        let lo_m = heap.peek().map_or(best_val, |o| o.lb.min(best_val)).max(1.0);
        let upper = (sqrt_p / lo_m).min(sqrt_p);
        let lower = (sqrt_p / best_val).clamp(1.0, sqrt_p);
        (lower, upper)
    };

    loop {
        let (lower, upper) = bracket(&heap, best_val);
        if upper - lower <= tol {
            break;
        }
        let Some(open) = heap.pop() else { break };
        if open.lb >= best_val {
            continue;
        }
        for child in open.cell.split() {
            consider(child, &mut heap, &mut best_z, &mut best_val, &mut seq);
            evaluated += 1;
        }
        if evaluated > MAX_CELLS {
            return Err(Error::InvalidInput(format!(
                "distortion refinement exceeded {MAX_CELLS} cells before reaching tol {tol}"
            )));
        }
    }

    let witness = image(basis, &best_z);
    let lower = witness_ratio(witness.view()).clamp(1.0, sqrt_p);
    let (_, upper) = bracket(&heap, best_val);
    Ok(DistortionEstimate {
        lower,
        upper: upper.max(lower),
        method: DistortionMethod::ExactGrid,
        witness: witness.to_vec(),
        grid_resolution: Some(finest),
        kernel_dim: k,
        p,
        warning: None,
    })
}

/// Randomized lower bound on δ by multi-restart projected subgradient descent
/// of z ↦ ‖Bz‖₁ on the unit sphere. Restart `i` is seeded with `seed + i`, so
/// the result does not depend on scheduling.
pub fn distortion_search(
    d: &DesignMatrix,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<DistortionEstimate> {
    if restarts == 0 || iters == 0 {
        return param("restarts and iterations must both be ≥ 1");
    }
    let p = d.p();
    if d.kernel_dim() == 0 {
        return Ok(trivial(p));
    }
    let basis = d.kernel_basis();
    let k = basis.ncols();
    let sqrt_p = (p as f64).sqrt();

    let runs: Vec<(Vec<f64>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed.wrapping_add(r as u64), Stream::Distortion);
            let mut z = gaussian_vec(&mut rng, k).to_vec();
            if !normalize(&mut z) {
                z = vec![0.0; k];
                z[0] = 1.0;
            }
            let mut best = (z.clone(), l1_image(basis, &z));
            for t in 1..=iters {
                let w = image(basis, &z);
                let signs = w.mapv(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
                let g = basis.t().dot(&signs);
                let radial: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
                let mut tangent: Vec<f64> = g.iter().zip(&z).map(|(gi, zi)| gi - radial * zi).collect();
                if !normalize(&mut tangent) {
                    break;
                }
                let step = SEARCH_STEP / (t as f64).sqrt();
                z.iter_mut().zip(&tangent).for_each(|(zi, ti)| *zi -= step * ti);
                normalize(&mut z);
                let val = l1_image(basis, &z);
                if val < best.1 {
                    best = (z.clone(), val);
                }
            }
            polish(basis, &best.0, best.1)
        })
        .collect();

    let (best_z, _) = runs
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("restarts ≥ 1");
    let witness = image(basis, &best_z);
    Ok(DistortionEstimate {
        lower: witness_ratio(witness.view()).clamp(1.0, sqrt_p),
        upper: sqrt_p,
        method: DistortionMethod::RandomizedWitness,
        witness: witness.to_vec(),
        grid_resolution: None,
        kernel_dim: k,
        p,
        warning: None,
    })
}

/// C·√(p(1 + log(p/n))/n): high-probability distortion of a random
/// (p−n)-dimensional subspace.
pub fn gaussian_distortion_bound(n: usize, p: usize, c: f64) -> Result<f64> {
    if n == 0 || n > p {
        return param(format!("need 1 ≤ n ≤ p, got n = {n}, p = {p}"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return param(format!("constant C must be > 0, got {c}"));
    }
    let (n, p) = (n as f64, p as f64);
    Ok(c * (p * (1.0 + (p / n).ln()) / n).sqrt())
}
