//! Kraft-type indistinguishability bounds.
//!
//! The key quantity is the minimal total variation between the convex hulls
//! of two density families,
//! `var([F0],[F1]) = min { var(P,Q) : P in [F0], Q in [F1] }`,
//! which lower-bounds `alpha + beta` for every single-sample test via
//! `alpha + beta >= 1 - var([F0],[F1])`.
//!
//! Minimizing `1/2 * || F0 p - F1 q ||_1` over two simplices is a linear
//! program. Small instances are solved exactly by a dense simplex method on
//! the equality form (split residual `x = x+ - x-`); large instances fall
//! back to a primal-dual first-order scheme. Both report a certified
//! optimality gap from the weak-duality bound
//! `g(u) = min_i <u, F0_i> - max_j <u, F1_j>`, valid for any `|u|_inf <= 1/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{total_variation, DensityFamily};
use crate::partition::{build_test_from_families, find_separating_sets, PartitionTestSpec};

/// Outcome of the hull-distance minimization.
#[derive(Debug, Clone, Serialize)]
pub struct HullDistanceResult {
    /// Best value of `1/2 * ||F0 p - F1 q||_1` found (an upper bound on the
    /// hull distance; equal to it within `gap_bound`).
    pub value: f64,
    pub weights0: Vec<f64>,
    pub weights1: Vec<f64>,
    pub iterations: usize,
    /// Certified optimality gap: `value - g(u)` for the best dual witness.
    pub gap_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    IndistinguishableCertificate,
    SeparationCertificate,
    Unknown,
}

/// Decision with the evidence that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub threshold: f64,
    /// Hull distance value (present for all kinds).
    pub value: f64,
    pub weights0: Vec<f64>,
    pub weights1: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PartitionTestSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyConfig {
    /// Hull distance at or below this certifies practical indistinguishability.
    pub indist_threshold: f64,
    /// Requested optimality gap for the hull solve.
    pub tol: f64,
    /// Separating-set search budget.
    pub max_k: usize,
    pub max_resolution: u32,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { indist_threshold: 0.05, tol: 1e-6, max_k: 8, max_resolution: 6 }
    }
}

fn check_families(f0: &DensityFamily, f1: &DensityFamily) -> Result<()> {
    if f0.n_cells() != f1.n_cells() {
        return Err(Error::GridMismatch(f0.n_cells(), f1.n_cells()));
    }
    Ok(())
}

/// Minimal total variation between the convex hulls of `f0` and `f1`.
///
/// Returns an error carrying the best value and gap if the solver cannot
/// certify optimality within `tol`.
pub fn hull_min_tv(f0: &DensityFamily, f1: &DensityFamily, tol: f64) -> Result<HullDistanceResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let result = hull_solve(f0, f1, tol)?;
    if result.gap_bound > tol {
        return Err(Error::HullNoConvergence { value: result.value, gap: result.gap_bound });
    }
    Ok(result)
}

/// Kraft lower bound on `alpha + beta` for any single-sample test:
/// `max(0, 1 - var([F0],[F1]))`.
pub fn kraft_lower_bound(f0: &DensityFamily, f1: &DensityFamily, tol: f64) -> Result<f64> {
    Ok((1.0 - hull_min_tv(f0, f1, tol)?.value).max(0.0))
}

/// Dichotomy check: small hull distance certifies indistinguishability,
/// otherwise a separating partition test is searched for.
pub fn certify(f0: &DensityFamily, f1: &DensityFamily, config: &CertifyConfig) -> Result<Verdict> {
    check_families(f0, f1)?;
    // a feasible mixture pair upper-bounds the hull distance, so the
    // indistinguishability branch is sound even if the solve hit its cap
    let hull = hull_solve(f0, f1, config.tol)?;
    if hull.value <= config.indist_threshold {
        return Ok(Verdict {
            kind: VerdictKind::IndistinguishableCertificate,
            threshold: config.indist_threshold,
            value: hull.value,
            weights0: hull.weights0,
            weights1: hull.weights1,
            test: None,
            separation_gap: None,
        });
    }
    match find_separating_sets(f0, f1, config.max_k, config.max_resolution) {
        Ok((sets, gap)) => {
            let spec = build_test_from_families(f0, f1, &sets)?;
            Ok(Verdict {
                kind: VerdictKind::SeparationCertificate,
                threshold: config.indist_threshold,
                value: hull.value,
                weights0: hull.weights0,
                weights1: hull.weights1,
                test: Some(spec),
                separation_gap: Some(gap),
            })
        }
        Err(Error::NoSeparation) => Ok(Verdict {
            kind: VerdictKind::Unknown,
            threshold: config.indist_threshold,
            value: hull.value,
            weights0: hull.weights0,
            weights1: hull.weights1,
            test: None,
            separation_gap: None,
        }),
        Err(e) => Err(e),
    }
}

/// Best feasible solution plus certified gap; never fails on solvable input.
pub(crate) fn hull_solve(
    f0: &DensityFamily,
    f1: &DensityFamily,
    tol: f64,
) -> Result<HullDistanceResult> {
    check_families(f0, f1)?;
    let cells = f0.n_cells();
    let (m0, m1) = (f0.len(), f1.len());
    let small = cells <= 512 && m0 + m1 <= 80;
    let mut result =
        if small { simplex_solve(f0, f1)? } else { pdhg_solve(f0, f1, tol) };
    // best vertex pair is always feasible; keeps value <= min pairwise tv
    let (vi, vj, vtv) = best_vertex_pair(f0, f1)?;
    if vtv < result.value {
        let mut w0 = vec![0.0; m0];
        let mut w1 = vec![0.0; m1];
        w0[vi] = 1.0;
        w1[vj] = 1.0;
        result.value = vtv;
        result.weights0 = w0;
        result.weights1 = w1;
    }
    result.gap_bound = result.gap_bound.max(0.0);
    Ok(result)
}

fn best_vertex_pair(f0: &DensityFamily, f1: &DensityFamily) -> Result<(usize, usize, f64)> {
    let mut best = (0, 0, f64::INFINITY);
    for (i, p) in f0.members().iter().enumerate() {
        for (j, q) in f1.members().iter().enumerate() {
            let tv = total_variation(p, q)?;
            if tv < best.2 {
                best = (i, j, tv);
            }
        }
    }
    Ok(best)
}

/// Weak-duality lower bound `min_i <u,F0_i> - max_j <u,F1_j>`, `|u|_inf <= 1/2`.
fn dual_bound(f0: &DensityFamily, f1: &DensityFamily, u: &[f64]) -> f64 {
    let dot = |m: &crate::measures::GridMeasure| -> f64 {
        m.weights().iter().zip(u).map(|(&w, &uc)| w * uc).sum()
    };
    let lo = f0.members().iter().map(dot).fold(f64::INFINITY, f64::min);
    let hi = f1.members().iter().map(dot).fold(f64::NEG_INFINITY, f64::max);
    lo - hi
}

fn primal_value(f0: &DensityFamily, f1: &DensityFamily, p: &[f64], q: &[f64]) -> f64 {
    let cells = f0.n_cells();
    let mut s = 0.0;
    for c in 0..cells {
        let mut x = 0.0;
        for (member, &w) in f0.members().iter().zip(p) {
            x += w * member.weights()[c];
        }
        for (member, &w) in f1.members().iter().zip(q) {
            x -= w * member.weights()[c];
        }
        s += x.abs();
    }
    0.5 * s
}

// ---------------------------------------------------------------------------
// Dense simplex on the equality form.
//
// Variables [x+ (C) | x- (C) | p (m0) | q (m1)], costs [1/2, 1/2, 0, 0].
// Rows: x+_c - x-_c - (F0 p)_c + (F1 q)_c = 0 for each cell, then
// sum(p) = 1 and sum(q) = 1. The starting basis {p_0, q_0, one of x+-_c per
// cell} is feasible by construction, so no phase 1 is needed.
// ---------------------------------------------------------------------------

const PIVOT_EPS: f64 = 1e-11;
const RCOST_EPS: f64 = 1e-10;

fn simplex_solve(f0: &DensityFamily, f1: &DensityFamily) -> Result<HullDistanceResult> {
    let cells = f0.n_cells();
    let (m0, m1) = (f0.len(), f1.len());
    let rows = cells + 2;
    let ncols = 2 * cells + m0 + m1;
    let rhs = ncols; // rhs column index

    // tableau rows: [A | b]
    let mut t = vec![vec![0.0; ncols + 1]; rows];
    for c in 0..cells {
        t[c][c] = 1.0;
        t[c][cells + c] = -1.0;
        for (i, member) in f0.members().iter().enumerate() {
            t[c][2 * cells + i] = -member.weights()[c];
        }
        for (j, member) in f1.members().iter().enumerate() {
            t[c][2 * cells + m0 + j] = member.weights()[c];
        }
    }
    for i in 0..m0 {
        t[cells][2 * cells + i] = 1.0;
        t[cells][rhs] = 1.0;
    }
    for j in 0..m1 {
        t[cells + 1][2 * cells + m0 + j] = 1.0;
        t[cells + 1][rhs] = 1.0;
    }

    let cost = |j: usize| if j < 2 * cells { 0.5 } else { 0.0 };

    // starting basis: p_0, q_0, and the signed residual variable per cell
    let mut basis = vec![0usize; rows];
    basis[cells] = 2 * cells;
    basis[cells + 1] = 2 * cells + m0;
    for c in 0..cells {
        let d = f0.members()[0].weights()[c] - f1.members()[0].weights()[c];
        basis[c] = if d >= 0.0 { c } else { cells + c };
    }

    // bring the tableau into basic form
    pivot(&mut t, cells, 2 * cells);
    pivot(&mut t, cells + 1, 2 * cells + m0);
    for c in 0..cells {
        pivot(&mut t, c, basis[c]);
    }

    // reduced-cost row, eliminated against the basis
    let mut z: Vec<f64> = (0..=ncols).map(|j| if j < ncols { cost(j) } else { 0.0 }).collect();
    for (r, &b) in basis.iter().enumerate() {
        let cb = cost(b);
        if cb != 0.0 {
            for j in 0..=ncols {
                z[j] -= cb * t[r][j];
            }
        }
    }

    let max_iter = 400 * rows + 4000;
    let mut iterations = 0;
    let mut stalled = 0usize;
    let mut last_obj = f64::INFINITY;
    while iterations < max_iter {
        let bland = stalled > 4 * rows;
        let mut enter = None;
        let mut best = -RCOST_EPS;
        for j in 0..ncols {
            if z[j] < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = z[j];
            }
        }
        let Some(enter) = enter else { break };
        // ratio test, smallest basic index on ties
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (r, row) in t.iter().enumerate() {
            if row[enter] > PIVOT_EPS {
                let ratio = row[rhs] / row[enter];
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.map_or(true, |l| basis[r] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(Error::InvalidParameter("unbounded hull LP".into()));
        };
        pivot_with_cost(&mut t, &mut z, leave, enter);
        basis[leave] = enter;
        iterations += 1;
        let obj = -z[rhs];
        if obj < last_obj - 1e-13 {
            last_obj = obj;
            stalled = 0;
        } else {
            stalled += 1;
        }
    }

    // extract primal point
    let mut p = vec![0.0; m0];
    let mut q = vec![0.0; m1];
    for (r, &b) in basis.iter().enumerate() {
        let v = t[r][rhs].max(0.0);
        if b >= 2 * cells && b < 2 * cells + m0 {
            p[b - 2 * cells] = v;
        } else if b >= 2 * cells + m0 {
            q[b - 2 * cells - m0] = v;
        }
    }
    normalize_simplex(&mut p);
    normalize_simplex(&mut q);
    let value = primal_value(f0, f1, &p, &q);

    // dual witness from the residual-variable reduced costs: y_c = 1/2 - z_{x+_c}
    let u: Vec<f64> = (0..cells).map(|c| (0.5 - z[c]).clamp(-0.5, 0.5)).collect();
    let gap = value - dual_bound(f0, f1, &u);

    Ok(HullDistanceResult { value, weights0: p, weights1: q, iterations, gap_bound: gap })
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let piv = t[row][col];
    debug_assert!(piv.abs() > PIVOT_EPS);
    let inv = 1.0 / piv;
    for v in t[row].iter_mut() {
        *v *= inv;
    }
    let prow = t[row].clone();
    for (r, other) in t.iter_mut().enumerate() {
        if r != row {
            let factor = other[col];
            if factor != 0.0 {
                for (o, &pv) in other.iter_mut().zip(&prow) {
                    *o -= factor * pv;
                }
            }
        }
    }
}

fn pivot_with_cost(t: &mut [Vec<f64>], z: &mut [f64], row: usize, col: usize) {
    pivot(t, row, col);
    let factor = z[col];
    if factor != 0.0 {
        for (zv, &pv) in z.iter_mut().zip(&t[row]) {
            *zv -= factor * pv;
        }
    }
}

fn normalize_simplex(w: &mut [f64]) {
    for v in w.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        for v in w.iter_mut() {
            *v /= s;
        }
    } else if let Some(first) = w.first_mut() {
        *first = 1.0;
    }
}

// ---------------------------------------------------------------------------
// Primal-dual (Chambolle-Pock) fallback for instances too large for the
// dense tableau. Tracks the best feasible primal value and the best
// weak-duality bound seen; the returned gap is their difference.
// ---------------------------------------------------------------------------

fn pdhg_solve(f0: &DensityFamily, f1: &DensityFamily, tol: f64) -> HullDistanceResult {
    let cells = f0.n_cells();
    let (m0, m1) = (f0.len(), f1.len());
    let mut p = vec![1.0 / m0 as f64; m0];
    let mut q = vec![1.0 / m1 as f64; m1];
    let mut u = vec![0.0; cells];

    let norm = operator_norm_estimate(f0, f1);
    let step = 0.95 / norm.max(1e-12);

    let mut best_value = primal_value(f0, f1, &p, &q);
    let mut best_w = (p.clone(), q.clone());
    let mut best_dual = 0.0f64; // u = 0 is always admissible

    let max_iter = 600;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let (pp, qq) = primal_step(f0, f1, &p, &q, &u, step);
        // dual step at the extrapolated primal point
        for (c, uc) in u.iter_mut().enumerate() {
            let mut x = 0.0;
            for (member, (&wn, &wo)) in f0.members().iter().zip(pp.iter().zip(&p)) {
                x += (2.0 * wn - wo) * member.weights()[c];
            }
            for (member, (&wn, &wo)) in f1.members().iter().zip(qq.iter().zip(&q)) {
                x -= (2.0 * wn - wo) * member.weights()[c];
            }
            *uc = (*uc + step * x).clamp(-0.5, 0.5);
        }
        p = pp;
        q = qq;
        if it % 10 == 9 || it + 1 == max_iter {
            let v = primal_value(f0, f1, &p, &q);
            if v < best_value {
                best_value = v;
                best_w = (p.clone(), q.clone());
            }
            best_dual = best_dual.max(dual_bound(f0, f1, &u));
            if best_value - best_dual <= tol {
                break;
            }
        }
    }
    HullDistanceResult {
        value: best_value,
        weights0: best_w.0,
        weights1: best_w.1,
        iterations,
        gap_bound: best_value - best_dual,
    }
}

fn primal_step(
    f0: &DensityFamily,
    f1: &DensityFamily,
    p: &[f64],
    q: &[f64],
    u: &[f64],
    step: f64,
) -> (Vec<f64>, Vec<f64>) {
    let grad0: Vec<f64> = f0
        .members()
        .iter()
        .map(|m| m.weights().iter().zip(u).map(|(&w, &uc)| w * uc).sum::<f64>())
        .collect();
    let grad1: Vec<f64> = f1
        .members()
        .iter()
        .map(|m| m.weights().iter().zip(u).map(|(&w, &uc)| w * uc).sum::<f64>())
        .collect();
    let mut pp: Vec<f64> = p.iter().zip(&grad0).map(|(&w, &g)| w - step * g).collect();
    let mut qq: Vec<f64> = q.iter().zip(&grad1).map(|(&w, &g)| w + step * g).collect();
    project_simplex(&mut pp);
    project_simplex(&mut qq);
    (pp, qq)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        acc += s;
        let candidate = (acc - 1.0) / (k + 1) as f64;
        if k + 1 == n || sorted[k + 1] <= candidate {
            if s > candidate {
                theta = candidate;
            }
            if k + 1 < n && sorted[k + 1] > candidate {
                continue;
            }
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    } else {
        v[0] = 1.0;
    }
}

fn operator_norm_estimate(f0: &DensityFamily, f1: &DensityFamily) -> f64 {
    // power iteration on K^T K with K = [F0 | -F1] acting on (p, q)
    let cells = f0.n_cells();
    let (m0, m1) = (f0.len(), f1.len());
    let mut v = vec![1.0 / ((m0 + m1) as f64).sqrt(); m0 + m1];
    let mut norm = 1.0;
    for _ in 0..25 {
        let mut x = vec![0.0; cells];
        for (i, member) in f0.members().iter().enumerate() {
            for (c, &w) in member.weights().iter().enumerate() {
                x[c] += v[i] * w;
            }
        }
        for (j, member) in f1.members().iter().enumerate() {
            for (c, &w) in member.weights().iter().enumerate() {
                x[c] -= v[m0 + j] * w;
            }
        }
        let mut next = vec![0.0; m0 + m1];
        for (i, member) in f0.members().iter().enumerate() {
            next[i] = member.weights().iter().zip(&x).map(|(&w, &xc)| w * xc).sum();
        }
        for (j, member) in f1.members().iter().enumerate() {
            next[m0 + j] = -member.weights().iter().zip(&x).map(|(&w, &xc)| w * xc).sum::<f64>();
        }
        let len = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len == 0.0 {
            return 1.0;
        }
        norm = len.sqrt();
        for (vi, ni) in v.iter_mut().zip(&next) {
            *vi = ni / len;
        }
    }
    norm
}
