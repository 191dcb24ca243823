//! LARS homotopy for the two-dimensional change-point LASSO.
//!
//! Solves, for every `λ` along the path,
//!
//! ```text
//! min_β ‖y − Xβ‖² + 2λ‖β‖₁,    X = T ⊗ T,
//! ```
//!
//! where `λ` is the common absolute correlation `|Xⱼᵀ(y − Xβ)|` of the
//! active variables. The factor 2 relates path values to the penalty of the
//! plain criterion `‖y − Xβ‖² + μ‖β‖₁`: a breakpoint at `λ` solves it for
//! `μ = 2λ` (see [`Breakpoint::criterion_penalty`]).
//!
//! Every product with `X` or `Xᵀ` goes through the cumulative-sum kernels of
//! [`crate::linops`], and every linear solve through the incrementally
//! maintained [`CholeskyFactor`], so an iteration costs `O(n² + K²)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::gram::{gram_from_decomp, ActiveSet};
use crate::linops::{
    design_in_place, design_transpose_in_place, euclid, unvec, vec, FlatVector, ObservationMatrix,
};

/// Relative slack for joining the equicorrelation set.
pub const EQUICORRELATION_RTOL: f64 = 1e-9;
/// Absolute slack for joining the equicorrelation set.
pub const EQUICORRELATION_ATOL: f64 = 1e-12;
/// Step-size denominators at or below this are ignored.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;
/// Correlations are recomputed from scratch every this many iterations.
pub const REFRESH_PERIOD: usize = 50;
/// Default stopping value of `λ`, relative to `λ_max`.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LarsConfig {
    /// Stop once at least this many variables are active.
    pub max_active: usize,
    /// Stop once `λ` falls to this value; `None` means `1e-10 · λ_max`.
    pub lambda_floor: Option<f64>,
    /// Iteration cap; `None` means `10 · max_active`.
    pub max_iter: Option<usize>,
}

impl LarsConfig {
    pub fn new(max_active: usize) -> Self {
        Self {
            max_active,
            lambda_floor: None,
            max_iter: None,
        }
    }

    pub fn lambda_floor(mut self, floor: f64) -> Self {
        self.lambda_floor = Some(floor);
        self
    }

    pub fn max_iter(mut self, cap: usize) -> Self {
        self.max_iter = Some(cap);
        self
    }
}

/// One recorded point of the solution path.
#[derive(Clone, Debug)]
pub struct Breakpoint {
    pub lambda: f64,
    pub active: ActiveSet,
    /// Coefficients parallel to `active.indices()`. Newly joined variables
    /// carry a zero coefficient.
    pub coeffs: Vec<f64>,
}

impl Breakpoint {
    /// Penalty `μ` of `‖y − Xβ‖² + μ‖β‖₁` that this point solves.
    pub fn criterion_penalty(&self) -> f64 {
        2.0 * self.lambda
    }

    /// `(j, β_j)` pairs with `β_j ≠ 0`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.active
            .indices()
            .iter()
            .copied()
            .zip(self.coeffs.iter().copied())
            .filter(|&(_, b)| b != 0.0)
    }

    /// The full coefficient vector in column-stacking order.
    pub fn dense_coeffs(&self) -> FlatVector {
        let n = self.active.n();
        let mut beta = FlatVector::zeros(n);
        let buf = beta.as_mut_slice();
        for (&j, &b) in self.active.indices().iter().zip(&self.coeffs) {
            buf[j - 1] = b;
        }
        beta
    }

    pub fn changepoints(&self) -> ChangePointSet {
        extract_changepoints(&self.active)
    }
}

/// The sequence of breakpoints produced by [`lars_path`].
#[derive(Clone, Debug)]
pub struct PathRecord {
    pub n: usize,
    pub max_active: usize,
    pub breakpoints: Vec<Breakpoint>,
}

impl PathRecord {
    pub fn first(&self) -> &Breakpoint {
        &self.breakpoints[0]
    }

    pub fn last(&self) -> &Breakpoint {
        self.breakpoints.last().expect("a path has at least one breakpoint")
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Breakpoint> {
        self.breakpoints.iter()
    }
}

/// Row and column boundaries, 1-based, each strictly increasing in `[2, n]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangePointSet {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl ChangePointSet {
    /// Sorts and deduplicates, then checks every position lies in `[2, n]`.
    pub fn new(n: usize, mut rows: Vec<usize>, mut cols: Vec<usize>) -> Result<Self> {
        for (name, v) in [("row", &mut rows), ("column", &mut cols)] {
            v.sort_unstable();
            v.dedup();
            if let Some(&bad) = v.iter().find(|&&t| t < 2 || t > n) {
                return Err(Error::Index(format!("{name} boundary {bad} outside 2..={n}")));
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.cols.is_empty()
    }

    pub fn axis(&self, axis: Axis) -> &[usize] {
        match axis {
            Axis::Rows => &self.rows,
            Axis::Cols => &self.cols,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rows,
    Cols,
}

/// Boundaries encoded by an active set: row `r_j + 1` and column `q_j + 1`
/// for every active `j`, with position 1 (the global offset) left out.
pub fn extract_changepoints(active: &ActiveSet) -> ChangePointSet {
    let mut rows: Vec<usize> = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    for &(q, r) in active.decomp() {
        if r > 0 {
            rows.push(r + 1);
        }
        if q > 0 {
            cols.push(q + 1);
        }
    }
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    ChangePointSet { rows, cols }
}

/// `Û = unvec(X β)` at a breakpoint. Block-wise constant on the rectangles
/// cut by the breakpoint's change-points.
pub fn fitted_means(point: &Breakpoint) -> ObservationMatrix {
    let n = point.active.n();
    let mut buf = point.dense_coeffs();
    design_in_place(buf.as_mut_slice(), n, &mut ());
    unvec(&buf, n).expect("coefficient vector has n² entries")
}

/// Residual correlations `Xᵀ(y − Xβ)` at a breakpoint.
pub fn correlations(y: &ObservationMatrix, point: &Breakpoint) -> FlatVector {
    let n = y.n();
    let mut fit = point.dense_coeffs();
    design_in_place(fit.as_mut_slice(), n, &mut ());
    let mut resid = vec(y);
    for (r, f) in resid.as_mut_slice().iter_mut().zip(fit.as_slice()) {
        *r -= f;
    }
    design_transpose_in_place(resid.as_mut_slice(), n, &mut ());
    resid
}

/// Largest deviation from the optimality conditions at `point`: active
/// variables must have `|c_j| = λ` (and `c_j` of the coefficient's sign when
/// it is nonzero), inactive ones `|c_j| ≤ λ`.
pub fn kkt_violation(y: &ObservationMatrix, point: &Breakpoint) -> f64 {
    let c = correlations(y, point);
    let c = c.as_slice();
    let lambda = point.lambda;
    let mut worst: f64 = 0.0;
    let mut is_active = vec![false; c.len()];
    for (&j, &b) in point.active.indices().iter().zip(&point.coeffs) {
        is_active[j - 1] = true;
        let cj = c[j - 1];
        let dev = if b != 0.0 {
            (cj - lambda * b.signum()).abs()
        } else {
            (cj.abs() - lambda).abs()
        };
        worst = worst.max(dev);
    }
    for (cj, _) in c.iter().zip(&is_active).filter(|(_, &a)| !a) {
        worst = worst.max(cj.abs() - lambda);
    }
    worst
}

/// Traces the LASSO path from `λ_max = ‖Xᵀy‖_∞` downwards.
///
/// Each iteration records a breakpoint after updating the active set, so
/// the first breakpoint has `λ = λ_max` and all-zero coefficients. The path
/// ends when `max_active` variables are active, `λ` reaches the floor, the
/// least-squares fit on the active set is reached, or the iteration cap
/// hits.
pub fn lars_path(y: &ObservationMatrix, cfg: &LarsConfig) -> Result<PathRecord> {
    let n = y.n();
    let n2 = n * n;
    if cfg.max_active == 0 || cfg.max_active > n2 {
        return Err(Error::Argument(format!(
            "max_active must be in 1..={n2}, got {}",
            cfg.max_active
        )));
    }
    if let Some(f) = cfg.lambda_floor {
        if f.is_nan() || f < 0.0 {
            return Err(Error::Argument(format!("lambda floor must be >= 0, got {f}")));
        }
    }

    let yv = vec(y);
    let mut c = yv.clone().into_inner();
    design_transpose_in_place(&mut c, n, &mut ());
    let lambda_max = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let floor = cfg
        .lambda_floor
        .unwrap_or(DEFAULT_RELATIVE_FLOOR * lambda_max);
    let max_iter = cfg.max_iter.unwrap_or(10 * cfg.max_active);

    let mut chol = CholeskyFactor::empty(n);
    let mut beta: Vec<f64> = Vec::new();
    let mut is_active = vec![false; n2];
    let mut work = vec![0.0; n2];
    let mut breakpoints: Vec<Breakpoint> = Vec::new();
    let mut reached_fit = false;
    let mut iter = 0usize;

    loop {
        let lambda = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

        if lambda <= floor || reached_fit {
            push_breakpoint(&mut breakpoints, lambda, chol.active(), &beta);
            break;
        }

        let thresh = lambda * (1.0 - EQUICORRELATION_RTOL) - EQUICORRELATION_ATOL;
        let entrants: Vec<usize> = (0..n2)
            .filter(|&idx| !is_active[idx] && c[idx].abs() >= thresh)
            .map(|idx| idx + 1)
            .collect();
        let held = choose_entrants(&mut chol, &entrants, &c)?;
        for &j in &entrants {
            if chol.active().contains(j) {
                let pos = chol.active().position(j).expect("entrant was just added");
                beta.insert(pos, 0.0);
                is_active[j - 1] = true;
            }
        }

        push_breakpoint(&mut breakpoints, lambda, chol.active(), &beta);
        if chol.order() >= cfg.max_active || iter >= max_iter {
            break;
        }
        if chol.order() == 0 {
            return Err(Error::Consistency("no variable attains the maximal correlation".into()));
        }

        // Equiangular direction.
        let signs: Vec<f64> = chol
            .active()
            .indices()
            .iter()
            .map(|&j| c[j - 1].signum())
            .collect();
        let w_tilde = chol.solve(&signs)?;
        let denom: f64 = w_tilde.iter().zip(&signs).map(|(a, b)| a * b).sum();
        if !denom.is_finite() || denom <= 0.0 {
            return Err(Error::Consistency(format!(
                "direction normalisation {denom:e} is not positive"
            )));
        }
        let alpha = denom.sqrt().recip();
        let w: Vec<f64> = w_tilde.iter().map(|x| alpha * x).collect();

        // a = Xᵀ X_A w.
        work.fill(0.0);
        for (&j, &wk) in chol.active().indices().iter().zip(&w) {
            work[j - 1] = wk;
        }
        design_in_place(&mut work, n, &mut ());
        design_transpose_in_place(&mut work, n, &mut ());
        let a = &work;

        let mut gamma_in = f64::INFINITY;
        for idx in 0..n2 {
            if is_active[idx] {
                continue;
            }
            let (cj, aj) = (c[idx], a[idx]);
            // A tied variable held at zero moves away from its own bound.
            let skip_side = held.binary_search(&(idx + 1)).ok().map(|_| cj > 0.0);
            for (side, num, den) in [(true, lambda - cj, alpha - aj), (false, lambda + cj, alpha + aj)] {
                if skip_side == Some(side) {
                    continue;
                }
                if den > DENOMINATOR_FLOOR {
                    let g = num / den;
                    if g > 0.0 && g < gamma_in {
                        gamma_in = g;
                    }
                }
            }
        }

        let crossing: Vec<f64> = beta
            .iter()
            .zip(&w)
            .map(|(b, wk)| {
                let g = -b / wk;
                if wk.abs() > DENOMINATOR_FLOOR && g > 0.0 && g.is_finite() {
                    g
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let gamma_out = crossing.iter().copied().fold(f64::INFINITY, f64::min);

        // Step that drives every correlation to zero: the least-squares fit.
        let gamma_fit = lambda / alpha;
        let gamma = gamma_in.min(gamma_out).min(gamma_fit);

        for (ci, ai) in c.iter_mut().zip(a.iter()) {
            *ci -= gamma * ai;
        }
        for (b, wk) in beta.iter_mut().zip(&w) {
            *b += gamma * wk;
        }

        if gamma_out < gamma_in && gamma_out < gamma_fit {
            // Every coefficient reaching zero at this step leaves together.
            let leaving: Vec<usize> = chol
                .active()
                .indices()
                .iter()
                .zip(&crossing)
                .filter(|(_, &g)| (g - gamma_out).abs() <= 1e-9 * gamma_out)
                .map(|(&j, _)| j)
                .collect();
            for &j in &leaving {
                let pos = chol.downdate(j)?;
                beta.remove(pos);
                is_active[j - 1] = false;
            }
        } else if gamma_fit <= gamma_in.min(gamma_out) {
            reached_fit = true;
        }

        iter += 1;
        if iter.is_multiple_of(REFRESH_PERIOD) {
            refresh_correlations(&yv, n, chol.active(), &beta, &mut c, &mut work);
        }
    }

    Ok(PathRecord {
        n,
        max_active: cfg.max_active,
        breakpoints,
    })
}

/// Tolerance on the optimality test of [`choose_entrants`].
const TIE_TOL: f64 = 1e-9;

/// Decides which of the tied `entrants` join the factor.
///
/// With a single entrant this always admits it. When several variables are
/// tied, admitting all of them can yield a direction in which some new
/// coefficient moves against the sign of its correlation. The admitted
/// subset `P` is the one whose direction `w = G_PP⁻¹ s_P` satisfies
/// `s_j w_j > 0` for every admitted entrant and `s_j (G w)_j ≥ 1` for every
/// entrant held at zero, found by an active-set iteration in the manner of
/// Lawson and Hanson. Returns the held entrants, sorted.
fn choose_entrants(chol: &mut CholeskyFactor, entrants: &[usize], c: &[f64]) -> Result<Vec<usize>> {
    if entrants.is_empty() {
        return Ok(Vec::new());
    }
    let n = chol.active().n();
    let sign = |j: usize| c[j - 1].signum();
    let solve = |chol: &CholeskyFactor| -> Result<HashMap<usize, f64>> {
        let s: Vec<f64> = chol.active().indices().iter().map(|&j| sign(j)).collect();
        let w = chol.solve(&s)?;
        Ok(chol.active().indices().iter().copied().zip(w).collect())
    };
    let mut w_old = solve(chol)?;

    for _ in 0..4 * entrants.len() + 8 {
        let mut worst: Option<(usize, f64)> = None;
        for &j in entrants {
            if chol.active().contains(j) {
                continue;
            }
            let dj = euclid(j, n);
            let gw: f64 = chol
                .active()
                .indices()
                .iter()
                .zip(chol.active().decomp())
                .map(|(k, &dk)| gram_from_decomp(n, dk, dj) as f64 * w_old[k])
                .sum();
            let nu = sign(j) * gw - 1.0;
            if nu < -TIE_TOL && worst.is_none_or(|(_, v)| nu < v) {
                worst = Some((j, nu));
            }
        }
        let Some((j, _)) = worst else {
            return Ok(entrants
                .iter()
                .copied()
                .filter(|&j| !chol.active().contains(j))
                .collect());
        };
        chol.extend(j)?;

        loop {
            let z = solve(chol)?;
            let eps = 1e-12 * z.values().fold(0.0_f64, |m, x| m.max(x.abs()));
            let mut step = 1.0_f64;
            let mut blocking = None;
            for &e in entrants.iter().filter(|&&e| chol.active().contains(e)) {
                let zs = sign(e) * z[&e];
                if zs > eps {
                    continue;
                }
                let ws = sign(e) * w_old.get(&e).copied().unwrap_or(0.0);
                let t = if ws - zs > 0.0 { ws / (ws - zs) } else { 0.0 };
                if blocking.is_none() || t < step {
                    step = t.min(step);
                    blocking = Some(e);
                }
            }
            let Some(blocking) = blocking else {
                w_old = z;
                break;
            };
            let w: HashMap<usize, f64> = z
                .iter()
                .map(|(&k, &zk)| {
                    let wk = w_old.get(&k).copied().unwrap_or(0.0);
                    (k, wk + step * (zk - wk))
                })
                .collect();
            let leaving: Vec<usize> = entrants
                .iter()
                .copied()
                .filter(|&e| chol.active().contains(e) && (e == blocking || sign(e) * w[&e] <= eps))
                .collect();
            for e in leaving {
                chol.downdate(e)?;
            }
            w_old = w.into_iter().filter(|(k, _)| chol.active().contains(*k)).collect();
        }
    }
    Err(Error::Consistency(format!(
        "could not resolve a tie among {} variables",
        entrants.len()
    )))
}

fn push_breakpoint(out: &mut Vec<Breakpoint>, lambda: f64, active: &ActiveSet, beta: &[f64]) {
    let point = Breakpoint {
        lambda,
        active: active.clone(),
        coeffs: beta.to_vec(),
    };
    // A zero-length step leaves λ unchanged; keep λ strictly decreasing.
    match out.last_mut() {
        Some(last) if last.lambda <= lambda => *last = point,
        _ => out.push(point),
    }
}

fn refresh_correlations(
    yv: &FlatVector,
    n: usize,
    active: &ActiveSet,
    beta: &[f64],
    c: &mut [f64],
    work: &mut [f64],
) {
    work.fill(0.0);
    for (&j, &b) in active.indices().iter().zip(beta) {
        work[j - 1] = b;
    }
    design_in_place(work, n, &mut ());
    for ((ci, &yi), &fi) in c.iter_mut().zip(yv.as_slice()).zip(work.iter()) {
        *ci = yi - fi;
    }
    design_transpose_in_place(c, n, &mut ());
}

/// Convenience wrapper around [`lars_path`] with the default floor.
pub fn lars_path_s(y: &ObservationMatrix, max_active: usize) -> Result<PathRecord> {
    lars_path(y, &LarsConfig::new(max_active))
}

/// The `(q, r)` cell of a variable as 1-based `(row, col)` positions.
pub fn variable_position(j: usize, n: usize) -> (usize, usize) {
    let (q, r) = euclid(j, n);
    (r + 1, q + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_single_breakpoint() {
        let y = ObservationMatrix::zeros(4).unwrap();
        let path = lars_path_s(&y, 5).unwrap();
        assert_eq!(path.len(), 1);
        let bp = path.first();
        assert_eq!(bp.lambda, 0.0);
        assert!(bp.active.is_empty());
        assert_eq!(bp.nonzero().count(), 0);
    }

    #[test]
    fn constant_matrix_uses_only_the_offset() {
        let c = 1.5;
        let y = ObservationMatrix::new(2, vec![c; 4]).unwrap();
        let path = lars_path_s(&y, 4).unwrap();
        assert_eq!(path.first().lambda, 4.0 * c);
        assert_eq!(path.first().active.indices(), &[1]);
        for bp in path.iter() {
            assert_eq!(bp.active.indices(), &[1]);
        }
        let last = path.last();
        assert!((last.coeffs[0] - c).abs() < 1e-12);
        assert!(last.lambda <= 1e-10 * 4.0 * c);
    }

    #[test]
    fn constant_matrix_follows_oracle_between_breakpoints() {
        let c = 1.5;
        let y = ObservationMatrix::new(2, vec![c; 4]).unwrap();
        let path = lars_path_s(&y, 4).unwrap();
        let design = crate::oracle::materialize_design(2).unwrap();
        let yv = vec(&y);
        let (hi, lo) = (path.first(), path.last());
        for k in 0..=10 {
            let lambda = 4.0 * c * k as f64 / 10.0;
            let t = (hi.lambda - lambda) / (hi.lambda - lo.lambda);
            let ours = t * lo.coeffs[0];
            let oracle = crate::oracle::lasso_oracle(&design, &yv, 2.0 * lambda).unwrap();
            assert!((ours - oracle.as_slice()[0]).abs() < 1e-9, "λ = {lambda}");
            assert!(oracle.as_slice()[1..].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn changepoint_extraction() {
        let a = ActiveSet::from_indices(10, [34]).unwrap();
        let cp = extract_changepoints(&a);
        assert_eq!((cp.rows.as_slice(), cp.cols.as_slice()), (&[4][..], &[4][..]));

        let a = ActiveSet::from_indices(10, [1]).unwrap();
        assert!(extract_changepoints(&a).is_empty());

        let a = ActiveSet::from_indices(10, [2, 12]).unwrap();
        let cp = extract_changepoints(&a);
        assert_eq!(cp.rows, vec![2]);
        assert_eq!(cp.cols, vec![2]);
    }

    #[test]
    fn fitted_means_of_offset_is_constant() {
        let bp = Breakpoint {
            lambda: 1.0,
            active: ActiveSet::from_indices(3, [1]).unwrap(),
            coeffs: vec![2.5],
        };
        assert!(fitted_means(&bp).as_slice().iter().all(|&x| x == 2.5));
        let zero = Breakpoint {
            lambda: 1.0,
            active: ActiveSet::new(3),
            coeffs: vec![],
        };
        assert!(fitted_means(&zero).as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn changepoint_set_validation() {
        let cp = ChangePointSet::new(10, vec![5, 3, 5], vec![]).unwrap();
        assert_eq!(cp.rows, vec![3, 5]);
        assert!(ChangePointSet::new(10, vec![1], vec![]).is_err());
        assert!(ChangePointSet::new(10, vec![], vec![11]).is_err());
    }

    #[test]
    fn rejects_bad_budget() {
        let y = ObservationMatrix::zeros(3).unwrap();
        assert!(lars_path_s(&y, 0).is_err());
        assert!(lars_path_s(&y, 10).is_err());
    }
}
