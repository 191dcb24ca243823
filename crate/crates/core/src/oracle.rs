//! Slow reference implementations for cross-checking the fast paths.
//!
//! Everything here works on the materialised `n² × n²` design and is
//! limited to `n ≤ 32`. Nothing in this module calls into the cumulative-sum
//! kernels or the incremental Cholesky factor.

use crate::error::{Error, Result};
use crate::linops::FlatVector;

/// Largest side length the oracle will materialise.
pub const MAX_ORACLE_SIDE: usize = 32;

/// Explicit `T ⊗ T`, row-major, entries 0 or 1.
#[derive(Clone, Debug)]
pub struct DenseDesign {
    n: usize,
    data: Vec<f64>,
}

/// Materialises `T ⊗ T` by literally forming the Kronecker product.
pub fn materialize_design(n: usize) -> Result<DenseDesign> {
    if n == 0 || n > MAX_ORACLE_SIDE {
        return Err(Error::Argument(format!(
            "dense design limited to 1..={MAX_ORACLE_SIDE}, got n = {n}"
        )));
    }
    let t = |i: usize, j: usize| if j <= i { 1.0 } else { 0.0 };
    let big = n * n;
    let mut data = vec![0.0; big * big];
    // (A ⊗ B)[(i1·n + i2), (j1·n + j2)] = A[i1][j1] · B[i2][j2]
    for i1 in 0..n {
        for i2 in 0..n {
            let row = i1 * n + i2;
            for j1 in 0..n {
                for j2 in 0..n {
                    data[row * big + j1 * n + j2] = t(i1, j1) * t(i2, j2);
                }
            }
        }
    }
    Ok(DenseDesign { n, data })
}

impl DenseDesign {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of rows (and columns): `n²`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim() + col]
    }

    /// Column of 1-based variable `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, j - 1)).collect()
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim())
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_transpose(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (row, &vi) in self.data.chunks_exact(d).zip(v) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x * vi;
            }
        }
        out
    }

    /// Exact `(XᵀX)_{A,A}` by column inner products; `indices` are 1-based.
    pub fn gram(&self, indices: &[usize]) -> Vec<i64> {
        let cols: Vec<Vec<f64>> = indices.iter().map(|&j| self.column(j)).collect();
        let mut out = Vec::with_capacity(indices.len() * indices.len());
        for a in &cols {
            for b in &cols {
                out.push(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() as i64);
            }
        }
        out
    }
}

/// Textbook Cholesky of a dense symmetric matrix, row-major in and out.
pub fn dense_cholesky(a: &[f64], k: usize) -> Result<Vec<f64>> {
    if a.len() != k * k {
        return Err(Error::Dimension(format!("expected {} entries, got {}", k * k, a.len())));
    }
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|m| l[i * k + m] * l[j * k + m]).sum();
            if i == j {
                let d = a[i * k + i] - s;
                if d <= 0.0 {
                    return Err(Error::Oracle(format!("matrix not positive definite at pivot {i}")));
                }
                l[i * k + i] = d.sqrt();
            } else {
                l[i * k + j] = (a[i * k + j] - s) / l[j * k + j];
            }
        }
    }
    Ok(l)
}

fn dense_spd_solve(a: &[f64], k: usize, b: &[f64]) -> Result<Vec<f64>> {
    let l = dense_cholesky(a, k)?;
    let mut x = b.to_vec();
    for i in 0..k {
        let s: f64 = (0..i).map(|m| l[i * k + m] * x[m]).sum();
        x[i] = (x[i] - s) / l[i * k + i];
    }
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|m| l[m * k + i] * x[m]).sum();
        x[i] = (x[i] - s) / l[i * k + i];
    }
    Ok(x)
}

/// Duality-gap target for [`lasso_oracle`].
pub const ORACLE_GAP_TOL: f64 = 1e-9;
/// Sweep cap for [`lasso_oracle`].
pub const ORACLE_MAX_SWEEPS: usize = 1_000_000;

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Primal objective `‖y − Xβ‖² + λ‖β‖₁` and duality gap at `beta`.
pub fn objective_and_gap(design: &DenseDesign, y: &[f64], lambda: f64, beta: &[f64]) -> (f64, f64) {
    let fit = design.mul(beta);
    let resid: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let primal = rss + lambda * l1;
    // Dual: max 2θᵀy − ‖θ‖² subject to ‖Xᵀθ‖_∞ ≤ λ/2.
    let corr = design.mul_transpose(&resid);
    let cmax = corr.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let scale = if cmax > 0.0 { (lambda / (2.0 * cmax)).min(1.0) } else { 1.0 };
    let dual: f64 = resid
        .iter()
        .zip(y)
        .map(|(r, yi)| {
            let th = scale * r;
            2.0 * th * yi - th * th
        })
        .sum();
    (primal, primal - dual)
}

/// Minimiser of `‖y − Xβ‖² + λ‖β‖₁` by cyclic coordinate descent on the
/// materialised design, run until the duality gap is at most
/// [`ORACLE_GAP_TOL`].
///
/// Once converged, the solution is polished by solving the optimality
/// equations on its support with the signs it found; the polished point is
/// kept only if it satisfies every optimality condition.
pub fn lasso_oracle(design: &DenseDesign, y: &FlatVector, lambda: f64) -> Result<FlatVector> {
    lasso_oracle_from(design, y, lambda, None)
}

/// [`lasso_oracle`] with an optional warm start.
pub fn lasso_oracle_from(
    design: &DenseDesign,
    y: &FlatVector,
    lambda: f64,
    warm: Option<&[f64]>,
) -> Result<FlatVector> {
    let d = design.dim();
    if y.len() != d {
        return Err(Error::Dimension(format!("y has length {}, design has {d} rows", y.len())));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Argument(format!("lambda must be >= 0, got {lambda}")));
    }
    let y = y.as_slice();

    // Covariance form: gradient of ‖y − Xβ‖²/2 is Gβ − Xᵀy.
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let g: f64 = (0..d).map(|r| design.get(r, i) * design.get(r, j)).sum();
            gram[i * d + j] = g;
            gram[j * d + i] = g;
        }
    }
    let xty = design.mul_transpose(y);
    let mut beta = match warm {
        Some(w) if w.len() == d => w.to_vec(),
        _ => vec![0.0; d],
    };
    // corr = Xᵀy − Gβ
    let mut corr: Vec<f64> = (0..d)
        .map(|i| xty[i] - (0..d).map(|k| gram[i * d + k] * beta[k]).sum::<f64>())
        .collect();
    let half = lambda / 2.0;

    let mut converged = false;
    for sweep in 0..ORACLE_MAX_SWEEPS {
        for j in 0..d {
            let gjj = gram[j * d + j];
            let old = beta[j];
            let new = soft_threshold(corr[j] + gjj * old, half) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                let row = &gram[j * d..(j + 1) * d];
                for (c, g) in corr.iter_mut().zip(row) {
                    *c -= g * delta;
                }
            }
        }
        if sweep % 16 == 15 {
            let (_, gap) = objective_and_gap(design, y, lambda, &beta);
            if gap <= ORACLE_GAP_TOL {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Oracle(format!(
            "coordinate descent did not reach gap {ORACLE_GAP_TOL:e} in {ORACLE_MAX_SWEEPS} sweeps"
        )));
    }

    if let Some(polished) = polish(&gram, &xty, d, half, &beta) {
        beta = polished;
    }
    FlatVector::new(beta)
}

// Solves G_SS β_S = (Xᵀy)_S − (λ/2)·sign on the support S of `beta` and
// accepts the result only if it keeps the signs and satisfies the
// inactive-variable bound.
fn polish(gram: &[f64], xty: &[f64], d: usize, half: f64, beta: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..d).filter(|&j| beta[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let k = support.len();
    let mut sub = vec![0.0; k * k];
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            sub[a * k + b] = gram[i * d + j];
        }
    }
    let rhs: Vec<f64> = support
        .iter()
        .map(|&j| xty[j] - half * beta[j].signum())
        .collect();
    let sol = dense_spd_solve(&sub, k, &rhs).ok()?;
    let mut out = vec![0.0; d];
    for (&j, &v) in support.iter().zip(&sol) {
        if v.signum() != beta[j].signum() {
            return None;
        }
        out[j] = v;
    }
    let scale = xty.iter().fold(half, |m, x| m.max(x.abs()));
    for j in 0..d {
        if out[j] == 0.0 {
            let c = xty[j] - (0..d).map(|k| gram[j * d + k] * out[k]).sum::<f64>();
            if c.abs() > half + 1e-10 * scale {
                return None;
            }
        }
    }
    Some(out)
}
