//! Cholesky factor of `(XᵀX)_{A,A}` maintained under insertions and
//! deletions of active variables.
//!
//! The factor is kept in the sorted order of the active set. Insertion
//! appends the new variable (one triangular solve) and then rotates its row
//! into place; deletion removes a row and restores the triangular shape with
//! Givens rotations. Both cost `O(K²)` at worst.

use crate::error::{Error, Result};
use crate::gram::{gram_from_decomp, ActiveSet};
use crate::linops::euclid;

/// Pivots at or below this value abort the update.
pub const PIVOT_FLOOR: f64 = 1e-10;

/// Lower-triangular `L` with `L Lᵀ = (XᵀX)_{A,A}` and positive diagonal.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    active: ActiveSet,
    // Row i holds L[i][0..=i].
    rows: Vec<Vec<f64>>,
}

impl CholeskyFactor {
    /// The factor of the empty set on an `n × n` problem.
    pub fn empty(n: usize) -> Self {
        Self {
            active: ActiveSet::new(n),
            rows: Vec::new(),
        }
    }

    /// Factor of `active`, built by successive extensions.
    pub fn for_set(active: &ActiveSet) -> Result<Self> {
        let mut f = Self::empty(active.n());
        for &j in active.indices() {
            f.extend(j)?;
        }
        Ok(f)
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    /// Row `i` of `L`, up to and including the diagonal.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Dense row-major copy of `L`.
    pub fn to_dense(&self) -> Vec<f64> {
        let k = self.order();
        let mut out = vec![0.0; k * k];
        for (i, row) in self.rows.iter().enumerate() {
            out[i * k..i * k + row.len()].copy_from_slice(row);
        }
        out
    }

    /// Dense row-major `L Lᵀ`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let k = self.order();
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let v: f64 = self.rows[i][..=j]
                    .iter()
                    .zip(&self.rows[j][..=j])
                    .map(|(a, b)| a * b)
                    .sum();
                out[i * k + j] = v;
                out[j * k + i] = v;
            }
        }
        out
    }

    /// Adds variable `j` and returns its position in the factor.
    pub fn extend(&mut self, j: usize) -> Result<usize> {
        if self.active.contains(j) {
            return Err(Error::Argument(format!("variable {j} is already active")));
        }
        let n = self.active.n();
        if j == 0 || j > n * n {
            return Err(Error::Index(format!("variable {j} outside 1..={}", n * n)));
        }
        let dj = euclid(j, n);
        let k = self.order();

        // Solve L l = g, g the Gram column of j against the current set.
        let mut row: Vec<f64> = self
            .active
            .decomp()
            .iter()
            .map(|&d| gram_from_decomp(n, d, dj) as f64)
            .collect();
        for i in 0..k {
            let li = &self.rows[i];
            let s: f64 = li[..i].iter().zip(&row[..i]).map(|(a, b)| a * b).sum();
            row[i] = (row[i] - s) / li[i];
        }
        let pivot_sq = gram_from_decomp(n, dj, dj) as f64 - row.iter().map(|x| x * x).sum::<f64>();
        let pivot = if pivot_sq > 0.0 { pivot_sq.sqrt() } else { 0.0 };
        if pivot <= PIVOT_FLOOR {
            return Err(Error::Consistency(format!(
                "Cholesky pivot {pivot:e} for variable {j} is below {PIVOT_FLOOR:e}"
            )));
        }
        row.push(pivot);

        let p = self.active.insert(j)?;
        if p == k {
            self.rows.push(row);
            return Ok(p);
        }

        // Move the appended row to position p. Rows below it gain a slot
        // for their new diagonal, then rotations on column pairs (c, c+1)
        // sweep the new row's trailing entries into column p.
        for r in &mut self.rows[p..] {
            r.push(0.0);
        }
        self.rows.insert(p, row);
        for c in (p..k).rev() {
            let a = self.rows[p][c];
            let b = self.rows[p][c + 1];
            let h = a.hypot(b);
            if h == 0.0 {
                continue;
            }
            let (cs, sn) = (a / h, b / h);
            self.rows[p][c] = h;
            self.rows[p][c + 1] = 0.0;
            for r in &mut self.rows[c + 1..] {
                let (x, y) = (r[c], r[c + 1]);
                r[c] = cs * x + sn * y;
                r[c + 1] = -sn * x + cs * y;
            }
        }
        self.rows[p].truncate(p + 1);
        self.fix_signs(p);
        Ok(p)
    }

    /// Removes variable `j` and returns the position it occupied.
    pub fn downdate(&mut self, j: usize) -> Result<usize> {
        let p = self.active.remove(j)?;
        self.rows.remove(p);
        // Rows p.. now extend one column past their diagonal.
        let k = self.order();
        for c in p..k {
            let a = self.rows[c][c];
            let b = self.rows[c][c + 1];
            let h = a.hypot(b);
            if h == 0.0 {
                return Err(Error::Consistency(format!(
                    "zero column encountered while removing variable {j}"
                )));
            }
            let (cs, sn) = (a / h, b / h);
            self.rows[c][c] = h;
            self.rows[c][c + 1] = 0.0;
            for r in &mut self.rows[c + 1..] {
                let (x, y) = (r[c], r[c + 1]);
                r[c] = cs * x + sn * y;
                r[c + 1] = -sn * x + cs * y;
            }
            self.rows[c].truncate(c + 1);
        }
        self.fix_signs(p);
        Ok(p)
    }

    // Flips columns whose diagonal went negative; L Lᵀ is unchanged.
    fn fix_signs(&mut self, from: usize) {
        for c in from..self.order() {
            if self.rows[c][c] < 0.0 {
                for r in &mut self.rows[c..] {
                    r[c] = -r[c];
                }
            }
        }
    }

    /// Solves `(XᵀX)_{A,A} x = rhs` by forward and backward substitution.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let k = self.order();
        if rhs.len() != k {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, factor has order {k}",
                rhs.len()
            )));
        }
        let mut x = rhs.to_vec();
        for i in 0..k {
            let li = &self.rows[i];
            let s: f64 = li[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / li[i];
        }
        for i in (0..k).rev() {
            let li = &self.rows[i];
            x[i] /= li[i];
            let xi = x[i];
            for (xk, l) in x[..i].iter_mut().zip(&li[..i]) {
                *xk -= l * xi;
            }
        }
        Ok(x)
    }
}
