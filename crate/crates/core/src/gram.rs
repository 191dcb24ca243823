//! Active sets and closed-form Gram submatrices of `XᵀX`.
//!
//! Column `j` of `X = T ⊗ T` is the indicator of the rectangle
//! `[r_j, n) × [q_j, n)`, so the inner product of two columns is the area
//! of the intersection of their rectangles:
//! `(n − max(q_a, q_b)) · (n − max(r_a, r_b))`.

use crate::error::{Error, Result};
use crate::linops::euclid;

/// Largest side length for which `n² · n²` fits in a signed 64-bit integer.
pub const MAX_SIDE: usize = 55_000;

/// Sorted set of 1-based variable indices with cached `(q, r)` decompositions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSet {
    n: usize,
    indices: Vec<usize>,
    decomp: Vec<(usize, usize)>,
}

impl ActiveSet {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            indices: Vec::new(),
            decomp: Vec::new(),
        }
    }

    /// Builds a set from arbitrary-order indices; duplicates are an error.
    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = Self::new(n);
        for j in indices {
            set.insert(j)?;
        }
        Ok(set)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices in ascending order.
    #[inline]
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `(q_j, r_j)` for each index, parallel to [`ActiveSet::indices`].
    #[inline]
    pub fn decomp(&self) -> &[(usize, usize)] {
        &self.decomp
    }

    pub fn contains(&self, j: usize) -> bool {
        self.position(j).is_some()
    }

    pub fn position(&self, j: usize) -> Option<usize> {
        self.indices.binary_search(&j).ok()
    }

    fn check_range(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n * self.n {
            return Err(Error::Index(format!(
                "variable {j} outside 1..={}",
                self.n * self.n
            )));
        }
        Ok(())
    }

    /// Inserts `j` at its sorted position and returns that position.
    pub fn insert(&mut self, j: usize) -> Result<usize> {
        self.check_range(j)?;
        match self.indices.binary_search(&j) {
            Ok(_) => Err(Error::Argument(format!("variable {j} is already in the set"))),
            Err(pos) => {
                self.indices.insert(pos, j);
                self.decomp.insert(pos, euclid(j, self.n));
                Ok(pos)
            }
        }
    }

    /// Removes `j` and returns the position it occupied.
    pub fn remove(&mut self, j: usize) -> Result<usize> {
        let pos = self
            .position(j)
            .ok_or_else(|| Error::Index(format!("variable {j} is not in the set")))?;
        self.indices.remove(pos);
        self.decomp.remove(pos);
        Ok(pos)
    }
}

#[inline]
pub(crate) fn gram_from_decomp(n: usize, (qa, ra): (usize, usize), (qb, rb): (usize, usize)) -> i64 {
    ((n - qa.max(qb)) * (n - ra.max(rb))) as i64
}

/// Exact inner product of design columns `a` and `b` (1-based).
pub fn gram_entry_exact(a: usize, b: usize, n: usize) -> Result<i64> {
    if n > MAX_SIDE {
        return Err(Error::Argument(format!(
            "side length {n} exceeds {MAX_SIDE}; Gram entries would overflow"
        )));
    }
    let n2 = n * n;
    for j in [a, b] {
        if j == 0 || j > n2 {
            return Err(Error::Index(format!("variable {j} outside 1..={n2}")));
        }
    }
    Ok(gram_from_decomp(n, euclid(a, n), euclid(b, n)))
}

/// Inner product of design columns `a` and `b`, as a float.
pub fn gram_entry(a: usize, b: usize, n: usize) -> Result<f64> {
    gram_entry_exact(a, b, n).map(|g| g as f64)
}

/// A symmetric integer matrix `(XᵀX)_{A,A}`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    order: usize,
    entries: Vec<i64>,
}

impl GramMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn exact(&self, k: usize, l: usize) -> i64 {
        self.entries[k * self.order + l]
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.exact(k, l) as f64
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// `G x`, used for residual checks.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks_exact(self.order)
            .map(|row| row.iter().zip(x).map(|(&g, &v)| g as f64 * v).sum())
            .collect()
    }
}

/// Closed-form Gram submatrix on a non-empty active set.
pub fn gram_submatrix(active: &ActiveSet) -> Result<GramMatrix> {
    if active.is_empty() {
        return Err(Error::Argument("Gram submatrix of an empty active set".into()));
    }
    if active.n() > MAX_SIDE {
        return Err(Error::Argument(format!("side length {} exceeds {MAX_SIDE}", active.n())));
    }
    let k = active.len();
    let d = active.decomp();
    let mut entries = Vec::with_capacity(k * k);
    for &a in d {
        entries.extend(d.iter().map(|&b| gram_from_decomp(active.n(), a, b)));
    }
    Ok(GramMatrix { order: k, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_column_has_norm_n_squared() {
        for n in [2, 5, 13] {
            assert_eq!(gram_entry(1, 1, n).unwrap(), (n * n) as f64);
        }
    }

    #[test]
    fn known_entry() {
        // 5 = 4·1 + 1 and 10 = 4·2 + 2.
        assert_eq!(gram_entry(6, 11, 4).unwrap(), 4.0);
        assert_eq!(gram_entry(11, 6, 4).unwrap(), 4.0);
    }

    #[test]
    fn out_of_range_is_an_index_error() {
        assert!(matches!(gram_entry(0, 1, 3), Err(Error::Index(_))));
        assert!(matches!(gram_entry(1, 10, 3), Err(Error::Index(_))));
    }

    #[test]
    fn singleton_gram() {
        let a = ActiveSet::from_indices(3, [1]).unwrap();
        assert_eq!(gram_submatrix(&a).unwrap().entries(), &[9]);
    }

    #[test]
    fn empty_set_is_rejected() {
        assert!(matches!(gram_submatrix(&ActiveSet::new(3)), Err(Error::Argument(_))));
    }

    #[test]
    fn active_set_stays_sorted() {
        let mut a = ActiveSet::new(4);
        assert_eq!(a.insert(9).unwrap(), 0);
        assert_eq!(a.insert(2).unwrap(), 0);
        assert_eq!(a.insert(16).unwrap(), 2);
        assert_eq!(a.indices(), &[2, 9, 16]);
        assert_eq!(a.decomp(), &[(0, 1), (2, 0), (3, 3)]);
        assert!(a.insert(9).is_err());
        assert!(a.insert(17).is_err());
        assert_eq!(a.remove(9).unwrap(), 1);
        assert!(matches!(a.remove(9), Err(Error::Index(_))));
    }
}
