//! Matrix-free application of the design `X = T ⊗ T`.
//!
//! `T` is the `n × n` lower-triangular matrix of ones, so for `V = unvec(v)`
//! the products `Xv = Vec(T V Tᵀ)` and `Xᵀv = Vec(Tᵀ V T)` are two passes of
//! cumulative sums over an `n × n` array. Neither product ever allocates the
//! `n² × n²` design.
//!
//! Flat vectors use column stacking: flat index `q·n + r` (0-based) holds
//! the matrix cell at row `r`, column `q`. In 1-based variable terms,
//! `j − 1 = n·q_j + r_j` maps `j` to cell `(r_j + 1, q_j + 1)`.

use crate::error::{Error, Result};

/// A dense square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ObservationMatrix {
    /// Builds a matrix from row-major data, rejecting non-square shapes,
    /// `n < 2` and non-finite entries.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("matrix side must be at least 2, got {n}")));
        }
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at row {}, column {}",
                pos / n + 1,
                pos % n + 1
            )));
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n * n])
    }

    /// `f(i, j)` receives 0-based row and column indices.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::new(n, data)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at 0-based `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// The submatrix on the given 0-based rows and columns, in the order given.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::Dimension(format!(
                "square submatrix needs as many rows as columns ({} vs {})",
                rows.len(),
                cols.len()
            )));
        }
        if let Some(&bad) = rows.iter().chain(cols).find(|&&k| k >= self.n) {
            return Err(Error::Index(format!("{bad} is outside 0..{}", self.n)));
        }
        let m = rows.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in rows {
            data.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        Self::new(m, data)
    }
}

/// A length-`n²` vector in column-stacking order.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatVector {
    n: usize,
    values: Vec<f64>,
}

impl FlatVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = side_length(values.len())?;
        Ok(Self { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    /// Side length `n` of the underlying square.
    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &FlatVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

fn side_length(len: usize) -> Result<usize> {
    let n = (len as f64).sqrt().round() as usize;
    if n == 0 || n * n != len {
        return Err(Error::Dimension(format!("length {len} is not a positive perfect square")));
    }
    Ok(n)
}

/// Euclidean decomposition of a 1-based variable index: returns `(q, r)`
/// with `j − 1 = n·q + r`. Row position is `r + 1`, column position `q + 1`.
#[inline]
pub fn euclid(j: usize, n: usize) -> (usize, usize) {
    debug_assert!(j >= 1);
    ((j - 1) / n, (j - 1) % n)
}

/// Column-stacks a matrix.
pub fn vec(m: &ObservationMatrix) -> FlatVector {
    let n = m.n();
    let mut values = vec![0.0; n * n];
    for (r, row) in m.rows().enumerate() {
        for (q, &x) in row.iter().enumerate() {
            values[q * n + r] = x;
        }
    }
    FlatVector { n, values }
}

/// Inverse of [`vec`].
pub fn unvec(v: &FlatVector, n: usize) -> Result<ObservationMatrix> {
    if v.len() != n * n {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be reshaped to {n}x{n}",
            v.len()
        )));
    }
    ObservationMatrix::from_fn(n, |r, q| v.values[q * n + r])
}

/// Receives the number of scalar additions performed by a kernel.
pub trait AddCounter {
    fn count(&mut self, additions: usize);
}

impl AddCounter for () {
    #[inline(always)]
    fn count(&mut self, _: usize) {}
}

/// Tallies scalar additions; used to check the `2n²` operation bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter(pub usize);

impl AddCounter for OpCounter {
    fn count(&mut self, additions: usize) {
        self.0 += additions;
    }
}

/// In place `buf ← Vec(T V Tᵀ)` where `V = unvec(buf)`.
pub fn design_in_place<C: AddCounter>(buf: &mut [f64], n: usize, counter: &mut C) {
    debug_assert_eq!(buf.len(), n * n);
    // T·V: prefix sums down each column.
    for col in buf.chunks_exact_mut(n) {
        for r in 1..n {
            col[r] += col[r - 1];
        }
        counter.count(n - 1);
    }
    // (T·V)·Tᵀ: prefix sums along each row, i.e. across columns.
    for q in 1..n {
        let (done, rest) = buf.split_at_mut(q * n);
        let prev = &done[(q - 1) * n..];
        for (x, p) in rest[..n].iter_mut().zip(prev) {
            *x += p;
        }
        counter.count(n);
    }
}

/// In place `buf ← Vec(Tᵀ V T)`: entry `(r, q)` becomes the sum of `V`
/// over the suffix rectangle `[r, n) × [q, n)`.
pub fn design_transpose_in_place<C: AddCounter>(buf: &mut [f64], n: usize, counter: &mut C) {
    debug_assert_eq!(buf.len(), n * n);
    for col in buf.chunks_exact_mut(n) {
        for r in (0..n - 1).rev() {
            col[r] += col[r + 1];
        }
        counter.count(n - 1);
    }
    for q in (0..n - 1).rev() {
        let (head, tail) = buf.split_at_mut((q + 1) * n);
        let next = &tail[..n];
        for (x, nx) in head[q * n..].iter_mut().zip(next) {
            *x += nx;
        }
        counter.count(n);
    }
}

fn check_operand(v: &FlatVector) -> Result<usize> {
    let n = v.side();
    if n < 2 {
        return Err(Error::Dimension(format!("design operand needs n >= 2, got n = {n}")));
    }
    Ok(n)
}

/// `X v` with `X = T ⊗ T`.
pub fn apply_design(v: &FlatVector) -> Result<FlatVector> {
    let n = check_operand(v)?;
    let mut out = v.clone();
    design_in_place(&mut out.values, n, &mut ());
    Ok(out)
}

/// `Xᵀ v` with `X = T ⊗ T`.
pub fn apply_design_transpose(v: &FlatVector) -> Result<FlatVector> {
    let n = check_operand(v)?;
    let mut out = v.clone();
    design_transpose_in_place(&mut out.values, n, &mut ());
    Ok(out)
}
