//! Dense small-dimension linear algebra: runtime-sized real vectors and
//! matrices, determinants, column deletion and the generalized cross product.
//!
//! Dimensions are runtime values because the ambient dimension n and the
//! manifold dimension m vary per scenario; everything here stays at most
//! (n+m-1) x (n+m), so no sparse or blocked formats are needed.

use std::ops::Index;

use crate::{Error, Result, Scalar};

/// Immutable vector in R^d with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> RealVector<T> {
    /// Build a vector, rejecting empty or non-finite input.
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch(
                "vector must have at least one entry".into(),
            ));
        }
        if let Some(bad) = entries.iter().position(|e| !e.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "non-finite vector entry at position {bad}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![T::zero(); dim],
        }
    }

    /// Standard basis vector e_j (0-based).
    pub fn basis(dim: usize, j: usize) -> Result<Self> {
        if j >= dim {
            return Err(Error::IndexOutOfRange(format!(
                "basis index {j} for dimension {dim}"
            )));
        }
        let mut v = Self::zeros(dim);
        v.entries[j] = T::one();
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.entries.iter()
    }

    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "dot of mismatched dims");
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            entries: self.entries.iter().map(|e| *e * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "add of mismatched dims");
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sub of mismatched dims");
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    /// Euclidean distance to another vector of the same dimension.
    pub fn distance(&self, other: &Self) -> T {
        self.sub(other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }

    /// Internal constructor for values produced by arithmetic on already
    /// validated inputs; skips the finiteness scan.
    pub(crate) fn from_raw(entries: Vec<T>) -> Self {
        Self { entries }
    }
}

impl<T: Scalar> Index<usize> for RealVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.entries[i]
    }
}

impl<'a, T: Scalar> IntoIterator for &'a RealVector<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> RealMatrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "matrix dimensions must be positive".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().position(|e| !e.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "non-finite matrix entry at flat position {bad}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Stack vectors of equal dimension as matrix rows.
    pub fn from_rows(rows: &[RealVector<T>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::DimensionMismatch(
                "cannot stack an empty set of rows".into(),
            ));
        };
        let cols = first.dim();
        if let Some(bad) = rows.iter().position(|r| r.dim() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has dim {} but row 0 has dim {cols}",
                rows[bad].dim()
            )));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.as_slice().iter().copied())
            .collect();
        Ok(Self {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = T::one();
        }
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![T::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> RealVector<T> {
        assert!(i < self.rows, "row index out of range");
        RealVector::from_raw(self.entries[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    /// Copy with column `j` (0-based) removed, order preserved.
    pub fn delete_column(&self, j: usize) -> Result<Self> {
        if j >= self.cols {
            return Err(Error::IndexOutOfRange(format!(
                "cannot delete column {j} of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if self.cols == 1 {
            return Err(Error::DimensionMismatch(
                "deleting the only column would leave an empty matrix".into(),
            ));
        }
        let mut entries = Vec::with_capacity(self.rows * (self.cols - 1));
        for i in 0..self.rows {
            for c in 0..self.cols {
                if c != j {
                    entries.push(self.entries[i * self.cols + c]);
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols - 1,
            entries,
        })
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] =
                        out.entries[i * other.cols + j] + a * other.entries[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &RealVector<T>) -> Result<RealVector<T>> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} matrix to a vector of dim {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let mut out = vec![T::zero(); self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc = acc + self.entries[i * self.cols + j] * v[j];
            }
            *slot = acc;
        }
        Ok(RealVector::from_raw(out))
    }

    /// Determinant of a square matrix.
    ///
    /// Dimensions up to 3 use the direct cofactor formulas (exact for the
    /// small-dim test oracles); larger matrices go through LU elimination
    /// with partial pivoting and sign tracking.
    pub fn determinant(&self) -> Result<T> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let e = &self.entries;
        Ok(match n {
            1 => e[0],
            2 => e[0] * e[3] - e[1] * e[2],
            3 => {
                e[0] * (e[4] * e[8] - e[5] * e[7]) - e[1] * (e[3] * e[8] - e[5] * e[6])
                    + e[2] * (e[3] * e[7] - e[4] * e[6])
            }
            _ => self.lu_determinant(),
        })
    }

    fn lu_determinant(&self) -> T {
        let n = self.rows;
        let mut a = self.entries.clone();
        let mut det = T::one();
        for k in 0..n {
            // Partial pivot: largest magnitude in column k at/below the diagonal.
            let mut pivot_row = k;
            let mut pivot_mag = a[k * n + k].abs();
            for i in k + 1..n {
                let mag = a[i * n + k].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_mag == T::zero() {
                return T::zero();
            }
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det = det * pivot;
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                if factor != T::zero() {
                    for j in k + 1..n {
                        a[i * n + j] = a[i * n + j] - factor * a[k * n + j];
                    }
                }
            }
        }
        det
    }
}

/// Generalized cross product of d-1 vectors in R^d.
///
/// Returns sum_j (-1)^j det(G_j) e_j (0-based j), where G_j deletes column j
/// from the (d-1) x d matrix whose rows are the inputs. Equivalently, the
/// result P is the unique vector with <P, v> = det([v; inputs...]) for all v:
/// it is orthogonal to every input and vanishes iff the inputs are linearly
/// dependent.
pub fn generalized_cross<T: Scalar>(vectors: &[RealVector<T>]) -> Result<RealVector<T>> {
    let Some(first) = vectors.first() else {
        return Err(Error::DimensionMismatch(
            "generalized cross product needs at least one vector".into(),
        ));
    };
    let d = first.dim();
    if d < 2 {
        return Err(Error::DimensionMismatch(
            "generalized cross product needs ambient dimension >= 2".into(),
        ));
    }
    if vectors.len() != d - 1 {
        return Err(Error::DimensionMismatch(format!(
            "generalized cross product in R^{d} needs {} vectors, got {}",
            d - 1,
            vectors.len()
        )));
    }
    let stacked = RealMatrix::from_rows(vectors)?;
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let minor = stacked.delete_column(j)?.determinant()?;
        out.push(if j % 2 == 0 { minor } else { -minor });
    }
    Ok(RealVector::from_raw(out))
}
