//! Dense matrices over an exact integer scalar.
//!
//! The scalar is generic through [`Scalar`] so the normal-form algorithms can
//! run over machine integers in quick tests and over arbitrary-precision
//! integers everywhere else. The crate-level alias [`crate::IntMatrix`] fixes
//! the production scalar to `num_bigint::BigInt`; nothing in this crate ever
//! computes with floating point.

use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Int;

/// Exact integer scalar: ordered, signed, with Euclidean division and gcd.
pub trait Scalar: Integer + Signed + Clone + fmt::Debug + fmt::Display {}

impl<T> Scalar for T where T: Integer + Signed + Clone + fmt::Debug + fmt::Display {}

/// Row-major dense matrix. Empty shapes (0 rows or 0 columns) are legal.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  [")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[r * self.cols + c])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged rows in matrix literal"
        );
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Matrix with explicit shape, for the `0xN` / `Nx0` degenerate cases.
    pub fn from_shape(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> Vec<T> {
        (0..self.cols).map(|c| self.at(r, c).clone()).collect()
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *t.at_mut(c, r) = self.at(r, c).clone();
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matrix product");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let add = a.clone() * other.at(k, c).clone();
                    let cur = out.at(r, c).clone();
                    *out.at_mut(r, c) = cur + add;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matrix-vector product");
        (0..self.rows)
            .map(|r| {
                let mut acc = T::zero();
                for c in 0..self.cols {
                    acc = acc + self.at(r, c).clone() * v[c].clone();
                }
                acc
            })
            .collect()
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack needs equal row counts");
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(r, c) = self.at(r, c).clone();
            }
            for c in 0..other.cols {
                *out.at_mut(r, self.cols + c) = other.at(r, c).clone();
            }
        }
        out
    }

    pub fn from_cols(rows: usize, cols: Vec<Vec<T>>) -> Self {
        let k = cols.len();
        assert!(cols.iter().all(|c| c.len() == rows), "ragged columns");
        let mut out = Self::zeros(rows, k);
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                *out.at_mut(i, j) = x.clone();
            }
        }
        out
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// `row[dst] += q * row[src]`
    pub(crate) fn row_axpy(&mut self, dst: usize, src: usize, q: &T) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let add = q.clone() * self.at(src, c).clone();
            let cur = self.at(dst, c).clone();
            *self.at_mut(dst, c) = cur + add;
        }
    }

    /// `col[dst] += q * col[src]`
    pub(crate) fn col_axpy(&mut self, dst: usize, src: usize, q: &T) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let add = q.clone() * self.at(r, src).clone();
            let cur = self.at(r, dst).clone();
            *self.at_mut(r, dst) = cur + add;
        }
    }

    pub(crate) fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = self.at(r, c).clone();
            *self.at_mut(r, c) = -v;
        }
    }
}

impl Matrix<Int> {
    pub fn map_bigint(rows: Vec<Vec<i64>>) -> Self {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(Int::from).collect())
                .collect(),
        )
    }
}

// Matrices cross the boundary as arrays of arrays of decimal strings so that
// arbitrary-precision entries survive JSON.
impl Serialize for Matrix<Int> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c).to_string()).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix<Int> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<serde_json::Value>> = Vec::deserialize(deserializer)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(D::Error::custom("ragged matrix rows"));
            }
            for v in row {
                data.push(crate::jsonutil::int_from_value(v).map_err(D::Error::custom)?);
            }
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_identity() {
        let a = Matrix::map_bigint(vec![vec![1, 2], vec![3, 4]]);
        let i = Matrix::<Int>::identity(2);
        assert_eq!(a.mul(&i), a);
        assert_eq!(i.mul(&a), a);
        let b = Matrix::map_bigint(vec![vec![0, 1], vec![1, 0]]);
        let ab = a.mul(&b);
        assert_eq!(ab, Matrix::map_bigint(vec![vec![2, 1], vec![4, 3]]));
    }

    #[test]
    fn empty_shapes_are_legal() {
        let a: Matrix<Int> = Matrix::from_shape(0, 3, vec![]);
        assert_eq!(a.rows(), 0);
        assert_eq!(a.cols(), 3);
        let b: Matrix<Int> = Matrix::from_shape(3, 0, vec![]);
        let ab = a.transpose().mul(&b.transpose());
        assert_eq!(ab.rows(), 3);
        assert_eq!(ab.cols(), 3);
        assert!(ab.is_zero());
    }

    #[test]
    fn json_uses_decimal_strings() {
        let a = Matrix::map_bigint(vec![vec![1, -2], vec![30, 4]]);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"[["1","-2"],["30","4"]]"#);
        let back: Matrix<Int> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        // plain JSON numbers are accepted on input
        let lenient: Matrix<Int> = serde_json::from_str("[[1,-2],[30,4]]").unwrap();
        assert_eq!(lenient, a);
    }
}
