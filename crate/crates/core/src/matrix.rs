//! Dense row-major matrices tagged with their element precision.
//!
//! Element `(i, j)` of an `m x n` matrix lives at flat index `i * n + j`.
//! Values cross the public API as `f64`; storage keeps the native width so
//! single-precision kernels really run on `f32`.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("invalid dimensions {rows}x{cols}: both must be at least 1")]
    InvalidDimensions { rows: usize, cols: usize },
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("inner dimensions differ: a is {a_rows}x{a_cols}, b is {b_rows}x{b_cols}")]
    InnerDimension {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
    #[error("precision mismatch: {0} vs {1}")]
    PrecisionMismatch(Precision, Precision),
    #[error("index ({row}, {col}) out of range for {rows}x{cols}")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("tile edge must be at least 1")]
    InvalidTile,
    #[error("worker count must be at least 1")]
    InvalidWorkers,
}

/// Floating-point width of matrix elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub const ALL: [Precision; 2] = [Precision::Single, Precision::Double];

    pub fn element_bytes(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    /// Machine epsilon of the element type, widened to `f64`.
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Single => f32::EPSILON as f64,
            Precision::Double => f64::EPSILON,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" | "float" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (expected single or double)")),
        }
    }
}

/// How [`Matrix::random_filled`] draws its elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillRange {
    /// Integers uniform in `[-8, 8]`. Every product sum along a reduction of
    /// length up to 2048 stays exactly representable in `f32`.
    SmallInt,
    /// Reals uniform in `[0, 1)`.
    UnitReal,
}

/// Native element storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Single(Vec<f32>),
    Double(Vec<f64>),
}

impl Storage {
    fn len(&self) -> usize {
        match self {
            Storage::Single(v) => v.len(),
            Storage::Double(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Storage,
}

fn check_dims(rows: usize, cols: usize) -> Result<(), MatrixError> {
    if rows == 0 || cols == 0 {
        return Err(MatrixError::InvalidDimensions { rows, cols });
    }
    Ok(())
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, precision: Precision) -> Result<Self, MatrixError> {
        check_dims(rows, cols)?;
        let len = rows * cols;
        let data = match precision {
            Precision::Single => Storage::Single(vec![0.0; len]),
            Precision::Double => Storage::Double(vec![0.0; len]),
        };
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(order: usize, precision: Precision) -> Result<Self, MatrixError> {
        let mut m = Matrix::zeros(order, order, precision)?;
        for i in 0..order {
            m.set(i, i, 1.0)?;
        }
        Ok(m)
    }

    /// Builds a matrix from existing storage, checking the length.
    pub fn from_storage(rows: usize, cols: usize, data: Storage) -> Result<Self, MatrixError> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(MatrixError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix of the given precision from nested rows of values.
    pub fn from_rows(rows: &[Vec<f64>], precision: Precision) -> Result<Self, MatrixError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        check_dims(nrows, ncols)?;
        let mut m = Matrix::zeros(nrows, ncols, precision)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(MatrixError::DataLength {
                    rows: nrows,
                    cols: ncols,
                    len: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v)?;
            }
        }
        Ok(m)
    }

    /// Deterministic pseudo-random fill.
    ///
    /// The generator is ChaCha8 seeded with `seed` through
    /// `SeedableRng::seed_from_u64`; elements are drawn in row-major order.
    /// The output is a pure function of the arguments.
    pub fn random_filled(
        rows: usize,
        cols: usize,
        precision: Precision,
        seed: u64,
        range: FillRange,
    ) -> Result<Self, MatrixError> {
        check_dims(rows, cols)?;
        let len = rows * cols;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = match (range, precision) {
            (FillRange::SmallInt, _) => {
                let dist = Uniform::new_inclusive(-8i32, 8i32);
                let values = (0..len).map(|_| dist.sample(&mut rng));
                match precision {
                    Precision::Single => Storage::Single(values.map(|v| v as f32).collect()),
                    Precision::Double => Storage::Double(values.map(f64::from).collect()),
                }
            }
            (FillRange::UnitReal, Precision::Single) => {
                let dist = Uniform::new(0.0f32, 1.0f32);
                Storage::Single((0..len).map(|_| dist.sample(&mut rng)).collect())
            }
            (FillRange::UnitReal, Precision::Double) => {
                let dist = Uniform::new(0.0f64, 1.0f64);
                Storage::Double((0..len).map(|_| dist.sample(&mut rng)).collect())
            }
        };
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn precision(&self) -> Precision {
        match self.data {
            Storage::Single(_) => Precision::Single,
            Storage::Double(_) => Precision::Double,
        }
    }

    pub fn storage(&self) -> &Storage {
        &self.data
    }

    pub fn into_storage(self) -> Storage {
        self.data
    }

    fn index(&self, row: usize, col: usize) -> Result<usize, MatrixError> {
        if row >= self.rows || col >= self.cols {
            return Err(MatrixError::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(row * self.cols + col)
    }

    pub fn get(&self, row: usize, col: usize) -> Result<f64, MatrixError> {
        let idx = self.index(row, col)?;
        Ok(match &self.data {
            Storage::Single(v) => v[idx] as f64,
            Storage::Double(v) => v[idx],
        })
    }

    /// Writes `value`, rounding to the matrix precision.
    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<(), MatrixError> {
        let idx = self.index(row, col)?;
        match &mut self.data {
            Storage::Single(v) => v[idx] = value as f32,
            Storage::Double(v) => v[idx] = value,
        }
        Ok(())
    }

    /// All elements widened to `f64`, row-major.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            Storage::Single(v) => v.iter().map(|&x| x as f64).collect(),
            Storage::Double(v) => v.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .sum()
    }

    /// Position of the first element whose bit pattern differs, or `None`
    /// when the matrices are bitwise identical. Shapes and precisions must
    /// already agree.
    pub fn first_bitwise_difference(&self, other: &Matrix) -> Result<Option<(usize, usize)>, MatrixError> {
        check_same_kind(self, other)?;
        let pos = match (&self.data, &other.data) {
            (Storage::Single(a), Storage::Single(b)) => {
                a.iter().zip(b).position(|(x, y)| x.to_bits() != y.to_bits())
            }
            (Storage::Double(a), Storage::Double(b)) => {
                a.iter().zip(b).position(|(x, y)| x.to_bits() != y.to_bits())
            }
            _ => unreachable!("precision checked above"),
        };
        Ok(pos.map(|p| (p / self.cols, p % self.cols)))
    }

    pub fn bitwise_eq(&self, other: &Matrix) -> bool {
        matches!(self.first_bitwise_difference(other), Ok(None))
    }
}

fn check_same_kind(a: &Matrix, b: &Matrix) -> Result<(), MatrixError> {
    if a.shape() != b.shape() {
        return Err(MatrixError::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    if a.precision() != b.precision() {
        return Err(MatrixError::PrecisionMismatch(a.precision(), b.precision()));
    }
    Ok(())
}

/// True iff every position satisfies
/// `|a - b| <= max(abs_tol, rel_tol * max(|a|, |b|))`.
pub fn approx_eq(a: &Matrix, b: &Matrix, rel_tol: f64, abs_tol: f64) -> Result<bool, MatrixError> {
    Ok(first_approx_difference(a, b, rel_tol, abs_tol)?.is_none())
}

/// Like [`approx_eq`], but reports the first offending position.
pub fn first_approx_difference(
    a: &Matrix,
    b: &Matrix,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Option<(usize, usize)>, MatrixError> {
    check_same_kind(a, b)?;
    let close = |x: f64, y: f64| (x - y).abs() <= abs_tol.max(rel_tol * x.abs().max(y.abs()));
    let pos = match (&a.data, &b.data) {
        (Storage::Single(x), Storage::Single(y)) => {
            x.iter().zip(y).position(|(&p, &q)| !close(p as f64, q as f64))
        }
        (Storage::Double(x), Storage::Double(y)) => x.iter().zip(y).position(|(&p, &q)| !close(p, q)),
        _ => unreachable!("precision checked above"),
    };
    Ok(pos.map(|p| (p / a.cols, p % a.cols)))
}

/// Relative tolerance for comparing a length-`inner` reduction across
/// backends: `inner * epsilon * 8`.
pub fn reduction_rel_tol(inner: usize, precision: Precision) -> f64 {
    inner as f64 * precision.epsilon() * 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_shapes_and_errors() {
        let m = Matrix::zeros(2, 3, Precision::Single).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert!(m.to_f64_vec().iter().all(|&v| v == 0.0));
        let one = Matrix::zeros(1, 1, Precision::Double).unwrap();
        assert_eq!(one.get(0, 0).unwrap(), 0.0);
        assert_eq!(
            Matrix::zeros(0, 5, Precision::Single),
            Err(MatrixError::InvalidDimensions { rows: 0, cols: 5 })
        );
    }

    #[test]
    fn identity_values() {
        let i2 = Matrix::identity(2, Precision::Single).unwrap();
        assert_eq!(i2.to_f64_vec(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(Matrix::identity(1, Precision::Double).unwrap().to_f64_vec(), vec![1.0]);
        assert_eq!(Matrix::identity(3, Precision::Single).unwrap().trace(), 3.0);
        assert!(Matrix::identity(0, Precision::Single).is_err());
    }

    #[test]
    fn element_bytes_match_tag() {
        assert_eq!(Precision::Single.element_bytes(), 4);
        assert_eq!(Precision::Double.element_bytes(), 8);
    }

    #[test]
    fn random_fill_is_deterministic_and_seed_sensitive() {
        let a = Matrix::random_filled(4, 4, Precision::Single, 42, FillRange::SmallInt).unwrap();
        let b = Matrix::random_filled(4, 4, Precision::Single, 42, FillRange::SmallInt).unwrap();
        assert!(a.bitwise_eq(&b));
        let c = Matrix::random_filled(4, 4, Precision::Single, 43, FillRange::SmallInt).unwrap();
        assert!(!a.bitwise_eq(&c));
        let u = Matrix::random_filled(4, 4, Precision::Single, 42, FillRange::UnitReal).unwrap();
        let v = Matrix::random_filled(4, 4, Precision::Single, 43, FillRange::UnitReal).unwrap();
        assert!(!u.bitwise_eq(&v));
    }

    #[test]
    fn small_int_range() {
        let m = Matrix::random_filled(8, 8, Precision::Double, 7, FillRange::SmallInt).unwrap();
        for v in m.to_f64_vec() {
            assert_eq!(v, v.trunc());
            assert!((-8.0..=8.0).contains(&v));
        }
    }

    #[test]
    fn unit_real_range() {
        for p in Precision::ALL {
            let m = Matrix::random_filled(32, 32, p, 1, FillRange::UnitReal).unwrap();
            assert!(m.to_f64_vec().iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn get_set_bounds() {
        let mut m = Matrix::zeros(2, 2, Precision::Double).unwrap();
        m.set(1, 0, 2.5).unwrap();
        assert_eq!(m.get(1, 0).unwrap(), 2.5);
        assert!(m.get(2, 0).is_err());
        assert!(m.set(0, 2, 1.0).is_err());
    }

    #[test]
    fn approx_eq_cases() {
        let m = Matrix::random_filled(3, 3, Precision::Double, 5, FillRange::UnitReal).unwrap();
        assert!(approx_eq(&m, &m, 0.0, 0.0).unwrap());
        let z = Matrix::zeros(2, 2, Precision::Single).unwrap();
        let i = Matrix::identity(2, Precision::Single).unwrap();
        assert!(!approx_eq(&z, &i, 0.0, 0.0).unwrap());
        let one = Matrix::from_rows(&[vec![1.0]], Precision::Double).unwrap();
        let near = Matrix::from_rows(&[vec![1.0 + 1e-9]], Precision::Double).unwrap();
        assert!(approx_eq(&one, &near, 1e-6, 0.0).unwrap());
        assert!(!approx_eq(&one, &near, 0.0, 0.0).unwrap());
    }

    #[test]
    fn approx_eq_rejects_mismatches() {
        let a = Matrix::zeros(2, 2, Precision::Single).unwrap();
        let b = Matrix::zeros(2, 3, Precision::Single).unwrap();
        let c = Matrix::zeros(2, 2, Precision::Double).unwrap();
        assert!(matches!(approx_eq(&a, &b, 0.0, 0.0), Err(MatrixError::ShapeMismatch { .. })));
        assert!(matches!(approx_eq(&a, &c, 0.0, 0.0), Err(MatrixError::PrecisionMismatch(..))));
    }

    #[test]
    fn first_difference_reports_position() {
        let a = Matrix::zeros(3, 4, Precision::Single).unwrap();
        let mut b = a.clone();
        b.set(2, 1, 1.0).unwrap();
        assert_eq!(a.first_bitwise_difference(&b).unwrap(), Some((2, 1)));
        assert_eq!(first_approx_difference(&a, &b, 0.1, 0.0).unwrap(), Some((2, 1)));
    }
}
