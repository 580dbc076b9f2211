//! Dense exact matrices over ℚ and ℚ(i).
//!
//! Everything downstream (quiver maps, symplectic forms, gluing isomorphisms)
//! is stored as an [`ExactMatrix`]. Sizes stay tiny (dimensions ≤ ~30), so a
//! dense row-major grid with plain Gaussian elimination is the whole story.

use crate::scalar::Scalar;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("singular matrix: rank {rank} < size {size}")]
    Singular { rank: usize, size: usize },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>, // row-major, rows*cols entries
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ExactMatrix { rows, cols, data }
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatrixError::ShapeMismatch("ragged rows".into()));
        }
        Ok(ExactMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Integer-entry convenience constructor, used heavily in tests.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Scalar::from_int(v)).collect())
                .collect(),
        )
        .expect("ragged integer rows")
    }

    /// A single column from scalar entries.
    pub fn column(entries: Vec<Scalar>) -> Self {
        let rows = entries.len();
        ExactMatrix {
            rows,
            cols: 1,
            data: entries,
        }
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Self::identity(self.rows)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| f(self.get(r, c)))
    }

    /// Entrywise real part (a rational matrix).
    pub fn re(&self) -> Self {
        self.map(|s| Scalar::from_rational(s.re()))
    }

    /// Entrywise imaginary part (a rational matrix).
    pub fn im(&self) -> Self {
        self.map(|s| Scalar::from_rational(s.im()))
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        self.map(|e| e * s)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_square() && *self == -&self.transpose()
    }

    /// True when every entry lies in ℚ.
    pub fn is_rational(&self) -> bool {
        self.data.iter().all(Scalar::is_rational)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.rows != other.rows {
            return Err(MatrixError::ShapeMismatch(format!(
                "hstack {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.get(r, c).clone()
            } else {
                other.get(r, c - self.cols).clone()
            }
        }))
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "vstack {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.get(r, c).clone()
            } else {
                other.get(r - self.rows, c).clone()
            }
        }))
    }

    pub fn block_diag(blocks: &[&ExactMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for r in 0..b.rows {
                for c in 0..b.cols {
                    m.set(ro + r, co + c, b.get(r, c).clone());
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        m
    }

    /// Extracts the sub-block at `(row_off, col_off)` of the given shape.
    pub fn block(&self, row_off: usize, col_off: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self.get(row_off + r, col_off + c).clone())
    }

    pub fn column_vec(&self, c: usize) -> Vec<Scalar> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    fn check_same_shape(&self, other: &Self, op: &str) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "{op}: shape {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::ShapeMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(r, c);
                    out.set(r, c, cur + &(a * b));
                }
            }
        }
        Ok(out)
    }

    /// Row-reduces a copy to reduced row echelon form.
    /// Returns the reduced matrix and pivot column indices.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for c in 0..m.cols {
                    let a = m.get(row, c).clone();
                    let b = m.get(p, c).clone();
                    m.set(row, c, b);
                    m.set(p, c, a);
                }
            }
            let inv = m.get(row, col).inverse().expect("pivot nonzero");
            for c in 0..m.cols {
                let v = m.get(row, c) * &inv;
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let f = m.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for c in 0..m.cols {
                    let v = m.get(r, c) - &(&f * m.get(row, c));
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    /// Exact rank over the scalar field.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// A basis of `{x : self · x = 0}`, one column vector per basis element.
    pub fn nullspace_basis(&self) -> Vec<ExactMatrix> {
        let (r, pivots) = self.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivot_set.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![Scalar::zero(); self.cols];
            v[fc] = Scalar::one();
            for (pr, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.get(pr, fc);
            }
            basis.push(ExactMatrix::column(v));
        }
        basis
    }

    /// Exact inverse. Fails with `Singular` when rank < size.
    pub fn invert(&self) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::ShapeMismatch(format!(
                "invert on {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let aug = self.hstack(&Self::identity(n))?;
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots.iter().take(n).any(|&p| p >= n) {
            return Err(MatrixError::Singular {
                rank: pivots.iter().filter(|&&p| p < n).count(),
                size: n,
            });
        }
        Ok(red.block(0, n, n, n))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Exact determinant by fraction-producing Gaussian elimination.
    pub fn det(&self) -> Scalar {
        assert!(self.is_square(), "det of non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Scalar::zero();
            };
            if p != col {
                det = -det;
                for c in 0..n {
                    let a = m.get(col, c).clone();
                    let b = m.get(p, c).clone();
                    m.set(col, c, b);
                    m.set(p, c, a);
                }
            }
            let pivot = m.get(col, col).clone();
            det = &det * &pivot;
            let inv = pivot.inverse().unwrap();
            for r in col + 1..n {
                let f = m.get(r, col) * &inv;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = m.get(r, c) - &(&f * m.get(col, c));
                    m.set(r, c, v);
                }
            }
        }
        det
    }
}

impl Add for &ExactMatrix {
    type Output = ExactMatrix;
    fn add(self, rhs: &ExactMatrix) -> ExactMatrix {
        self.check_same_shape(rhs, "add");
        ExactMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) + rhs.get(r, c))
    }
}

impl Sub for &ExactMatrix {
    type Output = ExactMatrix;
    fn sub(self, rhs: &ExactMatrix) -> ExactMatrix {
        self.check_same_shape(rhs, "sub");
        ExactMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) - rhs.get(r, c))
    }
}

impl Neg for &ExactMatrix {
    type Output = ExactMatrix;
    fn neg(self) -> ExactMatrix {
        self.map(|s| -s)
    }
}

impl Mul for &ExactMatrix {
    type Output = ExactMatrix;
    fn mul(self, rhs: &ExactMatrix) -> ExactMatrix {
        self.matmul(rhs).expect("matmul shape mismatch")
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ExactMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

// JSON form: row-major nested arrays of scalars. An empty matrix still
// carries its shape via `{"rows": r, "cols": c, "entries": []}` when either
// dimension is zero; the common nonempty case is plain nested arrays.
impl Serialize for ExactMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.rows == 0 || self.cols == 0 {
            let mut map = serde_json::Map::new();
            map.insert("rows".into(), self.rows.into());
            map.insert("cols".into(), self.cols.into());
            map.insert("entries".into(), serde_json::Value::Array(vec![]));
            return serde_json::Value::Object(map).serialize(serializer);
        }
        let rows: Vec<Vec<&Scalar>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c)).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        matrix_from_json(&value).map_err(D::Error::custom)
    }
}

pub(crate) fn matrix_from_json(value: &serde_json::Value) -> Result<ExactMatrix, String> {
    match value {
        serde_json::Value::Object(map) => {
            let rows = map
                .get("rows")
                .and_then(|v| v.as_u64())
                .ok_or("matrix object needs integer \"rows\"")? as usize;
            let cols = map
                .get("cols")
                .and_then(|v| v.as_u64())
                .ok_or("matrix object needs integer \"cols\"")? as usize;
            let entries = map
                .get("entries")
                .and_then(|v| v.as_array())
                .ok_or("matrix object needs \"entries\" array")?;
            if rows * cols != entries.len() {
                return Err(format!(
                    "matrix {}x{} with {} entries",
                    rows,
                    cols,
                    entries.len()
                ));
            }
            let data = entries
                .iter()
                .map(crate::scalar::scalar_from_json)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ExactMatrix { rows, cols, data })
        }
        serde_json::Value::Array(rows) => {
            let parsed: Vec<Vec<Scalar>> = rows
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| "matrix row must be an array".to_string())?
                        .iter()
                        .map(crate::scalar::scalar_from_json)
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            ExactMatrix::from_rows(parsed).map_err(|e| e.to_string())
        }
        other => Err(format!("expected matrix, got {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        // zero 3x3 -> 0
        assert_eq!(ExactMatrix::zeros(3, 3).rank(), 0);
        // identity n x n -> n
        for n in 1..5 {
            assert_eq!(ExactMatrix::identity(n).rank(), n);
        }
        // [[1,2],[2,4]] -> 1 (second row is twice the first)
        let m = ExactMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn invert_examples() {
        let id = ExactMatrix::identity(3);
        assert_eq!(id.invert().unwrap(), id);

        let m = ExactMatrix::from_int_rows(&[&[2]]);
        let inv = m.invert().unwrap();
        assert_eq!(*inv.get(0, 0), Scalar::from_fraction(1, 2));

        let m = ExactMatrix::from_int_rows(&[&[1, 1], &[0, 1]]);
        let expected = ExactMatrix::from_int_rows(&[&[1, -1], &[0, 1]]);
        assert_eq!(m.invert().unwrap(), expected);

        let sing = ExactMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert!(matches!(
            sing.invert(),
            Err(MatrixError::Singular { rank: 1, size: 2 })
        ));
    }

    #[test]
    fn inverse_is_two_sided() {
        let m = ExactMatrix::from_int_rows(&[&[2, 1, 0], &[1, -1, 3], &[0, 5, 7]]);
        let inv = m.invert().unwrap();
        assert!((&m * &inv).is_identity());
        assert!((&inv * &m).is_identity());
    }

    #[test]
    fn nullspace_satisfies_system() {
        let m = ExactMatrix::from_int_rows(&[&[1, 2, 3], &[2, 4, 6]]);
        let basis = m.nullspace_basis();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!((&m * v).is_zero());
        }
        // independence: stacked columns have full column rank
        let stacked = basis[0].hstack(&basis[1]).unwrap();
        assert_eq!(stacked.rank(), 2);
    }

    #[test]
    fn det_matches_structure() {
        let m = ExactMatrix::from_int_rows(&[&[2, 0], &[0, 3]]);
        assert_eq!(m.det(), Scalar::from_int(6));
        let swap = ExactMatrix::from_int_rows(&[&[0, 1], &[1, 0]]);
        assert_eq!(swap.det(), Scalar::from_int(-1));
        let sing = ExactMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert!(sing.det().is_zero());
    }

    #[test]
    fn gaussian_entries_work() {
        let i = Scalar::i();
        let m = ExactMatrix::from_rows(vec![
            vec![Scalar::one(), i.clone()],
            vec![-&i, Scalar::one()],
        ])
        .unwrap();
        // det = 1*1 - i*(-i) = 1 - 1 = 0? i * (-i) = -i² = 1, so det = 1 - 1 = 0.
        assert!(m.det().is_zero());
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn json_roundtrip() {
        let m = ExactMatrix::from_rows(vec![
            vec![Scalar::from_fraction(1, 2), Scalar::i()],
            vec![Scalar::from_int(-3), Scalar::zero()],
        ])
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: ExactMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);

        let empty = ExactMatrix::zeros(0, 2);
        let text = serde_json::to_string(&empty).unwrap();
        let back: ExactMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back.shape(), (0, 2));
    }
}
