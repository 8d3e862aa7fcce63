//! Small dense linear systems.
//!
//! Policy evaluation needs `(I - gamma P) v = c` for at most a few hundred
//! states, so a plain row-major matrix and Gaussian elimination with partial
//! pivoting is all that is required.

use crate::error::{Error, Result};

/// A pivot smaller than this fraction of its row's largest entry is treated
/// as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

pub type DenseVector = Vec<f64>;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `I - scale * self`, for square matrices.
    pub fn identity_minus_scaled(&self, scale: f64) -> Self {
        assert_eq!(self.rows, self.cols, "matrix must be square");
        let mut out = self.clone();
        for (k, e) in out.entries.iter_mut().enumerate() {
            let diag = if k / self.cols == k % self.cols { 1.0 } else { 0.0 };
            *e = diag - scale * *e;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Inputs are left untouched; elimination runs on a private copy.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, not square",
            a.rows, a.cols
        )));
    }
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "matrix has {n} rows, right-hand side has {}",
            b.len()
        )));
    }

    let mut m = a.entries.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .expect("non-empty pivot range");
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }

        let pivot = m[col * n + col];
        let row_max = m[col * n + col..(col + 1) * n]
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if !(pivot.abs() > PIVOT_TOLERANCE * row_max) {
            return Err(Error::SingularMatrix { column: col });
        }

        for i in col + 1..n {
            let factor = m[i * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[i * n + col] = 0.0;
            for j in col + 1..n {
                m[i * n + j] -= factor * m[col * n + j];
            }
            x[i] -= factor * x[col];
        }
    }

    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| m[i * n + j] * x[j]).sum();
        x[i] = (x[i] - tail) / m[i * n + i];
    }
    Ok(x)
}
