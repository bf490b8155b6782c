//! Dense row-major matrices and the row-stochastic strategy type.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::ser::{Serialize, Serializer};

use crate::error::{check_index, Error, Result};
use crate::STOCHASTIC_TOL;

/// Dense `rows x cols` matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    /// Builds a matrix from nested rows. Every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension {
                    what: "matrix row",
                    expected: format!("{cols} columns"),
                    found: format!("{} columns in row {i}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Appends a column filled with `value`.
    pub(crate) fn push_column(&mut self, value: f64) {
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.push(value);
        }
        self.data = data;
        self.cols += 1;
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_seq((0..self.rows).map(|i| self.row(i)))
    }
}

/// Validates one probability row: entries in `[0, 1]`, sum within [`STOCHASTIC_TOL`] of 1.
pub fn check_stochastic_row(row_index: usize, row: &[f64]) -> Result<()> {
    if row.is_empty() {
        return Err(Error::NotStochastic {
            row: row_index,
            reason: "row is empty".to_string(),
        });
    }
    for (j, &p) in row.iter().enumerate() {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::NotStochastic {
                row: row_index,
                reason: format!("entry {j} = {p} outside [0, 1]"),
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NotStochastic {
            row: row_index,
            reason: format!("sum = {sum}"),
        });
    }
    Ok(())
}

/// A row-stochastic matrix: the user strategy `U` (intents x queries) or the
/// DBMS strategy `D` (queries x results).
///
/// Every constructor validates; the only mutation paths are the learning rules
/// in this crate, which write whole rows that are stochastic by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMatrix {
    inner: Matrix,
}

impl StrategyMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::Dimension {
                what: "strategy",
                expected: "at least 1x1".to_string(),
                found: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        for i in 0..matrix.rows() {
            check_stochastic_row(i, matrix.row(i))?;
        }
        Ok(Self { inner: matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Every row uniform over its columns.
    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 {
            return Self::new(Matrix::zeros(rows, cols));
        }
        Self::new(Matrix::filled(rows, cols, 1.0 / cols as f64))
    }

    /// Pure strategy sending row `i` to column `assignment[i]`.
    pub fn pure(assignment: &[usize], cols: usize) -> Result<Self> {
        let mut m = Matrix::zeros(assignment.len(), cols);
        for (i, &j) in assignment.iter().enumerate() {
            check_index("pure assignment column", j, cols)?;
            m.set(i, j, 1.0);
        }
        Self::new(m)
    }

    /// Row-normalization of a matrix with nonnegative entries and positive row sums.
    pub fn normalized_from(weights: &Matrix) -> Result<Self> {
        let mut m = weights.clone();
        for i in 0..m.rows() {
            let sum = m.row_sum(i);
            if !(sum > 0.0) || m.row(i).iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return Err(Error::InvalidValue(format!(
                    "row {i} of a reward matrix must be nonnegative with a positive sum"
                )));
            }
            m.row_mut(i).iter_mut().for_each(|w| *w /= sum);
        }
        Self::new(m)
    }

    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    /// Replaces row `i` after validating it.
    pub fn set_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        check_index("strategy row", i, self.rows())?;
        if row.len() != self.cols() {
            return Err(Error::Dimension {
                what: "strategy row",
                expected: format!("{} entries", self.cols()),
                found: format!("{} entries", row.len()),
            });
        }
        check_stochastic_row(i, row)?;
        self.inner.row_mut(i).copy_from_slice(row);
        Ok(())
    }

    /// Row `i` for in-place learning updates. Callers keep the row stochastic.
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        self.inner.row_mut(i)
    }

    /// Sets row `i` to the normalization of `weights` (positive sum required).
    pub(crate) fn set_row_normalized(&mut self, i: usize, weights: &[f64]) {
        let sum: f64 = weights.iter().sum();
        debug_assert!(sum > 0.0);
        for (p, &w) in self.inner.row_mut(i).iter_mut().zip(weights) {
            *p = w / sum;
        }
    }

    pub(crate) fn set_row_uniform(&mut self, i: usize) {
        let n = self.cols() as f64;
        self.inner.row_mut(i).iter_mut().for_each(|p| *p = 1.0 / n);
    }

    pub(crate) fn set_row_pure(&mut self, i: usize, j: usize) {
        let row = self.inner.row_mut(i);
        row.iter_mut().for_each(|p| *p = 0.0);
        row[j] = 1.0;
    }

    /// Appends a uniform row.
    pub fn push_uniform_row(&mut self) {
        let n = self.cols();
        self.inner.push_row(&vec![1.0 / n as f64; n]);
    }

    /// Appends a column. Each row gives the new column the uniform share
    /// `1/(n+1)` and scales its existing entries by `n/(n+1)`.
    pub fn push_column_proportional(&mut self) {
        let n = self.cols() as f64;
        let share = 1.0 / (n + 1.0);
        self.inner.push_column(share);
        let cols = self.cols();
        for i in 0..self.rows() {
            let row = self.inner.row_mut(i);
            row[..cols - 1].iter_mut().for_each(|p| *p *= n / (n + 1.0));
        }
    }

    /// True when every entry is 0 or 1.
    pub fn is_pure(&self) -> bool {
        self.inner.as_slice().iter().all(|&p| p == 0.0 || p == 1.0)
    }

    /// Column index of the 1 in each row, if the strategy is pure.
    pub fn pure_assignment(&self) -> Option<Vec<usize>> {
        if !self.is_pure() {
            return None;
        }
        (0..self.rows())
            .map(|i| self.row(i).iter().position(|&p| p == 1.0))
            .collect()
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn blend(&self, other: &Self, alpha: f64) -> Result<Self> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::Dimension {
                what: "strategy blend",
                expected: format!("{}x{}", self.rows(), self.cols()),
                found: format!("{}x{}", other.rows(), other.cols()),
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("blend weight {alpha} outside [0, 1]")));
        }
        let data: Vec<f64> = self
            .inner
            .as_slice()
            .iter()
            .zip(other.inner.as_slice())
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        Self::new(Matrix {
            rows: self.rows(),
            cols: self.cols(),
            data,
        })
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        (0..self.rows())
            .map(|i| (self.inner.row_sum(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for StrategyMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        self.inner.serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(StrategyMatrix::from_rows(&[vec![0.5, 0.4]]).is_err());
        assert!(StrategyMatrix::from_rows(&[vec![1.2, -0.2]]).is_err());
        assert!(StrategyMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(StrategyMatrix::from_rows(&[]).is_err());
        assert!(StrategyMatrix::from_rows(&[vec![0.25, 0.75], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn pure_assignment_round_trips() {
        let s = StrategyMatrix::pure(&[1, 0, 1], 2).unwrap();
        assert!(s.is_pure());
        assert_eq!(s.pure_assignment(), Some(vec![1, 0, 1]));
        let mixed = StrategyMatrix::uniform(2, 2).unwrap();
        assert_eq!(mixed.pure_assignment(), None);
        assert!(StrategyMatrix::pure(&[2], 2).is_err());
    }

    #[test]
    fn growth_keeps_rows_stochastic() {
        let mut s = StrategyMatrix::from_rows(&[vec![0.2, 0.8], vec![1.0, 0.0]]).unwrap();
        s.push_column_proportional();
        s.push_uniform_row();
        assert_eq!((s.rows(), s.cols()), (3, 3));
        assert!(s.max_row_error() < 1e-12);
        assert!((s.get(0, 2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.get(0, 1) - 0.8 * 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn blend_and_normalize() {
        let a = StrategyMatrix::pure(&[0], 2).unwrap();
        let b = StrategyMatrix::pure(&[1], 2).unwrap();
        let c = a.blend(&b, 0.25).unwrap();
        assert_eq!(c.row(0), &[0.25, 0.75]);
        assert!(a.blend(&b, 1.5).is_err());
        let w = Matrix::from_rows(&[vec![1.0, 3.0]]).unwrap();
        assert_eq!(StrategyMatrix::normalized_from(&w).unwrap().row(0), &[0.25, 0.75]);
        let bad = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(StrategyMatrix::normalized_from(&bad).is_err());
    }
}
