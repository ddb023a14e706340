//! Dense rational matrices (representing matrices, transport plans, stair-shaped
//! matrices).

use std::fmt;
use std::ops::{Index, IndexMut};

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n_cols
                )));
            }
            data.extend(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    /// Integer matrix literal, mostly for tests and fixtures.
    pub fn from_ints<const N: usize>(rows: &[[i64; N]]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| int(x)))
            .collect();
        Self {
            rows: rows.len(),
            cols: N,
            data,
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

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<Rational> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn total(&self) -> Rational {
        self.data.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|x| !x.is_negative())
    }

    pub fn is_positive_at(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_positive()
    }

    pub fn positive_count(&self) -> usize {
        self.data.iter().filter(|x| x.is_positive()).count()
    }

    /// Row-major iterator over `(i, j, entry)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, x)| (k / cols, k % cols, x))
    }

    /// Copy of the inclusive sub-matrix `[top..=bottom] x [left..=right]`.
    pub fn submatrix(&self, top: usize, left: usize, bottom: usize, right: usize) -> Matrix {
        let mut out = Matrix::zeros(bottom - top + 1, right - left + 1);
        for i in top..=bottom {
            for j in left..=right {
                out[(i - top, j - left)] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn set_submatrix(&mut self, top: usize, left: usize, block: &Matrix) {
        for (i, j, x) in block.entries() {
            self[(top + i, left + j)] = x.clone();
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for (i, j, x) in self.entries() {
            out[(j, i)] = x.clone();
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub(crate) fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.data.iter().map(format_rational).collect();
        let width = cells.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|j| format!("{:>width$}", cells[i * self.cols + j]))
                .collect();
            writeln!(f, "[{}]", line.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_blocks() {
        let a = Matrix::from_ints(&[[1, 2, 3], [4, 5, 6]]);
        assert_eq!(a.row_sums(), vec![int(6), int(15)]);
        assert_eq!(a.col_sums(), vec![int(5), int(7), int(9)]);
        let s = a.submatrix(0, 1, 1, 2);
        assert_eq!(s, Matrix::from_ints(&[[2, 3], [5, 6]]));
        let mut b = Matrix::zeros(2, 3);
        b.set_submatrix(0, 1, &s);
        assert_eq!(b, Matrix::from_ints(&[[0, 2, 3], [0, 5, 6]]));
        assert_eq!(a.transpose().shape(), (3, 2));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(vec![vec![int(1)], vec![int(1), int(2)]]).is_err());
    }
}
