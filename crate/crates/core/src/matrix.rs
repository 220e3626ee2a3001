//! Dense communication matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A total `rows × cols` table; `M(i, j)` is the output required when the
/// row party holds `i` and the column party holds `j`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> ProblemMatrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        ProblemMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ProblemMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Parse("ragged rows".into()));
        }
        Ok(ProblemMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        assert!(i < self.rows && j < self.cols, "cell ({i},{j}) out of range");
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "cell ({i},{j}) out of range");
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The submatrix on the given rows and columns, in the order given
    /// (repeats allowed, which duplicates rows or columns).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        ProblemMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.get(rows[i], cols[j]).clone()
        })
    }
}

impl ProblemMatrix<bool> {
    pub fn identity(n: usize) -> Self {
        ProblemMatrix::from_fn(n, n, |i, j| i == j)
    }

    /// Parses a dense 0/1 grid, one row per line. Whitespace inside a line is
    /// ignored; blank lines and lines starting with `#` are skipped.
    pub fn parse_grid(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Parse(format!("invalid grid character {other:?}"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(Error::Parse("empty grid".into()));
        }
        ProblemMatrix::from_rows(rows)
    }

    pub fn to_grid(&self) -> String {
        let mut s = String::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            for &b in self.row(i) {
                s.push(if b { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

impl<T: fmt::Debug> fmt::Debug for ProblemMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]))
            .finish()
    }
}
