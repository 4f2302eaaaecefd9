//! Dense row-major time series container.

use crate::error::{Error, Result};

/// A time series of `n` observations with `dim` columns, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl Series {
    /// Builds a series from row-major values. `values.len()` must equal `n * dim`.
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("series must have at least one column".into()));
        }
        if values.len() != n * dim {
            return Err(Error::Config(format!(
                "expected {} values for {n} rows of {dim} columns, got {}",
                n * dim,
                values.len()
            )));
        }
        Ok(Series { n, dim, values })
    }

    pub fn univariate(values: Vec<f64>) -> Self {
        Series {
            n: values.len(),
            dim: 1,
            values,
        }
    }

    /// Builds a series from equally long columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 {
            return Err(Error::Config("series must have at least one column".into()));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Config("columns have different lengths".into()));
        }
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            values.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Series { n, dim, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.values[i * self.dim + j]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_interleaved_row_major() {
        let s = Series::from_columns(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.values(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(s.row(1), &[2.0, 4.0]);
        assert_eq!(s.column(1), vec![3.0, 4.0]);
    }

    #[test]
    fn rejects_ragged_input() {
        assert!(Series::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Series::from_columns(&[vec![1.0], vec![]]).is_err());
    }
}
