//! Dense weighted adjacency matrices over a fixed variable set.
//!
//! Entry `(i, j)` is the signed weight of the directed stream `i -> j`; an
//! exact zero means "no stream". Self-loops are excluded by construction:
//! the diagonal is identically zero and every entry is finite.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Square matrix of stream weights with a zero diagonal and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    values: Array2<f64>,
}

impl WeightMatrix {
    /// Wraps a square array, rejecting non-finite entries and nonzero
    /// diagonal entries.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::Data(format!("weight matrix must be square, got {r}x{c}")));
        }
        if r == 0 {
            return Err(Error::Data("weight matrix must have dimension >= 1".into()));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite weight {v} at ({i}, {j})")));
            }
            if i == j && v != 0.0 {
                return Err(Error::Data(format!(
                    "self-loop weight {v} at ({i}, {i}); diagonal must be zero"
                )));
            }
        }
        Ok(WeightMatrix { values })
    }

    /// Like [`WeightMatrix::new`] but first forces the diagonal to zero.
    /// Useful for raw optimizer iterates whose diagonal is merely pinned.
    pub fn with_zeroed_diagonal(mut values: Array2<f64>) -> Result<Self> {
        let n = values.nrows().min(values.ncols());
        for i in 0..n {
            values[[i, i]] = 0.0;
        }
        WeightMatrix::new(values)
    }

    /// All-zero matrix of dimension `dim`.
    pub fn zeros(dim: usize) -> Result<Self> {
        WeightMatrix::new(Array2::zeros((dim, dim)))
    }

    /// Builds from row slices; convenient in tests and examples.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let mut arr = Array2::zeros((d, d));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Data(format!(
                    "row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                arr[[i, j]] = v;
            }
        }
        WeightMatrix::new(arr)
    }

    /// Number of variables (rows = columns).
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Borrow the underlying array.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Consume into the underlying array.
    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Weight of stream `source -> target` (zero when absent).
    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.values[[source, target]]
    }

    /// Sets one off-diagonal entry; rejects diagonal writes and non-finite
    /// values so the type invariants survive mutation.
    pub fn set(&mut self, source: usize, target: usize, weight: f64) -> Result<()> {
        if source == target && weight != 0.0 {
            return Err(Error::Data(format!(
                "refusing to set self-loop ({source}, {target})"
            )));
        }
        if !weight.is_finite() {
            return Err(Error::Data(format!(
                "non-finite weight {weight} at ({source}, {target})"
            )));
        }
        self.values[[source, target]] = weight;
        Ok(())
    }

    /// Removes the stream `source -> target`.
    pub fn zero_entry(&mut self, source: usize, target: usize) {
        self.values[[source, target]] = 0.0;
    }

    /// Largest entry magnitude (zero for the all-zero matrix).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Sum of entry magnitudes.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Number of nonzero entries.
    pub fn stream_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}
