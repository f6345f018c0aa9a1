//! Dense row-major feature matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `n × N` real feature matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: usize,
    dims: usize,
    values: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from row-major values. Every value must be finite.
    ///
    /// Zero rows are accepted (an empty sample); operations that need data
    /// reject it themselves.
    pub fn new(rows: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidInput("dataset needs at least one feature".into()));
        }
        if values.len() != rows * dims {
            return Err(Error::DimensionMismatch {
                expected: rows * dims,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                pos / dims,
                pos % dims
            )));
        }
        Ok(Self {
            rows,
            dims,
            values,
            feature_names: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dims);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), dims, values)
    }

    /// One-dimensional dataset from scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.len(), 1, xs.to_vec())
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                found: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dims)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sample mean and maximum-likelihood covariance (divided by `n`).
    pub fn mean_and_covariance(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if self.rows == 0 {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        let n = self.rows as f64;
        let mut mean = DVector::zeros(self.dims);
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean /= n;
        let mut cov = DMatrix::zeros(self.dims, self.dims);
        for r in self.iter_rows() {
            let d = DVector::from_iterator(self.dims, r.iter().zip(mean.iter()).map(|(a, b)| a - b));
            cov.ger(1.0, &d, &d, 1.0);
        }
        cov /= n;
        Ok((mean, cov))
    }

    /// Default ridge: `1e-6 · trace(Σ_X) / N`.
    pub fn default_ridge(&self) -> Result<f64> {
        let (_, cov) = self.mean_and_covariance()?;
        Ok(1e-6 * cov.trace() / self.dims as f64)
    }
}
