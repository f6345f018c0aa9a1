//! CSV ingestion and PCA preprocessing.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::SideInfo;

/// A parsed input table.
#[derive(Debug, Clone)]
pub struct LoadedTable {
    pub data: Dataset,
    pub side: SideInfo,
    /// Category names in index order (first appearance in the label column).
    pub categories: Vec<String>,
}

/// Reads a comma-separated file with a header row.
///
/// Every column except `label_column` must be numeric. Label values are
/// mapped to category indices in order of first appearance; empty label
/// cells mark unlabeled points. Parse errors report 1-based data row and
/// column numbers.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<LoadedTable> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: Option<&str>) -> Result<LoadedTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("label column {name:?} not found in header")))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| Some(c) != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(Error::InvalidInput("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut categories: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: record.len().min(headers.len()) + 1,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for &c in &feature_cols {
            let cell = record[c].trim();
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("not a finite number: {cell:?}"),
                })?;
            values.push(v);
        }
        labels.push(label_idx.and_then(|c| {
            let cell = record[c].trim();
            (!cell.is_empty()).then(|| {
                *index.entry(cell.to_string()).or_insert_with(|| {
                    categories.push(cell.to_string());
                    categories.len() - 1
                })
            })
        }));
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::InvalidInput("input has no data rows".into()));
    }
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let data = Dataset::new(rows, feature_cols.len(), values)?.with_feature_names(names)?;
    let side = SideInfo::new(labels, categories.len())?;
    Ok(LoadedTable { data, side, categories })
}

/// Principal-component projection fitted on a dataset.
#[derive(Debug, Clone)]
pub struct Pca {
    mean: DVector<f64>,
    /// `d × N`, one unit eigenvector per row, by descending eigenvalue.
    components: DMatrix<f64>,
    /// All `N` eigenvalues of the sample covariance, descending.
    eigenvalues: Vec<f64>,
}

impl Pca {
    /// Fits the top `d` components. Each component's largest-magnitude
    /// entry is made positive.
    pub fn fit(data: &Dataset, d: usize) -> Result<Self> {
        if d == 0 || d > data.dims() {
            return Err(Error::Config(format!(
                "PCA dimension must lie in 1..={}, got {d}",
                data.dims()
            )));
        }
        let (mean, cov) = data.mean_and_covariance()?;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..data.dims()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut components = DMatrix::zeros(d, data.dims());
        for (row, &k) in order.iter().take(d).enumerate() {
            let mut v = eig.eigenvectors.column(k).clone_owned();
            let pivot = v.iamax();
            if v[pivot] < 0.0 {
                v.neg_mut();
            }
            components.set_row(row, &v.transpose());
        }
        Ok(Self {
            mean,
            components,
            eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        })
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn retained_variance(&self) -> f64 {
        self.eigenvalues[..self.components.nrows()].iter().sum()
    }

    /// Centers and projects `data`.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.dims() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: data.dims(),
            });
        }
        let d = self.components.nrows();
        let mut values = Vec::with_capacity(data.rows() * d);
        for row in data.iter_rows() {
            let centered = DVector::from_iterator(row.len(), row.iter().zip(self.mean.iter()).map(|(x, m)| x - m));
            values.extend((&self.components * centered).iter());
        }
        Dataset::new(data.rows(), d, values)?.with_feature_names((1..=d).map(|i| format!("pc{i}")).collect())
    }

    /// Maps projected points back to the original space.
    pub fn inverse_transform(&self, projected: &Dataset) -> Result<Dataset> {
        let n = self.mean.len();
        let mut values = Vec::with_capacity(projected.rows() * n);
        for row in projected.iter_rows() {
            let z = DVector::from_row_slice(row);
            values.extend((self.components.transpose() * z + &self.mean).iter());
        }
        Dataset::new(projected.rows(), n, values)
    }
}

/// Projects `data` onto its top `d` principal components.
pub fn pca_reduce(data: &Dataset, d: usize) -> Result<Dataset> {
    Pca::fit(data, d)?.transform(data)
}
