//! Critical weight `β₀` above which splitting a merged block of clusters
//! into its labeled sub-clusters does not raise the CEC-IB cost.
//!
//! For a block of clusters with weights `p_i` (summing to `q`), covariances
//! `Σ_i`, and a merged covariance `Σ`:
//!
//! ```text
//! β₀ = 1 + Σ_i (p_i / 2q) · ln(det Σ_i / det Σ)  /  H(p_1/q, …, p_l/q)
//! ```

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;

use crate::cost::accumulate_stats;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::{Clustering, SideInfo};
use crate::stats::{log_det_spd, model_of};

/// Variance of one half of a standard normal truncated at its mean: `1 − 2/π`.
pub fn truncated_half_variance() -> f64 {
    1.0 - 2.0 / PI
}

/// The clusters being merged and the covariance of their union.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeScenario {
    pub weights: Vec<f64>,
    pub covariances: Vec<DMatrix<f64>>,
    pub merged_covariance: DMatrix<f64>,
}

impl MergeScenario {
    pub fn new(weights: Vec<f64>, covariances: Vec<DMatrix<f64>>, merged_covariance: DMatrix<f64>) -> Result<Self> {
        if weights.len() != covariances.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: covariances.len(),
            });
        }
        if weights.len() < 2 {
            return Err(Error::InvalidInput("a merged block needs at least two clusters".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("cluster weights must be positive".into()));
        }
        let dims = merged_covariance.nrows();
        if covariances.iter().any(|c| c.nrows() != dims || c.ncols() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: covariances
                    .iter()
                    .map(|c| c.nrows())
                    .find(|&r| r != dims)
                    .unwrap_or(dims),
            });
        }
        Ok(Self {
            weights,
            covariances,
            merged_covariance,
        })
    }

    /// Two equally weighted one-dimensional halves with variance `half_variance`
    /// each, merged into a unit-variance cluster.
    pub fn equal_halves_1d(half_variance: f64) -> Result<Self> {
        let half = DMatrix::from_element(1, 1, half_variance);
        Self::new(vec![0.5, 0.5], vec![half.clone(), half], DMatrix::identity(1, 1))
    }
}

/// `β₀` for a merge scenario.
pub fn beta_threshold(scenario: &MergeScenario) -> Result<f64> {
    let q: f64 = scenario.weights.iter().sum();
    let merged = log_det_spd(&scenario.merged_covariance)?;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (&p, cov) in scenario.weights.iter().zip(&scenario.covariances) {
        let r = p / q;
        numerator += r / 2.0 * (log_det_spd(cov)? - merged);
        denominator -= r * r.ln();
    }
    if denominator <= f64::EPSILON {
        return Err(Error::degenerate(None, "merged block has zero weight entropy"));
    }
    Ok(1.0 + numerator / denominator)
}

/// `β₀ = 1 + ln √(1 − 2/π) / ln 2` for a one-dimensional Gaussian split
/// into equal halves at its mean.
pub fn beta0_gaussian_halves() -> f64 {
    1.0 + truncated_half_variance().sqrt().ln() / LN_2
}

/// `β₀` from the sample statistics of the clusters in `merged_block` and of
/// their union.
pub fn empirical_beta_threshold(
    data: &Dataset,
    clustering: &Clustering,
    merged_block: &[usize],
    ridge: f64,
) -> Result<f64> {
    let stats = accumulate_stats(data, clustering, None)?;
    let n = data.rows() as f64;
    let mut weights = Vec::with_capacity(merged_block.len());
    let mut covariances = Vec::with_capacity(merged_block.len());
    let mut union = Vec::new();
    for &c in merged_block {
        let s = stats
            .get(c)
            .ok_or_else(|| Error::InvalidInput(format!("no cluster {c}")))?;
        let model = model_of(s, ridge).map_err(|e| match e {
            Error::Degenerate { reason, .. } => Error::degenerate(Some(c), reason),
            other => other,
        })?;
        weights.push(s.count() as f64 / n);
        covariances.push(model.covariance().clone());
        union.extend(clustering.members(c));
    }
    let merged = crate::stats::ClusterStats::from_points(data.dims(), 0, union.iter().map(|&i| (data.row(i), None)))?;
    let merged_covariance = model_of(&merged, ridge)?.covariance().clone();
    beta_threshold(&MergeScenario::new(weights, covariances, merged_covariance)?)
}

/// Clustering obtained by merging all clusters of `block` into one
/// (the lowest index in the block survives; indices are then compacted).
pub fn merge_clusters(clustering: &Clustering, block: &[usize]) -> Result<Clustering> {
    let Some(&target) = block.iter().min() else {
        return Err(Error::InvalidInput("empty merge block".into()));
    };
    if let Some(&bad) = block.iter().find(|&&c| c >= clustering.k()) {
        return Err(Error::InvalidInput(format!("no cluster {bad}")));
    }
    let merged: Vec<usize> = clustering
        .assignment()
        .iter()
        .map(|&c| if block.contains(&c) { target } else { c })
        .collect();
    Ok(Clustering::from_assignment(merged).canonical())
}

/// Side information equal to the clustering itself (every point labeled by its cluster).
pub fn side_from_clustering(clustering: &Clustering) -> SideInfo {
    SideInfo::fully_labeled(clustering.assignment())
}
