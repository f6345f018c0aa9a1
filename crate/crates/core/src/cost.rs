//! Clustering cost functions.
//!
//! The CEC-IB cost of a clustering `Y` of `X` with side information `Z` is
//!
//! ```text
//! E_β(X, Z; Y) = H(Y) + Σ_i (|Y_i|/|X|) · ( H(N(μ_i, Σ_i)) + β · H(Z | Y_i ∩ X_ℓ) )
//! ```
//!
//! and decomposes into per-cluster terms
//! `E_β(Y) = (|Y|/|X|) · (−ln(|Y|/|X|) + H(N(μ_Y, Σ_Y)) + β · H(Z | Y ∩ X_ℓ))`.
//! With `β = 0` it is the plain cross-entropy clustering cost.
//!
//! Every Gaussian is the maximum-likelihood fit with `ridge · I` added to its
//! covariance, so costs agree with what the optimizer minimizes.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::{entropy_of_counts, Clustering, SideInfo};
use crate::stats::{model_entropy, ClusterStats};

/// The three cost terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// `H(Y)`
    pub partition_term: f64,
    /// `Σ (|Y_i|/|X|) · H(N(μ_i, Σ_i))`
    pub model_term: f64,
    /// `H(Z|Y)`, unweighted
    pub side_term: f64,
    pub beta: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(partition_term: f64, model_term: f64, side_term: f64, beta: f64) -> Self {
        Self {
            partition_term,
            model_term,
            side_term,
            beta,
            total: partition_term + model_term + beta * side_term,
        }
    }

    /// `β · H(Z|Y)`, the side term's contribution to the total.
    pub fn weighted_side(&self) -> f64 {
        self.beta * self.side_term
    }
}

/// Fixed quantities needed to score a single cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostContext {
    pub n_total: usize,
    pub beta: f64,
    pub ridge: f64,
}

impl CostContext {
    pub fn new(n_total: usize, beta: f64, ridge: f64) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        check_beta(beta)?;
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::Config(format!("ridge must be non-negative, got {ridge}")));
        }
        Ok(Self { n_total, beta, ridge })
    }

    /// `E_β(Y)` from the cluster's sufficient statistics.
    pub fn cluster_cost(&self, stats: &ClusterStats) -> Result<f64> {
        let p = stats.count() as f64 / self.n_total as f64;
        let h = model_entropy(stats, self.ridge)?;
        Ok(p * (-p.ln() + h + self.beta * stats.label_entropy()))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must be a non-negative number, got {beta}")));
    }
    Ok(())
}

fn check_shapes(data: &Dataset, clustering: &Clustering, side: Option<&SideInfo>) -> Result<()> {
    if data.rows() != clustering.len() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            found: clustering.len(),
        });
    }
    if let Some(side) = side {
        if side.len() != data.rows() {
            return Err(Error::DimensionMismatch {
                expected: data.rows(),
                found: side.len(),
            });
        }
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("dataset is empty".into()));
    }
    Ok(())
}

/// Statistics of every cluster, accumulated in one pass over the data.
pub fn accumulate_stats(data: &Dataset, clustering: &Clustering, side: Option<&SideInfo>) -> Result<Vec<ClusterStats>> {
    check_shapes(data, clustering, side)?;
    let categories = side.map_or(0, SideInfo::categories);
    let mut stats = vec![ClusterStats::new(data.dims(), categories); clustering.k()];
    for (i, &c) in clustering.assignment().iter().enumerate() {
        stats[c].add_point(data.row(i), side.and_then(|s| s.label(i)))?;
    }
    Ok(stats)
}

/// Statistics of every cluster, each rebuilt with the two-pass batch formula.
pub fn batch_stats(data: &Dataset, clustering: &Clustering, side: Option<&SideInfo>) -> Result<Vec<ClusterStats>> {
    check_shapes(data, clustering, side)?;
    let categories = side.map_or(0, SideInfo::categories);
    (0..clustering.k())
        .map(|c| {
            let members = clustering.members(c);
            ClusterStats::from_points(
                data.dims(),
                categories,
                members.iter().map(|&i| (data.row(i), side.and_then(|s| s.label(i)))),
            )
        })
        .collect()
}

fn breakdown(stats: &[ClusterStats], n: usize, beta: f64, ridge: f64, with_side: bool) -> Result<CostBreakdown> {
    let nf = n as f64;
    let mut model_term = 0.0;
    let mut side_term = 0.0;
    for (c, s) in stats.iter().enumerate() {
        if s.count() == 0 {
            return Err(Error::degenerate(Some(c), "cluster is empty"));
        }
        let p = s.count() as f64 / nf;
        let h = model_entropy(s, ridge).map_err(|e| match e {
            Error::Degenerate { reason, .. } => Error::degenerate(Some(c), reason),
            other => other,
        })?;
        model_term += p * h;
        if with_side {
            side_term += p * s.label_entropy();
        }
    }
    let partition_term = entropy_of_counts(stats.iter().map(ClusterStats::count));
    Ok(CostBreakdown::new(partition_term, model_term, side_term, beta))
}

/// Cross-entropy clustering cost `H(Y) + Σ (|Y_i|/|X|) H(N(μ_i, Σ_i))`.
pub fn cec_cost(data: &Dataset, clustering: &Clustering, ridge: f64) -> Result<CostBreakdown> {
    let stats = accumulate_stats(data, clustering, None)?;
    breakdown(&stats, data.rows(), 0.0, ridge, false)
}

/// CEC-IB cost with partial side information.
///
/// `side_term` always holds `H(Z|Y)` (zero when nothing is labeled), even
/// for `β = 0`, where it does not contribute to the total.
pub fn cecib_cost(
    data: &Dataset,
    clustering: &Clustering,
    side: &SideInfo,
    beta: f64,
    ridge: f64,
) -> Result<CostBreakdown> {
    check_beta(beta)?;
    let stats = accumulate_stats(data, clustering, Some(side))?;
    breakdown(&stats, data.rows(), beta, ridge, true)
}

/// `E_β(Y)` of the cluster made of `points` (indices into `data`), relative to `n_total` points.
pub fn cluster_cost(
    data: &Dataset,
    points: &[usize],
    side: &SideInfo,
    beta: f64,
    n_total: usize,
    ridge: f64,
) -> Result<f64> {
    if side.len() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            found: side.len(),
        });
    }
    if let Some(&bad) = points.iter().find(|&&i| i >= data.rows()) {
        return Err(Error::InvalidInput(format!("point index {bad} out of range")));
    }
    let stats = ClusterStats::from_points(
        data.dims(),
        side.categories(),
        points.iter().map(|&i| (data.row(i), side.label(i))),
    )?;
    CostContext::new(n_total, beta, ridge)?.cluster_cost(&stats)
}

/// Conditional cross-entropy `Σ_j (|Z_j|/|X|) · H×(Z_j ‖ f_{|j})` with
/// category-dependent weights `p_i(j) = |Z_j ∩ Y_i| / |Z_j|` and shared
/// maximum-likelihood Gaussians. Defined only for fully labeled data.
pub fn conditional_cross_entropy(data: &Dataset, clustering: &Clustering, side: &SideInfo, ridge: f64) -> Result<f64> {
    if !side.is_fully_labeled() {
        return Err(Error::Unsupported(
            "conditional cross-entropy requires every point to be labeled".into(),
        ));
    }
    let stats = accumulate_stats(data, clustering, Some(side))?;
    let model_term = breakdown(&stats, data.rows(), 0.0, ridge, false)?.model_term;
    let n = data.rows() as f64;
    let category_sizes = side.category_sizes();
    let mut weight_term = 0.0;
    for s in &stats {
        for (&joint, &zj) in s.category_counts().iter().zip(&category_sizes) {
            if joint > 0 {
                weight_term -= joint as f64 / n * (joint as f64 / zj as f64).ln();
            }
        }
    }
    Ok(weight_term + model_term)
}
