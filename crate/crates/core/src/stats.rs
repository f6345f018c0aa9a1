//! Incremental Gaussian sufficient statistics for one cluster and the
//! Gaussian models they induce.
//!
//! The scatter matrix (sum of centered outer products) is kept rather than
//! the covariance so that inserting or removing a point is an exact rank-one
//! update:
//!
//! ```text
//! add:    S' = S + n/(n+1) · δδᵀ,   δ = x − μ
//! remove: S' = S − n/(n−1) · δδᵀ,   δ = x − μ
//! ```

use std::f64::consts::{E, PI};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::partition::entropy_of_counts;

/// Number of incremental updates after which a cluster's statistics should
/// be rebuilt from its members to bound floating-point drift.
pub const REFRESH_INTERVAL: usize = 10_000;

/// Sufficient statistics of one cluster: count, mean, scatter and
/// per-category labeled counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    count: usize,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    labeled_count: usize,
    category_counts: Vec<usize>,
    updates: usize,
}

impl ClusterStats {
    /// Empty statistics for `dims`-dimensional points and `categories` label categories.
    pub fn new(dims: usize, categories: usize) -> Self {
        Self {
            count: 0,
            mean: DVector::zeros(dims),
            scatter: DMatrix::zeros(dims, dims),
            labeled_count: 0,
            category_counts: vec![0; categories],
            updates: 0,
        }
    }

    /// Batch construction (two-pass mean then scatter).
    pub fn from_points<'a, I>(dims: usize, categories: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], Option<usize>)>,
    {
        let points: Vec<_> = points.into_iter().collect();
        let mut stats = Self::new(dims, categories);
        for &(x, label) in &points {
            stats.check_point(x, label)?;
            for (m, v) in stats.mean.iter_mut().zip(x) {
                *m += v;
            }
            if let Some(j) = label {
                stats.category_counts[j] += 1;
                stats.labeled_count += 1;
            }
        }
        stats.count = points.len();
        if stats.count == 0 {
            return Ok(stats);
        }
        stats.mean /= stats.count as f64;
        let mut d = DVector::zeros(dims);
        for &(x, _) in &points {
            for ((di, xi), mi) in d.iter_mut().zip(x).zip(stats.mean.iter()) {
                *di = xi - mi;
            }
            stats.scatter.ger(1.0, &d, &d, 1.0);
        }
        Ok(stats)
    }

    fn check_point(&self, x: &[f64], label: Option<usize>) -> Result<()> {
        if x.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: x.len(),
            });
        }
        if let Some(j) = label {
            if j >= self.category_counts.len() {
                return Err(Error::InvalidInput(format!(
                    "category {j} out of range (m = {})",
                    self.category_counts.len()
                )));
            }
        }
        Ok(())
    }

    /// Inserts one point with an optional category label.
    pub fn add_point(&mut self, x: &[f64], label: Option<usize>) -> Result<()> {
        self.check_point(x, label)?;
        let n = self.count as f64;
        let delta = DVector::from_iterator(self.dims(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        self.count += 1;
        self.mean.axpy(1.0 / (n + 1.0), &delta, 1.0);
        self.scatter.ger(n / (n + 1.0), &delta, &delta, 1.0);
        if let Some(j) = label {
            self.category_counts[j] += 1;
            self.labeled_count += 1;
        }
        self.updates += 1;
        Ok(())
    }

    /// Removes a point previously inserted with the same label.
    pub fn remove_point(&mut self, x: &[f64], label: Option<usize>) -> Result<()> {
        if self.count == 0 {
            return Err(Error::EmptyCluster);
        }
        self.check_point(x, label)?;
        if let Some(j) = label {
            if self.category_counts[j] == 0 {
                return Err(Error::Precondition(format!("no point labeled {j} left in cluster")));
            }
            self.category_counts[j] -= 1;
            self.labeled_count -= 1;
        }
        self.updates += 1;
        if self.count == 1 {
            self.count = 0;
            self.mean.fill(0.0);
            self.scatter.fill(0.0);
            return Ok(());
        }
        let n = self.count as f64;
        let delta = DVector::from_iterator(self.dims(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        self.count -= 1;
        self.mean.axpy(-1.0 / (n - 1.0), &delta, 1.0);
        self.scatter.ger(-n / (n - 1.0), &delta, &delta, 1.0);
        Ok(())
    }

    /// Copy with one more point.
    pub fn with_point(&self, x: &[f64], label: Option<usize>) -> Result<Self> {
        let mut s = self.clone();
        s.add_point(x, label)?;
        Ok(s)
    }

    /// Copy with one point fewer.
    pub fn without_point(&self, x: &[f64], label: Option<usize>) -> Result<Self> {
        let mut s = self.clone();
        s.remove_point(x, label)?;
        Ok(s)
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn scatter(&self) -> &DMatrix<f64> {
        &self.scatter
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled_count
    }

    pub fn category_counts(&self) -> &[usize] {
        &self.category_counts
    }

    /// Incremental updates applied since construction.
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Maximum-likelihood covariance `scatter / count`, if non-empty.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        (self.count > 0).then(|| &self.scatter / self.count as f64)
    }

    /// `H(Z | Y ∩ X_ℓ)` for this cluster; zero when it holds no labeled point.
    pub fn label_entropy(&self) -> f64 {
        entropy_of_counts(self.category_counts.iter().copied())
    }

    /// Largest elementwise difference in mean and scatter, plus whether the counts agree.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.count != other.count
            || self.labeled_count != other.labeled_count
            || self.category_counts != other.category_counts
        {
            return None;
        }
        Some(
            (&self.mean - &other.mean)
                .amax()
                .max((&self.scatter - &other.scatter).amax()),
        )
    }
}

/// Gaussian density with a validated positive-definite covariance.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl GaussianModel {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: covariance.nrows(),
            });
        }
        let cholesky = Cholesky::new(covariance.clone())
            .ok_or_else(|| Error::degenerate(None, "covariance is not positive definite"))?;
        let log_det = cholesky_log_det(&cholesky);
        if !log_det.is_finite() {
            return Err(Error::degenerate(None, "covariance determinant underflows"));
        }
        Ok(Self {
            mean,
            covariance,
            cholesky,
            log_det,
        })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower-triangular Cholesky factor of the covariance.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.cholesky.l()
    }

    /// Natural log of `det Σ`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        gaussian_entropy(self)
    }
}

fn cholesky_log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    ch.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
}

/// `ln det A` for a symmetric positive-definite matrix.
pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    let ch = Cholesky::new(a.clone()).ok_or_else(|| Error::degenerate(None, "matrix is not positive definite"))?;
    Ok(cholesky_log_det(&ch))
}

/// `H(N(μ, Σ)) = N/2 · ln(2πe) + ½ ln det Σ`.
pub fn gaussian_entropy(model: &GaussianModel) -> f64 {
    entropy_from_log_det(model.dims(), model.log_det)
}

pub(crate) fn entropy_from_log_det(dims: usize, log_det: f64) -> f64 {
    0.5 * dims as f64 * (2.0 * PI * E).ln() + 0.5 * log_det
}

/// Entropy of a Gaussian with the given covariance.
pub fn covariance_entropy(covariance: &DMatrix<f64>) -> Result<f64> {
    Ok(entropy_from_log_det(covariance.nrows(), log_det_spd(covariance)?))
}

/// Maximum-likelihood Gaussian of a cluster, with `ridge · I` added to the covariance.
pub fn model_of(stats: &ClusterStats, ridge: f64) -> Result<GaussianModel> {
    if stats.count() < 2 {
        return Err(Error::degenerate(
            None,
            format!("cluster has {} point(s); at least 2 required", stats.count()),
        ));
    }
    let mut cov = &stats.scatter / stats.count as f64;
    for i in 0..cov.nrows() {
        cov[(i, i)] += ridge;
    }
    GaussianModel::new(stats.mean.clone(), cov)
}

/// Entropy of [`model_of`] without keeping the model around.
pub fn model_entropy(stats: &ClusterStats, ridge: f64) -> Result<f64> {
    model_of(stats, ridge).map(|m| m.entropy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent two-pass oracle over an explicit point list.
    fn batch(points: &[Vec<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let dims = points[0].len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; dims];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / n;
            }
        }
        let mut s = DMatrix::zeros(dims, dims);
        for p in points {
            for a in 0..dims {
                for b in 0..dims {
                    s[(a, b)] += (p[a] - mean[a]) * (p[b] - mean[b]);
                }
            }
        }
        (DVector::from_vec(mean), s)
    }

    fn square() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]]
    }

    #[test]
    fn single_point_has_zero_scatter() {
        let mut s = ClusterStats::new(2, 0);
        s.add_point(&[0.0, 0.0], None).unwrap();
        assert_eq!(s.count(), 1);
        assert_eq!(s.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(s.scatter().amax(), 0.0);
    }

    #[test]
    fn two_scalars() {
        let mut s = ClusterStats::new(1, 0);
        s.add_point(&[0.0], None).unwrap();
        s.add_point(&[2.0], None).unwrap();
        assert_eq!(s.mean()[0], 1.0);
        assert_eq!(s.scatter()[(0, 0)], 2.0);
        assert_eq!(s.covariance().unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn square_gives_identity_covariance() {
        let mut s = ClusterStats::new(2, 0);
        for p in square() {
            s.add_point(&p, None).unwrap();
        }
        assert!((s.mean() - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-15);
        assert!((s.covariance().unwrap() - DMatrix::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn remove_restores_previous_state() {
        let mut s = ClusterStats::new(1, 0);
        s.add_point(&[0.0], None).unwrap();
        s.add_point(&[2.0], None).unwrap();
        s.remove_point(&[2.0], None).unwrap();
        assert_eq!(s.count(), 1);
        assert_eq!(s.mean()[0], 0.0);
        assert_eq!(s.scatter()[(0, 0)], 0.0);
    }

    #[test]
    fn remove_corner_matches_batch_of_rest() {
        let pts = square();
        let mut s = ClusterStats::new(2, 0);
        for p in &pts {
            s.add_point(p, None).unwrap();
        }
        s.remove_point(&pts[3], None).unwrap();
        let (m, sc) = batch(&pts[..3]);
        assert!((s.mean() - m).amax() < 1e-12);
        assert!((s.scatter() - sc).amax() < 1e-12);
    }

    #[test]
    fn remove_from_empty_fails() {
        let mut s = ClusterStats::new(2, 0);
        assert!(matches!(s.remove_point(&[0.0, 0.0], None), Err(Error::EmptyCluster)));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut s = ClusterStats::new(2, 0);
        assert!(matches!(
            s.add_point(&[0.0], None),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn labels_are_counted() {
        let mut s = ClusterStats::new(1, 2);
        s.add_point(&[0.0], Some(1)).unwrap();
        s.add_point(&[1.0], None).unwrap();
        s.add_point(&[2.0], Some(0)).unwrap();
        assert_eq!(s.labeled_count(), 2);
        assert_eq!(s.category_counts(), &[1, 1]);
        assert!((s.label_entropy() - 2f64.ln()).abs() < 1e-15);
        assert!(s.add_point(&[0.0], Some(2)).is_err());
        s.remove_point(&[0.0], Some(1)).unwrap();
        assert_eq!(s.category_counts(), &[1, 0]);
        assert!(s.remove_point(&[0.0], Some(1)).is_err());
    }

    #[test]
    fn entropy_values() {
        let unit = GaussianModel::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        assert!((gaussian_entropy(&unit) - 1.418_938_533_204_672_7).abs() < 1e-12);
        let id2 = GaussianModel::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!((gaussian_entropy(&id2) - 2.837_877_066_409_345_5).abs() < 1e-12);
        let truncated = 1.0 - 2.0 / PI;
        let half = GaussianModel::new(DVector::zeros(1), DMatrix::from_element(1, 1, truncated)).unwrap();
        let expected = 0.5 * (2.0 * PI * E).ln() + 0.5 * truncated.ln();
        assert!((gaussian_entropy(&half) - expected).abs() < 1e-12);
        assert!((gaussian_entropy(&half) - 0.912_785_766).abs() < 1e-8);
    }

    #[test]
    fn non_pd_covariance_is_degenerate() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            GaussianModel::new(DVector::zeros(2), cov),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn model_of_square() {
        let s = ClusterStats::from_points(2, 0, square().iter().map(|p| (p.as_slice(), None))).unwrap();
        let m = model_of(&s, 0.0).unwrap();
        assert!((m.covariance() - DMatrix::identity(2, 2)).amax() < 1e-15);
        assert!(m.log_det().abs() < 1e-15);
    }

    #[test]
    fn model_of_needs_two_points() {
        let s = ClusterStats::from_points(2, 0, [([1.0, 2.0].as_slice(), None)]).unwrap();
        assert!(matches!(model_of(&s, 1e-6), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn ridge_rescues_zero_scatter() {
        let p = [3.0, -1.0];
        let s = ClusterStats::from_points(2, 0, (0..5).map(|_| (p.as_slice(), None))).unwrap();
        assert!(model_of(&s, 0.0).is_err());
        let m = model_of(&s, 1e-6).unwrap();
        assert!((m.covariance() - DMatrix::identity(2, 2) * 1e-6).amax() < 1e-20);
        assert!((m.log_det() - 2.0 * 1e-6f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn entropy_monotone_in_each_eigenvalue() {
        let base = [0.5, 1.0, 2.0];
        for axis in 0..3 {
            let mut prev = f64::NEG_INFINITY;
            for scale in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let mut d = base;
                d[axis] *= scale;
                let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&d));
                let h = covariance_entropy(&cov).unwrap();
                assert!(h > prev);
                prev = h;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Random add/remove sequences agree with batch recomputation.
        #[test]
        fn incremental_matches_batch(
            dims in 1usize..=10,
            seed_points in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 10), 40..80),
            ops in prop::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 1000..1200),
        ) {
            let pool: Vec<Vec<f64>> = seed_points.iter().map(|p| p[..dims].to_vec()).collect();
            let mut stats = ClusterStats::new(dims, 0);
            let mut live: Vec<usize> = Vec::new();
            for (add, idx) in ops {
                if add || live.is_empty() {
                    let i = idx.index(pool.len());
                    stats.add_point(&pool[i], None).unwrap();
                    live.push(i);
                } else {
                    let pos = idx.index(live.len());
                    let i = live.swap_remove(pos);
                    stats.remove_point(&pool[i], None).unwrap();
                }
                prop_assert_eq!(stats.count(), live.len());
            }
            if live.is_empty() {
                prop_assert_eq!(stats.scatter().amax(), 0.0);
            } else {
                let pts: Vec<Vec<f64>> = live.iter().map(|&i| pool[i].clone()).collect();
                let (m, s) = batch(&pts);
                prop_assert!((stats.mean() - m).amax() < 1e-8);
                prop_assert!((stats.scatter() - &s).amax() < 1e-8 * (1.0 + s.amax()));
            }
        }

        #[test]
        fn log_det_matches_cholesky_diagonal(vals in prop::collection::vec(-3.0f64..3.0, 9), shift in 0.1f64..5.0) {
            let a = DMatrix::from_row_slice(3, 3, &vals);
            let spd = &a * a.transpose() + DMatrix::identity(3, 3) * shift;
            let m = GaussianModel::new(DVector::zeros(3), spd).unwrap();
            let l = m.cholesky_factor();
            let direct: f64 = (0..3).map(|i| 2.0 * l[(i, i)].ln()).sum();
            prop_assert!((m.log_det() - direct).abs() < 1e-10);
        }
    }
}
