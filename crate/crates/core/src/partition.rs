//! Hard partitions, partition-level side information and the discrete
//! entropies and structural predicates defined over them.
//!
//! All entropies are in nats and use the convention `0 · ln 0 = 0`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Shannon entropy of the empirical distribution given by `counts`.
/// Returns 0 when all counts are zero.
pub fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Partition-level side information: an optional category per point.
///
/// The labeled points form `X_ℓ`; the categories partition it into
/// `Z_1, …, Z_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideInfo {
    labels: Vec<Option<usize>>,
    categories: usize,
}

impl SideInfo {
    pub fn new(labels: Vec<Option<usize>>, categories: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().flatten().find(|&&j| j >= categories) {
            return Err(Error::InvalidInput(format!(
                "category {bad} out of range (m = {categories})"
            )));
        }
        Ok(Self { labels, categories })
    }

    /// No point labeled.
    pub fn unlabeled(n: usize) -> Self {
        Self {
            labels: vec![None; n],
            categories: 0,
        }
    }

    /// Every point labeled; `m` is one past the largest label.
    pub fn fully_labeled(labels: &[usize]) -> Self {
        let categories = labels.iter().max().map_or(0, |m| m + 1);
        Self {
            labels: labels.iter().map(|&j| Some(j)).collect(),
            categories,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().flatten().count()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    /// `|Z_j|` for every category.
    pub fn category_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.categories];
        for &j in self.labels.iter().flatten() {
            sizes[j] += 1;
        }
        sizes
    }

    /// The categories as a clustering of the labeled points only
    /// (`None` unless every point is labeled).
    pub fn as_clustering(&self) -> Option<Clustering> {
        let assignment: Option<Vec<usize>> = self.labels.iter().copied().collect();
        assignment.map(|a| Clustering {
            assignment: a,
            k: self.categories,
        })
    }
}

/// Hard assignment of every point to one of `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    k: usize,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(bad) = assignment.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidInput(format!(
                "cluster index {bad} out of range (k = {k})"
            )));
        }
        Ok(Self { assignment, k })
    }

    /// `k` is one past the largest index.
    pub fn from_assignment(assignment: Vec<usize>) -> Self {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Self { assignment, k }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == cluster)
            .collect()
    }

    /// Number of clusters holding at least one point.
    pub fn non_empty(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Relabels clusters to `0..k'` in order of first appearance, dropping empty ones.
    pub fn canonical(&self) -> Self {
        let mut map = HashMap::new();
        let assignment = self
            .assignment
            .iter()
            .map(|&c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            k: map.len(),
        }
    }

    /// Per-cluster, per-category counts `|Y_i ∩ Z_j|`.
    pub fn contingency(&self, side: &SideInfo) -> Result<Vec<Vec<usize>>> {
        check_lengths(self, side)?;
        let mut table = vec![vec![0usize; side.categories()]; self.k];
        for (&c, label) in self.assignment.iter().zip(side.labels()) {
            if let Some(j) = label {
                table[c][*j] += 1;
            }
        }
        Ok(table)
    }
}

fn check_lengths(clustering: &Clustering, side: &SideInfo) -> Result<()> {
    if clustering.len() != side.len() {
        return Err(Error::DimensionMismatch {
            expected: clustering.len(),
            found: side.len(),
        });
    }
    Ok(())
}

/// `H(Y) = −Σ (|Y_i|/|X|) ln(|Y_i|/|X|)`.
pub fn partition_entropy(clustering: &Clustering) -> Result<f64> {
    if clustering.is_empty() {
        return Err(Error::InvalidInput("empty clustering".into()));
    }
    Ok(entropy_of_counts(clustering.sizes()))
}

/// `H(Z|Y) = Σ_i (|Y_i|/|X|) · H(Z | Y_i ∩ X_ℓ)`.
///
/// The label distribution observed on the labeled members of each cluster
/// is extrapolated to the whole cluster. Clusters with no labeled member
/// contribute zero.
pub fn conditional_entropy(clustering: &Clustering, side: &SideInfo) -> Result<f64> {
    let table = clustering.contingency(side)?;
    if side.labeled_count() == 0 {
        return Err(Error::InvalidInput(
            "conditional entropy needs at least one labeled point".into(),
        ));
    }
    let n = clustering.len() as f64;
    Ok(clustering
        .sizes()
        .iter()
        .zip(&table)
        .map(|(&size, row)| size as f64 / n * entropy_of_counts(row.iter().copied()))
        .sum())
}

/// True iff every cluster intersects at most one category.
pub fn is_consistent(clustering: &Clustering, side: &SideInfo) -> bool {
    match clustering.contingency(side) {
        Ok(table) => table.iter().all(|row| row.iter().filter(|&&c| c > 0).count() <= 1),
        Err(_) => false,
    }
}

/// True iff `| |Y_i|/|X| − |Y_i ∩ X_ℓ|/|X_ℓ| | ≤ tol` for every cluster.
/// Returns false when nothing is labeled.
pub fn is_proportional(clustering: &Clustering, side: &SideInfo, tol: f64) -> bool {
    let Ok(table) = clustering.contingency(side) else {
        return false;
    };
    let labeled = side.labeled_count();
    if labeled == 0 {
        return false;
    }
    let n = clustering.len() as f64;
    clustering.sizes().iter().zip(&table).all(|(&size, row)| {
        let in_labeled: usize = row.iter().sum();
        (size as f64 / n - in_labeled as f64 / labeled as f64).abs() <= tol
    })
}

/// True iff every non-empty cluster of `fine` lies inside a single cluster of `coarse`.
pub fn is_coarsening(coarse: &Clustering, fine: &Clustering) -> bool {
    if coarse.len() != fine.len() {
        return false;
    }
    let mut owner: Vec<Option<usize>> = vec![None; fine.k()];
    for (&f, &c) in fine.assignment().iter().zip(coarse.assignment()) {
        match owner[f] {
            None => owner[f] = Some(c),
            Some(o) if o != c => return false,
            _ => {}
        }
    }
    true
}

/// `H(Z)` over the labeled points.
pub fn category_entropy(side: &SideInfo) -> f64 {
    entropy_of_counts(side.category_sizes())
}

/// `H(Z, Y) = −Σ_ij (|Y_i ∩ Z_j|/|X_ℓ|) ln(|Y_i ∩ Z_j|/|X_ℓ|)` over the labeled points.
pub fn joint_entropy(clustering: &Clustering, side: &SideInfo) -> Result<f64> {
    let table = clustering.contingency(side)?;
    Ok(entropy_of_counts(table.into_iter().flatten()))
}

/// Both sides of the chain rule `H(Y) + H(Z|Y) = H(Z,Y)`, which holds for
/// clusterings proportional to the side information.
pub fn joint_entropy_check(clustering: &Clustering, side: &SideInfo) -> Result<(f64, f64)> {
    if !is_proportional(clustering, side, 1e-9) {
        return Err(Error::Precondition(
            "clustering is not proportional to the side information".into(),
        ));
    }
    let lhs = partition_entropy(clustering)? + conditional_entropy(clustering, side)?;
    let rhs = joint_entropy(clustering, side)?;
    Ok((lhs, rhs))
}
