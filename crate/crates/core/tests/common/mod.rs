#![allow(dead_code)]

use cecib::{Clustering, Dataset, SideInfo};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points with independently scaled and shifted normal coordinates.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dims: usize) -> Vec<Vec<f64>> {
    let scales: Vec<f64> = (0..dims).map(|_| rng.random_range(0.5..3.0)).collect();
    (0..n)
        .map(|_| {
            (0..dims)
                .map(|d| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * scales[d] + rng.random_range(-1.0..1.0)
                })
                .collect()
        })
        .collect()
}

pub fn dataset(points: &[Vec<f64>]) -> Dataset {
    Dataset::from_rows(points).unwrap()
}

/// Assignment of `n` points to `k` blocks, each with at least `min` members.
pub fn random_assignment(rng: &mut ChaCha8Rng, n: usize, k: usize, min: usize) -> Vec<usize> {
    assert!(n >= k * min);
    let mut a: Vec<usize> = (0..k).flat_map(|c| std::iter::repeat_n(c, min)).collect();
    a.extend((a.len()..n).map(|_| rng.random_range(0..k)));
    a.shuffle(rng);
    a
}

/// Random grouping of `m` blocks into `k ≤ m` non-empty groups.
pub fn random_grouping(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..k).collect();
    g.extend((k..m).map(|_| rng.random_range(0..k)));
    g.shuffle(rng);
    g
}

/// Naive covariance `(1/n) Σ (x − μ)(x − μ)ᵀ` of the selected rows.
pub fn naive_covariance(points: &[Vec<f64>], members: &[usize]) -> DMatrix<f64> {
    let dims = points[0].len();
    let n = members.len() as f64;
    let mut mean = DVector::zeros(dims);
    for &i in members {
        mean += DVector::from_column_slice(&points[i]);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(dims, dims);
    for &i in members {
        let d = DVector::from_column_slice(&points[i]) - &mean;
        cov += &d * d.transpose();
    }
    cov / n
}

/// Gaussian differential entropy via the LU determinant.
pub fn naive_gaussian_entropy(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows() as f64;
    let det = cov.clone().determinant();
    assert!(det > 0.0, "covariance not positive definite");
    0.5 * n * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + 0.5 * det.ln()
}

pub fn plogp_sum(counts: &[usize], total: usize) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum()
}

/// `H(Y) + Σ (|Y_i|/n) H(N(μ_i, Σ_i)) + β · H(Z|Y)` for complete side
/// information, evaluated directly from the definitions.
pub fn naive_complete_label_cost(points: &[Vec<f64>], clusters: &[usize], labels: &[usize], beta: f64) -> f64 {
    let n = points.len();
    let k = clusters.iter().max().unwrap() + 1;
    let m = labels.iter().max().unwrap() + 1;
    let sizes: Vec<usize> = (0..k).map(|c| clusters.iter().filter(|&&x| x == c).count()).collect();
    let mut cost = plogp_sum(&sizes, n);
    for (c, &size) in sizes.iter().enumerate() {
        if size == 0 {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| clusters[i] == c).collect();
        cost += size as f64 / n as f64 * naive_gaussian_entropy(&naive_covariance(points, &members));
        for j in 0..m {
            let joint = members.iter().filter(|&&i| labels[i] == j).count();
            if joint > 0 {
                cost -= beta * joint as f64 / n as f64 * (joint as f64 / size as f64).ln();
            }
        }
    }
    cost
}

pub fn clustering(a: Vec<usize>) -> Clustering {
    Clustering::from_assignment(a)
}

pub fn full_side(labels: &[usize]) -> SideInfo {
    SideInfo::fully_labeled(labels)
}

/// A fully labeled instance whose clustering is a coarsening of the labels.
pub struct CoarseningInstance {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub fine: Vec<usize>,
    pub coarse: Vec<usize>,
}

/// Categories of at least `dims + 3` points drawn around separate centers,
/// grouped into a fine clustering, two of whose clusters are then merged.
pub fn coarsening_instance(rng: &mut ChaCha8Rng, max_n: usize, max_dims: usize) -> CoarseningInstance {
    let dims = rng.random_range(1..=max_dims);
    let min = dims + 3;
    let m = rng.random_range(2..=(max_n / min).min(6));
    let n = rng.random_range(m * min..=max_n);
    let labels = random_assignment(rng, n, m, min);
    let centers = random_points(rng, m, dims);
    let mut points = random_points(rng, n, dims);
    for (p, &z) in points.iter_mut().zip(&labels) {
        for (x, c) in p.iter_mut().zip(&centers[z]) {
            *x += 3.0 * c;
        }
    }
    let k = rng.random_range(2..=m);
    let group = random_grouping(rng, m, k);
    let fine: Vec<usize> = labels.iter().map(|&z| group[z]).collect();
    let a = rng.random_range(0..k);
    let b = (a + rng.random_range(1..k)) % k;
    let coarse = fine.iter().map(|&c| if c == b { a } else { c }).collect();
    CoarseningInstance {
        points,
        labels,
        fine,
        coarse,
    }
}

/// Random data with independent random labels and a random clustering in which
/// every cluster has at least `dims + 2` points.
pub fn labeled_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>, Vec<usize>) {
    let dims = rng.random_range(1..=3);
    let k = rng.random_range(1..=4);
    let m = rng.random_range(1..=4);
    let n = rng.random_range(k * (dims + 2)..=120);
    let points = random_points(rng, n, dims);
    let clusters = random_assignment(rng, n, k, dims + 2);
    let labels = random_assignment(rng, n, m, 1);
    (points, clusters, labels)
}
