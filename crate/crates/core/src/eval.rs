//! Evaluation: normalized mutual information, side-information sampling
//! protocols, synthetic Gaussian mixtures and the protocol grid runner.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::optimizer::{fit, FitConfig};
use crate::partition::{entropy_of_counts, Clustering, SideInfo};

/// Side-information samples averaged per grid cell.
pub const SAMPLES_PER_CELL: usize = 10;

/// `NMI(a, b) = 2 I(a; b) / (H(a) + H(b))`, clamped to `[0, 1]`.
///
/// Two single-cluster partitions are identical and score 1.
pub fn nmi(a: &Clustering, b: &Clustering) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("nmi of empty partitions".into()));
    }
    let (a, b) = (a.canonical(), b.canonical());
    let mut joint = vec![0usize; a.k() * b.k()];
    for (&x, &y) in a.assignment().iter().zip(b.assignment()) {
        joint[x * b.k() + y] += 1;
    }
    // summation order must not depend on argument order
    joint.sort_unstable();
    let h_a = entropy_of_counts(a.sizes());
    let h_b = entropy_of_counts(b.sizes());
    if h_a + h_b == 0.0 {
        return Ok(1.0);
    }
    let mutual = h_a + h_b - entropy_of_counts(joint);
    Ok((2.0 * mutual / (h_a + h_b)).clamp(0.0, 1.0))
}

/// How side information is drawn from ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelProtocol {
    pub labeled_fraction: f64,
    pub noise_fraction: f64,
    /// Only points of these true classes may be labeled.
    pub class_subset: Option<BTreeSet<usize>>,
    pub seed: u64,
}

impl LabelProtocol {
    pub fn new(labeled_fraction: f64, noise_fraction: f64, seed: u64) -> Self {
        Self {
            labeled_fraction,
            noise_fraction,
            class_subset: None,
            seed,
        }
    }

    pub fn with_classes(mut self, classes: impl IntoIterator<Item = usize>) -> Self {
        self.class_subset = Some(classes.into_iter().collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("labeled_fraction", self.labeled_fraction),
            ("noise_fraction", self.noise_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.class_subset.as_ref().is_some_and(BTreeSet::is_empty) {
            return Err(Error::Config("class subset must not be empty".into()));
        }
        Ok(())
    }
}

/// Draws `⌊fraction · n⌋` points uniformly without replacement (from the
/// allowed classes; all of them if fewer are available), labels them with
/// their true class, then relabels `⌊noise · labeled⌋` of them with a
/// uniformly chosen *different* category among those present in the sample.
///
/// Categories keep the true class indices, so `m = true_labels.k()`.
pub fn sample_side_info(true_labels: &Clustering, protocol: &LabelProtocol) -> Result<SideInfo> {
    protocol.validate()?;
    let n = true_labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let mut eligible: Vec<usize> = (0..n)
        .filter(|&i| {
            protocol
                .class_subset
                .as_ref()
                .is_none_or(|s| s.contains(&true_labels.cluster_of(i)))
        })
        .collect();
    if eligible.is_empty() && protocol.class_subset.is_some() {
        return Err(Error::InvalidInput("selected classes cover no points".into()));
    }
    let wanted = (protocol.labeled_fraction * n as f64).floor() as usize;
    eligible.shuffle(&mut rng);
    eligible.truncate(wanted);
    let chosen = eligible;

    let mut labels = vec![None; n];
    for &i in &chosen {
        labels[i] = Some(true_labels.cluster_of(i));
    }
    let flips = (protocol.noise_fraction * chosen.len() as f64).floor() as usize;
    if flips > 0 {
        let present: Vec<usize> = chosen
            .iter()
            .map(|&i| true_labels.cluster_of(i))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if present.len() < 2 {
            return Err(Error::InvalidInput(
                "label noise needs at least two categories among the labeled points".into(),
            ));
        }
        let mut victims = chosen.clone();
        victims.shuffle(&mut rng);
        for &i in &victims[..flips] {
            let original = true_labels.cluster_of(i);
            let others: Vec<usize> = present.iter().copied().filter(|&c| c != original).collect();
            labels[i] = Some(others[rng.random_range(0..others.len())]);
        }
    }
    SideInfo::new(labels, true_labels.k())
}

/// One mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

impl MixtureComponent {
    pub fn new(weight: f64, mean: Vec<f64>, covariance: DMatrix<f64>) -> Self {
        Self {
            weight,
            mean,
            covariance,
        }
    }

    /// Isotropic component `N(mean, σ² I)`.
    pub fn spherical(weight: f64, mean: Vec<f64>, variance: f64) -> Self {
        let d = mean.len();
        Self::new(weight, mean, DMatrix::identity(d, d) * variance)
    }
}

/// Draws `n` points from a Gaussian mixture; returns the data and each
/// point's component.
pub fn gaussian_mixture_sample(components: &[MixtureComponent], n: usize, seed: u64) -> Result<(Dataset, Clustering)> {
    let Some(first) = components.first() else {
        return Err(Error::InvalidInput("mixture has no components".into()));
    };
    let dims = first.mean.len();
    let total: f64 = components.iter().map(|c| c.weight).sum();
    if components.iter().any(|c| c.weight.is_nan() || c.weight <= 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "mixture weights must be positive and sum to 1".into(),
        ));
    }
    let factors = components
        .iter()
        .map(|c| {
            if c.mean.len() != dims || c.covariance.nrows() != dims || c.covariance.ncols() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: c.mean.len(),
                });
            }
            Cholesky::new(c.covariance.clone())
                .map(|ch| ch.l())
                .ok_or_else(|| Error::InvalidInput("component covariance is not positive definite".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let picker =
        WeightedIndex::new(components.iter().map(|c| c.weight)).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * dims);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let c = picker.sample(&mut rng);
        let z = DVector::from_iterator(dims, (0..dims).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &factors[c] * z;
        values.extend(x.iter().zip(&components[c].mean).map(|(a, m)| a + m));
        truth.push(c);
    }
    Ok((
        Dataset::new(n, dims, values)?,
        Clustering::new(truth, components.len())?,
    ))
}

/// One aggregated grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub fraction: f64,
    pub noise: f64,
    pub beta: f64,
    pub mean_nmi: f64,
    pub sd_nmi: f64,
    pub mean_k: f64,
    pub mean_epochs: f64,
}

/// SplitMix64 finalizer over a seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Runs every (protocol, β) cell with [`SAMPLES_PER_CELL`] side-information
/// samples each and averages NMI, final k and epochs.
///
/// Sample `s` of protocol `p` draws its labels from `derive_seed(protocol.seed, [s])`
/// and its optimizer seed from `derive_seed(config.seed, [p, s])`, so cells that
/// differ only in β see identical labels and starts.
pub fn run_protocol_grid(
    data: &Dataset,
    true_labels: &Clustering,
    protocols: &[LabelProtocol],
    betas: &[f64],
    config: &FitConfig,
) -> Result<Vec<GridRow>> {
    if true_labels.len() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            found: true_labels.len(),
        });
    }
    let cells: Vec<(usize, f64)> = (0..protocols.len())
        .flat_map(|p| betas.iter().map(move |&b| (p, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(p, beta)| {
            let protocol = &protocols[p];
            let mut nmis = Vec::with_capacity(SAMPLES_PER_CELL);
            let mut ks = Vec::with_capacity(SAMPLES_PER_CELL);
            let mut epochs = Vec::with_capacity(SAMPLES_PER_CELL);
            for s in 0..SAMPLES_PER_CELL as u64 {
                let sample = LabelProtocol {
                    seed: derive_seed(protocol.seed, &[s]),
                    ..protocol.clone()
                };
                let side = sample_side_info(true_labels, &sample)?;
                let cfg = FitConfig {
                    beta,
                    seed: derive_seed(config.seed, &[p as u64, s]),
                    ..config.clone()
                };
                let report = fit(data, &side, &cfg)?;
                nmis.push(nmi(&report.clustering, true_labels)?);
                ks.push(report.clustering.non_empty() as f64);
                epochs.push(report.epochs_run as f64);
            }
            let (mean_nmi, sd_nmi) = mean_sd(&nmis);
            Ok(GridRow {
                fraction: protocol.labeled_fraction,
                noise: protocol.noise_fraction,
                beta,
                mean_nmi,
                sd_nmi,
                mean_k: mean_sd(&ks).0,
                mean_epochs: mean_sd(&epochs).0,
            })
        })
        .collect()
}

/// Writes grid rows as comma-separated values with a header.
pub fn write_grid<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "fraction",
        "noise",
        "beta",
        "mean_nmi",
        "sd_nmi",
        "mean_k",
        "mean_epochs",
    ])?;
    for r in rows {
        w.write_record(
            [
                r.fraction,
                r.noise,
                r.beta,
                r.mean_nmi,
                r.sd_nmi,
                r.mean_k,
                r.mean_epochs,
            ]
            .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(a: &[usize]) -> Clustering {
        Clustering::from_assignment(a.to_vec())
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&cl(&[0, 0, 1, 1]), &cl(&[1, 1, 0, 0])).unwrap() - 1.0).abs() < 1e-12);
        assert!(nmi(&cl(&[0, 0, 1, 1]), &cl(&[0, 1, 0, 1])).unwrap().abs() < 1e-12);
        let v = nmi(&cl(&[0, 0, 1, 1]), &cl(&[0, 0, 1, 2])).unwrap();
        assert!((v - 0.8).abs() < 1e-12);
        assert_eq!(nmi(&cl(&[0, 0, 0]), &cl(&[1, 1, 1])).unwrap(), 1.0);
        assert_eq!(nmi(&cl(&[0, 0, 0, 0]), &cl(&[0, 1, 0, 1])).unwrap(), 0.0);
        assert!(nmi(&cl(&[0, 1]), &cl(&[0])).is_err());
    }

    #[test]
    fn empty_protocol_and_full_protocol() {
        let truth = cl(&[0, 1, 2, 0, 1, 2, 0, 1]);
        let none = sample_side_info(&truth, &LabelProtocol::new(0.0, 0.0, 1)).unwrap();
        assert_eq!(none.labeled_count(), 0);
        let all = sample_side_info(&truth, &LabelProtocol::new(1.0, 0.0, 1)).unwrap();
        assert_eq!(
            all.labels(),
            truth
                .assignment()
                .iter()
                .map(|&c| Some(c))
                .collect::<Vec<_>>()
                .as_slice()
        );
        assert_eq!(all.categories(), 3);
    }

    #[test]
    fn noise_flips_exact_count_to_other_labels() {
        let truth = Clustering::from_assignment((0..100).map(|i| i % 3).collect());
        let p = LabelProtocol::new(0.3, 0.5, 42);
        let side = sample_side_info(&truth, &p).unwrap();
        assert_eq!(side.labeled_count(), 30);
        let flipped = (0..100)
            .filter(|&i| side.label(i).is_some_and(|l| l != truth.cluster_of(i)))
            .count();
        assert_eq!(flipped, 15);
        assert_eq!(side, sample_side_info(&truth, &p).unwrap());
    }

    #[test]
    fn class_subset_restricts_labels() {
        let truth = Clustering::from_assignment((0..90).map(|i| i % 3).collect());
        let side = sample_side_info(&truth, &LabelProtocol::new(0.2, 0.0, 3).with_classes([0, 2])).unwrap();
        assert_eq!(side.labeled_count(), 18);
        assert!(side.labels().iter().flatten().all(|&l| l != 1));
        let missing = Clustering::new(vec![0; 10], 3).unwrap();
        assert!(sample_side_info(&missing, &LabelProtocol::new(0.2, 0.0, 3).with_classes([1])).is_err());
    }

    #[test]
    fn empty_mixture_sample() {
        let comps = [MixtureComponent::spherical(1.0, vec![0.0, 0.0], 1.0)];
        let (d, t) = gaussian_mixture_sample(&comps, 0, 7).unwrap();
        assert_eq!(d.rows(), 0);
        assert_eq!(d.dims(), 2);
        assert!(t.is_empty());
    }

    #[test]
    fn mixture_rejects_bad_covariance() {
        let comps = [MixtureComponent::new(1.0, vec![0.0], DMatrix::from_element(1, 1, -1.0))];
        assert!(gaussian_mixture_sample(&comps, 10, 7).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(5, &[2]), derive_seed(5, &[2]));
    }

    #[test]
    fn empty_grid_is_empty() {
        let comps = [MixtureComponent::spherical(1.0, vec![0.0], 1.0)];
        let (d, t) = gaussian_mixture_sample(&comps, 20, 7).unwrap();
        assert!(run_protocol_grid(&d, &t, &[], &[1.0], &FitConfig::default())
            .unwrap()
            .is_empty());
        assert!(
            run_protocol_grid(&d, &t, &[LabelProtocol::new(0.1, 0.0, 0)], &[], &FitConfig::default())
                .unwrap()
                .is_empty()
        );
    }
}
