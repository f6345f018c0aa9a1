//! Semi-supervised cross-entropy clustering (CEC) with an information
//! bottleneck consistency term.
//!
//! A clustering `Y` of a dataset `X` is scored by
//! `H(Y) + Σ_i p_i · H(N(μ_i, Σ_i)) + β · H(Z|Y)`: the entropy of the
//! partition, the Gaussian entropies of its clusters, and the conditional
//! entropy of the partial labeling `Z` given the clusters. The optimizer is a
//! Hartigan point-move search that deletes clusters falling below a size
//! threshold, so the number of clusters is selected automatically.
//!
//! Modules:
//! - [`stats`]: incremental per-cluster Gaussian statistics
//! - [`partition`]: partitions, side information and discrete entropies
//! - [`cost`]: the cost functions
//! - [`optimizer`]: Hartigan minimization with restarts
//! - [`theory`]: critical `β` thresholds
//! - [`eval`]: NMI, label protocols, synthetic mixtures, grid runner
//! - [`io`] and [`cli`]: CSV/PCA ingestion and the command-line driver

pub mod cli;
pub mod cost;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod optimizer;
pub mod partition;
pub mod stats;
pub mod theory;

pub use cost::{cec_cost, cecib_cost, cluster_cost, conditional_cross_entropy, CostBreakdown, CostContext};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use optimizer::{fit, fit_from, FitConfig, FitReport};
pub use partition::{Clustering, SideInfo};
pub use stats::{ClusterStats, GaussianModel};
