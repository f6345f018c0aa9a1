//! Run manifests, the output document and the command-line driver.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{run_protocol_grid, write_grid, LabelProtocol};
use crate::io::{load_csv, pca_reduce};
use crate::optimizer::{fit, FitConfig, FitReport};
use crate::partition::{conditional_entropy, Clustering};
use crate::theory::beta0_gaussian_halves;

/// Weight parameter as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSpec {
    Value(f64),
    /// `β₀` for equal halves of a one-dimensional Gaussian.
    AutoHalves,
}

impl BetaSpec {
    pub fn resolve(self) -> f64 {
        match self {
            BetaSpec::Value(b) => b,
            BetaSpec::AutoHalves => beta0_gaussian_halves(),
        }
    }
}

impl FromStr for BetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto:halves" {
            return Ok(BetaSpec::AutoHalves);
        }
        match s.parse::<f64>() {
            Ok(b) if b >= 0.0 && b.is_finite() => Ok(BetaSpec::Value(b)),
            _ => Err(Error::Config(format!(
                "beta must be a non-negative number or auto:halves, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSpec::Value(b) => write!(f, "{b}"),
            BetaSpec::AutoHalves => f.write_str("auto:halves"),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub input: String,
    pub label_col: Option<String>,
    pub beta: String,
    pub k_init: usize,
    pub epsilon: f64,
    pub restarts: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub ridge: Option<f64>,
    pub pca_dims: Option<usize>,
    pub output: String,
    pub grid: Option<String>,
}

impl RunManifest {
    pub fn beta_spec(&self) -> Result<BetaSpec> {
        self.beta.parse()
    }

    pub fn fit_config(&self) -> Result<FitConfig> {
        let cfg = FitConfig {
            beta: self.beta_spec()?.resolve(),
            k_init: self.k_init,
            epsilon: self.epsilon,
            restarts: self.restarts,
            max_epochs: self.max_epochs,
            seed: self.seed,
            ridge: self.ridge,
            min_cluster_points: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Command-line arguments.
#[derive(Debug, Clone, Parser)]
#[command(name = "cecib", version, about = "Semi-supervised cross-entropy clustering")]
pub struct Args {
    /// Input CSV file (header row required)
    #[arg(long)]
    pub input: String,
    /// Column holding category labels; empty cells are unlabeled
    #[arg(long = "label-col")]
    pub label_col: Option<String>,
    /// Weight of the consistency term: a number or `auto:halves`
    #[arg(long, default_value = "1")]
    pub beta: String,
    #[arg(long = "k-init", default_value_t = 10)]
    pub k_init: usize,
    /// Clusters smaller than epsilon·n are deleted
    #[arg(long, default_value_t = 0.02)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long = "max-epochs", default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Covariance ridge; defaults to 1e-6·trace(Σ)/N
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Reduce to this many principal components before clustering
    #[arg(long = "pca")]
    pub pca: Option<usize>,
    #[arg(long)]
    pub output: String,
    /// Run a protocol grid instead of a single fit, e.g.
    /// `fractions=0,0.1,0.3;noise=0,0.5;betas=0,auto:halves,1`
    #[arg(long)]
    pub grid: Option<String>,
}

impl From<Args> for RunManifest {
    fn from(a: Args) -> Self {
        Self {
            input: a.input,
            label_col: a.label_col,
            beta: a.beta,
            k_init: a.k_init,
            epsilon: a.epsilon,
            restarts: a.restarts,
            max_epochs: a.max_epochs,
            seed: a.seed,
            ridge: a.ridge,
            pca_dims: a.pca,
            output: a.output,
            grid: a.grid,
        }
    }
}

/// Summary of the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSection {
    pub beta: f64,
    pub ridge: f64,
    pub k: usize,
    pub restart_index: usize,
    pub epochs_run: usize,
    pub moves_made: usize,
    pub clusters_deleted: usize,
    pub epochs_per_restart: Vec<usize>,
    pub cost_per_restart: Vec<f64>,
    pub cost_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSection {
    pub partition_term: f64,
    pub model_term: f64,
    /// `H(Z|Y)`; present whenever some point is labeled.
    pub conditional_entropy: Option<f64>,
    /// `β · H(Z|Y)`, the contribution to the total.
    pub side_contribution: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSection {
    pub categories: Vec<String>,
    pub clusters: Vec<usize>,
}

/// The document written by a single-fit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub manifest: RunManifest,
    pub result: ResultSection,
    pub cost: CostSection,
    pub assignment: AssignmentSection,
}

impl OutputDocument {
    pub fn clustering(&self) -> Result<Clustering> {
        Clustering::new(self.assignment.clusters.clone(), self.result.k)
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}

pub fn read_output(path: impl AsRef<Path>) -> Result<OutputDocument> {
    OutputDocument::from_text(&fs::read_to_string(path)?)
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn document(
    manifest: &RunManifest,
    report: &FitReport,
    conditional: Option<f64>,
    categories: Vec<String>,
) -> OutputDocument {
    OutputDocument {
        manifest: manifest.clone(),
        result: ResultSection {
            beta: report.cost.beta,
            ridge: report.ridge,
            k: report.clustering.k(),
            restart_index: report.restart_index,
            epochs_run: report.epochs_run,
            moves_made: report.moves_made,
            clusters_deleted: report.clusters_deleted,
            epochs_per_restart: report.runs.iter().map(|r| r.epochs).collect(),
            cost_per_restart: report.runs.iter().map(|r| r.total_cost).collect(),
            cost_trace: report.cost_trace.clone(),
        },
        cost: CostSection {
            partition_term: report.cost.partition_term,
            model_term: report.cost.model_term,
            conditional_entropy: conditional,
            side_contribution: report.cost.weighted_side(),
            total: report.cost.total,
        },
        assignment: AssignmentSection {
            categories,
            clusters: report.clustering.assignment().to_vec(),
        },
    }
}

/// Parsed `--grid` value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub fractions: Vec<f64>,
    pub noise: Vec<f64>,
    pub betas: Vec<BetaSpec>,
    pub classes: Option<Vec<usize>>,
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `key=v1,v2;key=...` with keys `fractions`, `noise`, `betas` and
    /// optionally `classes`. Missing `noise` means `0`.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = GridSpec {
            fractions: Vec::new(),
            noise: vec![0.0],
            betas: Vec::new(),
            classes: None,
        };
        let bad = |msg: String| Error::Config(format!("grid spec: {msg}"));
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=values, got {part:?}")))?;
            let items: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
            let floats = || {
                items
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|_| bad(format!("not a number: {v:?}"))))
                    .collect::<Result<Vec<_>>>()
            };
            match key.trim() {
                "fractions" => spec.fractions = floats()?,
                "noise" => spec.noise = floats()?,
                "betas" => spec.betas = items.iter().map(|v| v.parse()).collect::<Result<_>>()?,
                "classes" => {
                    spec.classes = Some(
                        items
                            .iter()
                            .map(|v| v.parse::<usize>().map_err(|_| bad(format!("not a class index: {v:?}"))))
                            .collect::<Result<_>>()?,
                    )
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        if spec.fractions.is_empty() || spec.betas.is_empty() {
            return Err(bad("fractions and betas are required".into()));
        }
        Ok(spec)
    }
}

/// Runs a manifest: load, optional PCA, then either a single fit (writing an
/// [`OutputDocument`]) or a protocol grid (writing a CSV table).
pub fn cli_run(manifest: &RunManifest) -> Result<()> {
    let config = manifest.fit_config()?;
    let table = load_csv(&manifest.input, manifest.label_col.as_deref())?;
    let data = match manifest.pca_dims {
        Some(d) => pca_reduce(&table.data, d)?,
        None => table.data,
    };

    if let Some(grid) = &manifest.grid {
        let spec: GridSpec = grid.parse()?;
        let truth = table
            .side
            .as_clustering()
            .ok_or_else(|| Error::Config("grid runs need a fully labeled ground-truth column".into()))?;
        let protocols: Vec<LabelProtocol> = spec
            .fractions
            .iter()
            .flat_map(|&f| spec.noise.iter().map(move |&e| (f, e)))
            .map(|(f, e)| {
                let p = LabelProtocol::new(f, e, manifest.seed);
                match &spec.classes {
                    Some(c) => p.with_classes(c.iter().copied()),
                    None => p,
                }
            })
            .collect();
        let betas: Vec<f64> = spec.betas.iter().map(|b| b.resolve()).collect();
        let rows = run_protocol_grid(&data, &truth, &protocols, &betas, &config)?;
        let mut buf = Vec::new();
        write_grid(&rows, &mut buf)?;
        return write_atomic(&manifest.output, &buf);
    }

    let report = fit(&data, &table.side, &config)?;
    let conditional = if table.side.labeled_count() > 0 {
        Some(conditional_entropy(&report.clustering, &table.side)?)
    } else {
        None
    };
    let doc = document(manifest, &report, conditional, table.categories);
    write_atomic(&manifest.output, doc.to_text()?.as_bytes())
}
