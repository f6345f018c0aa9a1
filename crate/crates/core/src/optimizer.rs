//! Hartigan single-point-move minimization of the CEC-IB cost.
//!
//! Each run starts from a uniformly random partition into `k_init` clusters
//! and then sweeps the points in a freshly shuffled order. A point moves to
//! the cluster giving the largest cost decrease, and only if that decrease
//! exceeds [`MIN_IMPROVEMENT`]. A cluster whose size falls below `ε · n` is
//! deleted right after the move that shrank it; its members are reassigned
//! one by one to whichever cluster absorbs them most cheaply. Runs end after
//! an epoch without moves or deletions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cost::{accumulate_stats, batch_stats, cecib_cost, CostBreakdown, CostContext};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::{Clustering, SideInfo};
use crate::stats::{ClusterStats, REFRESH_INTERVAL};

/// A move is accepted only if it lowers the cost by more than this.
pub const MIN_IMPROVEMENT: f64 = 1e-12;

const INIT_ATTEMPTS: usize = 100;

/// Optimizer inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub beta: f64,
    pub k_init: usize,
    /// Cluster deletion threshold as a fraction of `n`.
    pub epsilon: f64,
    pub restarts: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// `None` selects `1e-6 · trace(Σ_X) / N`.
    pub ridge: Option<f64>,
    /// `None` selects `N + 1`; explicit values below `N + 1` are rejected.
    pub min_cluster_points: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            k_init: 10,
            epsilon: 0.02,
            restarts: 10,
            max_epochs: 100,
            seed: 0,
            ridge: None,
            min_cluster_points: None,
        }
    }
}

/// Configuration resolved against a concrete dataset.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    ctx: CostContext,
    min_points: usize,
    delete_below: f64,
}

impl FitConfig {
    /// Checks the configuration on its own (no data needed).
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        if self.k_init == 0 {
            return Err(Error::Config("k_init must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.restarts == 0 || self.max_epochs == 0 {
            return Err(Error::Config("restarts and max_epochs must be positive".into()));
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("ridge must be non-negative, got {r}")));
            }
        }
        Ok(())
    }

    fn resolve(&self, data: &Dataset) -> Result<Resolved> {
        self.validate()?;
        let n = data.rows();
        let min_points = match self.min_cluster_points {
            None => data.dims() + 1,
            Some(m) if m < data.dims() + 1 => {
                return Err(Error::Config(format!(
                    "min_cluster_points must be at least N + 1 = {}, got {m}",
                    data.dims() + 1
                )))
            }
            Some(m) => m,
        };
        if n < self.k_init * min_points {
            return Err(Error::Config(format!(
                "k_init = {} needs at least {} points ({} per cluster), dataset has {n}",
                self.k_init,
                self.k_init * min_points,
                min_points
            )));
        }
        let (_, cov) = data.mean_and_covariance()?;
        if cov.trace() <= 0.0 {
            return Err(Error::degenerate(None, "all data points are identical"));
        }
        let ridge = self.ridge.unwrap_or(1e-6 * cov.trace() / data.dims() as f64);
        Ok(Resolved {
            ctx: CostContext::new(n, self.beta, ridge)?,
            min_points,
            delete_below: self.epsilon * n as f64,
        })
    }
}

/// Outcome of a single restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub epochs: usize,
    pub moves: usize,
    pub clusters_deleted: usize,
    pub k: usize,
    pub total_cost: f64,
    /// Total cost after initialization and after every epoch.
    pub cost_trace: Vec<f64>,
    /// Accepted moves after which the recomputed total did not drop. Always 0 unless something is broken.
    pub non_improving_moves: usize,
}

/// Result of [`fit`]: the best run over all restarts.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub clustering: Clustering,
    pub cost: CostBreakdown,
    pub epochs_run: usize,
    pub moves_made: usize,
    pub clusters_deleted: usize,
    pub cost_trace: Vec<f64>,
    pub restart_index: usize,
    pub ridge: f64,
    /// Incrementally maintained statistics of the winning run's final clusters.
    pub cluster_stats: Vec<ClusterStats>,
    pub runs: Vec<RunSummary>,
}

/// Cost decrease `E(from) + E(to) − E(from∖x) − E(to∪x)` of moving `x`.
///
/// Positive values mean the move lowers the total cost. `None` means the
/// move is forbidden: the source would be left with fewer than two points or
/// one of the resulting clusters has no valid Gaussian model.
pub fn move_delta(
    stats_from: &ClusterStats,
    stats_to: &ClusterStats,
    x: &[f64],
    label: Option<usize>,
    ctx: &CostContext,
) -> Option<f64> {
    if stats_from.count() < 3 {
        return None;
    }
    let before = ctx.cluster_cost(stats_from).ok()? + ctx.cluster_cost(stats_to).ok()?;
    let from_after = ctx.cluster_cost(&stats_from.without_point(x, label).ok()?).ok()?;
    let to_after = ctx.cluster_cost(&stats_to.with_point(x, label).ok()?).ok()?;
    Some(before - from_after - to_after)
}

/// Mutable optimizer state: assignment, per-cluster statistics and cached
/// per-cluster costs.
#[derive(Debug, Clone)]
pub struct HartiganState<'a> {
    data: &'a Dataset,
    side: &'a SideInfo,
    ctx: CostContext,
    min_points: usize,
    assignment: Vec<usize>,
    stats: Vec<ClusterStats>,
    costs: Vec<f64>,
    updates: usize,
}

impl<'a> HartiganState<'a> {
    /// State for `clustering`; every cluster must have a valid model.
    pub fn new(
        data: &'a Dataset,
        side: &'a SideInfo,
        ctx: CostContext,
        min_points: usize,
        clustering: &Clustering,
    ) -> Result<Self> {
        let stats = accumulate_stats(data, clustering, Some(side))?;
        let costs = stats
            .iter()
            .enumerate()
            .map(|(c, s)| {
                ctx.cluster_cost(s).map_err(|e| match e {
                    Error::Degenerate { reason, .. } => Error::degenerate(Some(c), reason),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            data,
            side,
            ctx,
            min_points: min_points.max(2),
            assignment: clustering.assignment().to_vec(),
            stats,
            costs,
            updates: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.stats.len()
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn cluster_costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn stats(&self) -> &[ClusterStats] {
        &self.stats
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn clustering(&self) -> Clustering {
        Clustering::new(self.assignment.clone(), self.k()).expect("assignment indices stay below k")
    }

    /// Cost decrease of moving point `i` to cluster `to`; `Some(0.0)` for its own cluster.
    pub fn move_delta(&self, i: usize, to: usize) -> Option<f64> {
        let from = self.assignment[i];
        if from == to {
            return Some(0.0);
        }
        if self.stats[from].count() <= self.min_points {
            return None;
        }
        move_delta(
            &self.stats[from],
            &self.stats[to],
            self.data.row(i),
            self.side.label(i),
            &self.ctx,
        )
    }

    /// Best strictly improving move for point `i` as `(target, decrease)`.
    /// Ties keep the lowest cluster index; no improvement means stay.
    pub fn best_move(&self, i: usize) -> Option<(usize, f64)> {
        let from = self.assignment[i];
        if self.stats[from].count() <= self.min_points {
            return None;
        }
        let x = self.data.row(i);
        let label = self.side.label(i);
        let from_after = self
            .ctx
            .cluster_cost(&self.stats[from].without_point(x, label).ok()?)
            .ok()?;
        let mut best: Option<(usize, f64)> = None;
        for to in (0..self.k()).filter(|&to| to != from) {
            let Some(to_after) = self.stats[to]
                .with_point(x, label)
                .ok()
                .and_then(|s| self.ctx.cluster_cost(&s).ok())
            else {
                continue;
            };
            let delta = self.costs[from] + self.costs[to] - from_after - to_after;
            if delta > MIN_IMPROVEMENT && best.is_none_or(|(_, d)| delta > d) {
                best = Some((to, delta));
            }
        }
        best
    }

    /// Moves point `i` to cluster `to` and re-fits both models.
    pub fn move_point(&mut self, i: usize, to: usize) -> Result<()> {
        let from = self.assignment[i];
        if from == to {
            return Ok(());
        }
        let x = self.data.row(i);
        let label = self.side.label(i);
        self.stats[from].remove_point(x, label)?;
        self.stats[to].add_point(x, label)?;
        self.assignment[i] = to;
        self.costs[from] = self.ctx.cluster_cost(&self.stats[from])?;
        self.costs[to] = self.ctx.cluster_cost(&self.stats[to])?;
        self.updates += 2;
        if self.updates >= REFRESH_INTERVAL {
            self.refresh()?;
        }
        Ok(())
    }

    /// Rebuilds all statistics and cached costs from the current assignment.
    pub fn refresh(&mut self) -> Result<()> {
        let clustering = self.clustering();
        self.stats = batch_stats(self.data, &clustering, Some(self.side))?;
        self.costs = self
            .stats
            .iter()
            .map(|s| self.ctx.cluster_cost(s))
            .collect::<Result<_>>()?;
        self.updates = 0;
        Ok(())
    }

    /// Removes `cluster` and reassigns its members, in shuffled order, each to
    /// the cluster whose cost grows least when it is added.
    pub fn delete_cluster<R: Rng + ?Sized>(&mut self, cluster: usize, rng: &mut R) -> Result<()> {
        if cluster >= self.k() {
            return Err(Error::InvalidInput(format!("no cluster {cluster}")));
        }
        if self.k() == 1 {
            return Err(Error::Precondition("cannot delete the only cluster".into()));
        }
        let mut members: Vec<usize> = (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == cluster)
            .collect();
        members.shuffle(rng);
        self.stats.remove(cluster);
        self.costs.remove(cluster);
        for a in self.assignment.iter_mut() {
            if *a > cluster {
                *a -= 1;
            }
        }
        for i in members {
            let x = self.data.row(i);
            let label = self.side.label(i);
            let mut best: Option<(usize, f64, ClusterStats)> = None;
            for to in 0..self.k() {
                let Ok(grown) = self.stats[to].with_point(x, label) else {
                    continue;
                };
                let Ok(cost) = self.ctx.cluster_cost(&grown) else {
                    continue;
                };
                let increase = cost - self.costs[to];
                if best.as_ref().is_none_or(|(_, b, _)| increase < *b) {
                    best = Some((to, increase, grown));
                }
            }
            let (to, increase, grown) =
                best.ok_or_else(|| Error::degenerate(None, format!("no cluster can absorb point {i}")))?;
            self.costs[to] += increase;
            self.stats[to] = grown;
            self.assignment[i] = to;
            self.updates += 1;
        }
        // recompute exactly; the running sums above only served the greedy choice
        for c in 0..self.k() {
            self.costs[c] = self.ctx.cluster_cost(&self.stats[c])?;
        }
        Ok(())
    }
}

fn run_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn random_start<'a>(
    data: &'a Dataset,
    side: &'a SideInfo,
    resolved: &Resolved,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<HartiganState<'a>> {
    let n = data.rows();
    let mut last_err = None;
    for _ in 0..INIT_ATTEMPTS {
        let assignment: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let clustering = Clustering::new(assignment, k)?;
        if clustering.sizes().iter().any(|&s| s < resolved.min_points) {
            continue;
        }
        match HartiganState::new(data, side, resolved.ctx, resolved.min_points, &clustering) {
            Ok(state) => return Ok(state),
            Err(e @ Error::Degenerate { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Config(format!(
            "no random partition into {k} clusters of at least {} points after {INIT_ATTEMPTS} attempts",
            resolved.min_points
        ))
    }))
}

struct RunOutcome {
    summary: RunSummary,
    assignment: Vec<usize>,
    k: usize,
    stats: Vec<ClusterStats>,
}

fn run_from(
    mut state: HartiganState<'_>,
    resolved: &Resolved,
    max_epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RunOutcome> {
    let n = state.assignment.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut summary = RunSummary {
        epochs: 0,
        moves: 0,
        clusters_deleted: 0,
        k: state.k(),
        total_cost: state.total_cost(),
        cost_trace: vec![state.total_cost()],
        non_improving_moves: 0,
    };
    // initialization may leave clusters under the threshold
    summary.clusters_deleted += sweep_small(&mut state, resolved, rng)?;

    while summary.epochs < max_epochs {
        order.shuffle(rng);
        let mut moves = 0;
        let mut deleted = 0;
        for &i in &order {
            let Some((to, _)) = state.best_move(i) else {
                continue;
            };
            let from = state.assignment[i];
            let before = state.total_cost();
            state.move_point(i, to)?;
            if state.total_cost() >= before {
                summary.non_improving_moves += 1;
            }
            moves += 1;
            if state.k() > 1 && (state.stats[from].count() as f64) < resolved.delete_below {
                state.delete_cluster(from, rng)?;
                deleted += 1;
            }
        }
        deleted += sweep_small(&mut state, resolved, rng)?;
        summary.epochs += 1;
        summary.moves += moves;
        summary.clusters_deleted += deleted;
        summary.cost_trace.push(state.total_cost());
        if moves == 0 && deleted == 0 {
            break;
        }
    }
    summary.k = state.k();
    summary.total_cost = state.total_cost();
    Ok(RunOutcome {
        summary,
        k: state.k(),
        assignment: state.assignment,
        stats: state.stats,
    })
}

/// Deletes clusters below the size threshold, smallest first.
fn sweep_small(state: &mut HartiganState<'_>, resolved: &Resolved, rng: &mut ChaCha8Rng) -> Result<usize> {
    let mut deleted = 0;
    while state.k() > 1 {
        let smallest = (0..state.k()).min_by_key(|&c| state.stats[c].count()).expect("k > 1");
        if (state.stats[smallest].count() as f64) >= resolved.delete_below {
            break;
        }
        state.delete_cluster(smallest, rng)?;
        deleted += 1;
    }
    Ok(deleted)
}

fn check_inputs(data: &Dataset, side: &SideInfo) -> Result<()> {
    if side.len() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            found: side.len(),
        });
    }
    Ok(())
}

fn report(
    data: &Dataset,
    side: &SideInfo,
    resolved: &Resolved,
    winner: usize,
    outcome: RunOutcome,
    runs: Vec<RunSummary>,
) -> Result<FitReport> {
    let clustering = Clustering::new(outcome.assignment, outcome.k)?;
    let cost = cecib_cost(data, &clustering, side, resolved.ctx.beta, resolved.ctx.ridge)?;
    let s = &outcome.summary;
    Ok(FitReport {
        epochs_run: s.epochs,
        moves_made: s.moves,
        clusters_deleted: s.clusters_deleted,
        cost_trace: s.cost_trace.clone(),
        clustering,
        cost,
        restart_index: winner,
        ridge: resolved.ctx.ridge,
        cluster_stats: outcome.stats,
        runs,
    })
}

/// Minimizes the CEC-IB cost over `config.restarts` random starts and
/// returns the lowest-cost run (ties go to the earlier restart).
///
/// Restarts run in parallel; each draws from its own ChaCha stream of
/// `config.seed`, so results do not depend on scheduling.
pub fn fit(data: &Dataset, side: &SideInfo, config: &FitConfig) -> Result<FitReport> {
    check_inputs(data, side)?;
    let resolved = config.resolve(data)?;
    let outcomes: Vec<RunOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = run_rng(config.seed, r);
            let state = random_start(data, side, &resolved, config.k_init, &mut rng)?;
            run_from(state, &resolved, config.max_epochs, &mut rng)
        })
        .collect::<Result<_>>()?;
    let winner = outcomes
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.summary.total_cost.total_cmp(&b.summary.total_cost))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let runs: Vec<RunSummary> = outcomes.iter().map(|o| o.summary.clone()).collect();
    let outcome = outcomes.into_iter().nth(winner).expect("winner index is in range");
    report(data, side, &resolved, winner, outcome, runs)
}

/// Runs a single Hartigan descent from a given partition (visit order drawn
/// from `config.seed`; `restarts` and `k_init` are ignored).
pub fn fit_from(data: &Dataset, side: &SideInfo, config: &FitConfig, init: &Clustering) -> Result<FitReport> {
    check_inputs(data, side)?;
    let resolved = FitConfig {
        k_init: init.k(),
        ..config.clone()
    }
    .resolve(data)?;
    let mut rng = run_rng(config.seed, 0);
    let state = HartiganState::new(data, side, resolved.ctx, resolved.min_points, init)?;
    let outcome = run_from(state, &resolved, config.max_epochs, &mut rng)?;
    let runs = vec![outcome.summary.clone()];
    report(data, side, &resolved, 0, outcome, runs)
}
