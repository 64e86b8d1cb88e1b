//! End-to-end mining: chain enumeration with lower-bound pruning, the
//! Westfall–Young null estimate, δ* calibration and discovery enumeration.
//!
//! Every length-`L` window roots one chain that grows only at its end index.
//! A run has three phases:
//!
//! 1. walk every chain, feeding each node's permuted p-values into the
//!    [`MinPTable`] and abandoning a chain once its lower bound reaches the
//!    current pruning threshold;
//! 2. compute δ* from the table;
//! 3. walk the chains again under the true labels and report every node with
//!    p-value below δ*, abandoning a chain once its lower bound reaches δ*.
//!
//! [`oracle_mine`] runs the same phases with no pruning and no guard, and is
//! the reference the pruned run must agree with.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::ExactTest;
use crate::neighborhood::{
    extend_neighbors, support_of, NeighborIndex, NeighborParams, NeighborSet, SupportSet,
};
use crate::permutation::{
    generate_permutations, k_index, perm_support_pos, MinPTable, PermutationSet, UpdateStats,
};
use crate::trajectory::{enumerate_seeds, LabeledDataset, SubTrajRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Pruned traversal.
    #[default]
    Sdsm,
    /// Exhaustive traversal, every test evaluated.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningConfig {
    pub eps: f64,
    pub min_len: usize,
    pub top_k: usize,
    pub perms: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `0` uses all available cores.
    pub threads: usize,
    pub mode: Mode,
    /// Single-distance rejection in the seed scan. Never changes results.
    pub prefilter: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            eps: 1.0,
            min_len: 5,
            top_k: 5,
            perms: 1000,
            alpha: 0.05,
            seed: 0,
            threads: 1,
            mode: Mode::Sdsm,
            prefilter: true,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return fail(format!(
                "eps must be a finite non-negative number (got {})",
                self.eps
            ));
        }
        if self.min_len < 2 {
            return fail(format!("L must be at least 2 (got {})", self.min_len));
        }
        if self.top_k < 1 {
            return fail("K must be at least 1".into());
        }
        if self.top_k > self.min_len {
            return fail(format!(
                "K must be no greater than L (K = {}, L = {})",
                self.top_k, self.min_len
            ));
        }
        if self.perms < 1 {
            return fail("B must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1) (got {})", self.alpha));
        }
        let k = k_index(self.alpha, self.perms);
        if k > self.perms {
            return fail(format!(
                "alpha = {} with B = {} gives rank {k} > B; need alpha < (B-1)/B",
                self.alpha, self.perms
            ));
        }
        Ok(())
    }

    pub fn neighbor_params(&self) -> NeighborParams {
        NeighborParams {
            eps: self.eps,
            top_k: self.top_k,
            prefilter: self.prefilter,
        }
    }

    fn worker_count(&self) -> usize {
        match self.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            t => t,
        }
    }
}

/// A window whose p-value falls below δ*.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryRecord {
    pub window: SubTrajRef,
    pub sup_pos: usize,
    pub sup_neg: usize,
    pub sup_total: usize,
    pub p_value: f64,
    pub adjusted_p: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Nodes examined while estimating the null distribution.
    pub nodes_visited: u64,
    pub chains_pruned: u64,
    /// Permuted-label tests evaluated.
    pub tests_evaluated: u64,
    /// Nodes examined while enumerating discoveries.
    pub discovery_nodes_visited: u64,
    pub k_index: usize,
    /// The `k_index` smallest per-permutation minimum p-values, ascending.
    pub bottom_k_min_p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningResult {
    pub delta_star: f64,
    /// Ascending by p-value, ties by window.
    pub discoveries: Vec<DiscoveryRecord>,
    pub diagnostics: Diagnostics,
}

/// `p · α / δ*`.
pub fn adjusted_p(p: f64, alpha: f64, delta_star: f64) -> f64 {
    assert!(
        delta_star > 0.0,
        "adjusted p-value needs a positive threshold"
    );
    p * (alpha / delta_star)
}

/// What the traversal did at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeOutcome {
    /// The lower bound reached the threshold; the rest of the chain is skipped.
    Pruned,
    Updated(UpdateStats),
}

/// One phase-1 node: prune if `L(T)` is at least the pruning threshold,
/// otherwise fold the node's permuted p-values into the table.
pub fn process_node(
    support: &SupportSet,
    exact: &ExactTest,
    perms: &PermutationSet,
    table: &MinPTable,
) -> NodeOutcome {
    let a = support.total();
    let bound = exact.lower_bound(a);
    if bound >= table.pruning_threshold() {
        return NodeOutcome::Pruned;
    }
    NodeOutcome::Updated(table.update(bound, |b| {
        exact.p_value(a, perm_support_pos(support, b, perms))
    }))
}

/// Phase of a run, reported to observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Null,
    Discovery,
}

/// A node as seen by the traversal.
#[derive(Debug, Clone)]
pub struct NodeEvent<'a> {
    pub phase: Phase,
    pub node: SubTrajRef,
    pub support: &'a SupportSet,
    pub lower_bound: f64,
    /// The chain stops at this node.
    pub pruned: bool,
}

/// Receives every visited node. Called concurrently from worker threads.
///
/// In a pruned run, discovery-phase seeds whose recorded support already puts
/// their bound at or above δ* are skipped without an event.
pub trait Observer: Sync {
    fn node(&self, event: &NodeEvent<'_>);
}

impl Observer for () {
    fn node(&self, _: &NodeEvent<'_>) {}
}

/// The ε-neighborhood of a node walking down its chain.
pub struct Chain<'a> {
    dataset: &'a LabeledDataset,
    eps: f64,
    node: SubTrajRef,
    neighbors: NeighborSet,
}

impl<'a> Chain<'a> {
    pub fn new(index: &NeighborIndex<'a>, seed: SubTrajRef, params: NeighborParams) -> Self {
        Chain {
            dataset: index.dataset(),
            eps: params.eps,
            node: seed,
            neighbors: index.seed_neighbors(seed, params),
        }
    }

    pub fn node(&self) -> SubTrajRef {
        self.node
    }

    pub fn neighbors(&self) -> &NeighborSet {
        &self.neighbors
    }

    pub fn support(&self) -> SupportSet {
        support_of(self.dataset, &self.neighbors)
    }

    /// Moves to the next longer window; `false` at the trajectory's end.
    pub fn advance(&mut self) -> bool {
        if self.node.end >= self.dataset.points(self.node.traj).len() {
            return false;
        }
        let neighbors = std::mem::take(&mut self.neighbors);
        self.neighbors = extend_neighbors(self.dataset, self.node, neighbors, self.eps);
        self.node = self.node.extended();
        true
    }
}

#[derive(Default)]
struct Tally {
    nodes: u64,
    pruned: u64,
    tests: u64,
    found: Vec<DiscoveryRecord>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.nodes += other.nodes;
        self.pruned += other.pruned;
        self.tests += other.tests;
        self.found.extend(other.found);
        self
    }
}

fn for_each_seed(
    seeds: &[SubTrajRef],
    threads: usize,
    f: impl Fn(usize, SubTrajRef) -> Tally + Sync,
) -> Result<Tally> {
    if threads <= 1 {
        return Ok(seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| f(i, s))
            .fold(Tally::default(), Tally::merge));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| f(i, s))
            .reduce(Tally::default, Tally::merge)
    }))
}

struct Run<'a> {
    config: &'a MiningConfig,
    index: NeighborIndex<'a>,
    exact: ExactTest,
    perms: PermutationSet,
    table: MinPTable,
    seeds: Vec<SubTrajRef>,
    /// Total support of each seed, recorded in the null phase.
    seed_support: Vec<AtomicUsize>,
    threads: usize,
}

impl<'a> Run<'a> {
    fn new(dataset: &'a LabeledDataset, config: &'a MiningConfig) -> Result<Self> {
        config.validate()?;
        let seeds = enumerate_seeds(dataset, config.min_len);
        Ok(Run {
            config,
            index: NeighborIndex::new(dataset),
            exact: ExactTest::new(dataset.n_pos(), dataset.n_neg()),
            perms: generate_permutations(dataset.labels(), config.perms, config.seed),
            table: MinPTable::new(config.perms, config.alpha)?,
            seed_support: seeds.iter().map(|_| AtomicUsize::new(usize::MAX)).collect(),
            seeds,
            threads: config.worker_count(),
        })
    }

    fn null_phase(&self, pruning: bool, observer: &dyn Observer) -> Result<Tally> {
        let params = self.config.neighbor_params();
        for_each_seed(&self.seeds, self.threads, |i, seed| {
            let mut tally = Tally::default();
            let mut chain = Chain::new(&self.index, seed, params);
            loop {
                tally.nodes += 1;
                let support = chain.support();
                let a = support.total();
                if chain.node() == seed {
                    self.seed_support[i].store(a, Ordering::Relaxed);
                }
                let bound = self.exact.lower_bound(a);
                let p_of = |b| {
                    self.exact
                        .p_value(a, perm_support_pos(&support, b, &self.perms))
                };
                let outcome = if pruning {
                    process_node(&support, &self.exact, &self.perms, &self.table)
                } else {
                    NodeOutcome::Updated(self.table.update_all(p_of))
                };
                let pruned = outcome == NodeOutcome::Pruned;
                observer.node(&NodeEvent {
                    phase: Phase::Null,
                    node: chain.node(),
                    support: &support,
                    lower_bound: bound,
                    pruned,
                });
                match outcome {
                    NodeOutcome::Pruned => {
                        tally.pruned += 1;
                        break;
                    }
                    NodeOutcome::Updated(stats) => tally.tests += stats.tests,
                }
                if !chain.advance() {
                    break;
                }
            }
            tally
        })
    }

    fn discovery_phase(
        &self,
        delta_star: f64,
        pruning: bool,
        observer: &dyn Observer,
    ) -> Result<Tally> {
        if delta_star <= 0.0 {
            return Ok(Tally::default());
        }
        let params = self.config.neighbor_params();
        let alpha = self.config.alpha;
        for_each_seed(&self.seeds, self.threads, |i, seed| {
            let mut tally = Tally::default();
            // the null phase already saw this seed's support; a seed whose bound
            // rules it out is skipped without scanning for its neighbors again
            let known = self.seed_support[i].load(Ordering::Relaxed);
            if pruning && known != usize::MAX && self.exact.lower_bound(known) >= delta_star {
                tally.nodes += 1;
                tally.pruned += 1;
                return tally;
            }
            let mut chain = Chain::new(&self.index, seed, params);
            loop {
                tally.nodes += 1;
                let support = chain.support();
                let a = support.total();
                let bound = self.exact.lower_bound(a);
                // p >= L(T) along the rest of the chain, so nothing below δ* remains
                let stop = pruning && bound >= delta_star;
                observer.node(&NodeEvent {
                    phase: Phase::Discovery,
                    node: chain.node(),
                    support: &support,
                    lower_bound: bound,
                    pruned: stop,
                });
                if stop {
                    tally.pruned += 1;
                    break;
                }
                let p = self.exact.p_value(a, support.pos());
                if p < delta_star {
                    tally.found.push(DiscoveryRecord {
                        window: chain.node(),
                        sup_pos: support.pos(),
                        sup_neg: support.neg(),
                        sup_total: a,
                        p_value: p,
                        adjusted_p: adjusted_p(p, alpha, delta_star),
                    });
                }
                if !chain.advance() {
                    break;
                }
            }
            tally
        })
    }

    fn execute(self, pruning: bool, observer: &dyn Observer) -> Result<MiningResult> {
        let null = self.null_phase(pruning, observer)?;
        let delta_star = self.table.delta_star();
        let mut found = self.discovery_phase(delta_star, pruning, observer)?;
        sort_discoveries(&mut found.found);
        Ok(MiningResult {
            delta_star,
            discoveries: found.found,
            diagnostics: Diagnostics {
                nodes_visited: null.nodes,
                chains_pruned: null.pruned,
                tests_evaluated: null.tests,
                discovery_nodes_visited: found.nodes,
                k_index: self.table.k_index(),
                bottom_k_min_p: self.table.bottom_k(),
            },
        })
    }
}

pub fn sort_discoveries(found: &mut [DiscoveryRecord]) {
    found.sort_by(|a, b| {
        a.p_value
            .total_cmp(&b.p_value)
            .then_with(|| a.window.cmp(&b.window))
    });
}

/// Pruned mining.
pub fn mine(dataset: &LabeledDataset, config: &MiningConfig) -> Result<MiningResult> {
    mine_observed(dataset, config, &())
}

pub fn mine_observed(
    dataset: &LabeledDataset,
    config: &MiningConfig,
    observer: &dyn Observer,
) -> Result<MiningResult> {
    Run::new(dataset, config)?.execute(true, observer)
}

/// Exhaustive mining: every node of every chain, all `B` tests per node.
pub fn oracle_mine(dataset: &LabeledDataset, config: &MiningConfig) -> Result<MiningResult> {
    oracle_mine_observed(dataset, config, &())
}

pub fn oracle_mine_observed(
    dataset: &LabeledDataset,
    config: &MiningConfig,
    observer: &dyn Observer,
) -> Result<MiningResult> {
    Run::new(dataset, config)?.execute(false, observer)
}

/// Dispatches on `config.mode`.
pub fn run(dataset: &LabeledDataset, config: &MiningConfig) -> Result<MiningResult> {
    match config.mode {
        Mode::Sdsm => mine(dataset, config),
        Mode::Oracle => oracle_mine(dataset, config),
    }
}

/// Differences in δ*, the bottom-`k_index` minimum p-values and the
/// discovery sets. Empty when the two results agree.
pub fn diff_results(left: &MiningResult, right: &MiningResult) -> Vec<String> {
    let mut diffs = Vec::new();
    if left.delta_star.to_bits() != right.delta_star.to_bits() {
        diffs.push(format!(
            "delta_star: {:e} vs {:e}",
            left.delta_star, right.delta_star
        ));
    }
    let (lb, rb) = (
        &left.diagnostics.bottom_k_min_p,
        &right.diagnostics.bottom_k_min_p,
    );
    if lb.len() != rb.len() || lb.iter().zip(rb).any(|(a, b)| a.to_bits() != b.to_bits()) {
        diffs.push(format!("bottom-k min p: {lb:?} vs {rb:?}"));
    }
    let key = |d: &DiscoveryRecord| (d.window, d.sup_pos, d.sup_neg, d.p_value.to_bits());
    let mut l: Vec<_> = left.discoveries.iter().map(key).collect();
    let mut r: Vec<_> = right.discoveries.iter().map(key).collect();
    l.sort();
    r.sort();
    type Key = (SubTrajRef, usize, usize, u64);
    let only = |a: &[Key], b: &[Key]| -> Vec<SubTrajRef> {
        a.iter()
            .filter(|x| b.binary_search(x).is_err())
            .map(|x| x.0)
            .collect()
    };
    let (lo, ro) = (only(&l, &r), only(&r, &l));
    if !lo.is_empty() || !ro.is_empty() {
        diffs.push(format!(
            "discoveries: {} only on the left {:?}, {} only on the right {:?}",
            lo.len(),
            lo,
            ro.len(),
            ro
        ));
    }
    diffs
}
