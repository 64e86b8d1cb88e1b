//! ε-similar neighborhoods, their one-point extension along a chain, and
//! support counting.
//!
//! A neighborhood excludes only the identical window. Other windows of the
//! node's own trajectory may be neighbors and then count toward its support.

use crate::geometry::{pointwise_distance, TopKState};
use crate::mask::TrajMask;
use crate::trajectory::{LabeledDataset, Point, SubTrajRef};

/// Relative slack on the single-distance prefilter so that it can never
/// reject a window whose rounded distance would still be `<= eps`.
const PREFILTER_SLACK: f64 = 1e-9;

/// One neighbor window of the current node, with the running top-K state of
/// the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEntry {
    pub traj: usize,
    pub start: usize,
    pub topk: TopKState,
}

impl NeighborEntry {
    pub fn distance(&self) -> f64 {
        self.topk
            .value()
            .expect("neighbor pairs always hold at least K distances")
    }
}

/// The ε-similar neighborhood of a node, ordered by `(traj, start)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborSet {
    entries: Vec<NeighborEntry>,
}

impl NeighborSet {
    pub fn entries(&self) -> &[NeighborEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Windows of the neighbors given the node length `len`.
    pub fn windows(&self, len: usize) -> impl Iterator<Item = SubTrajRef> + '_ {
        self.entries
            .iter()
            .map(move |e| SubTrajRef::new(e.traj, e.start, e.start + len - 1))
    }
}

/// Neighborhood search parameters shared by every node of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborParams {
    pub eps: f64,
    pub top_k: usize,
    /// Skip a candidate pair as soon as one pointwise distance exceeds `K·ε`.
    /// Exact: it never changes the result.
    pub prefilter: bool,
}

impl NeighborParams {
    pub fn new(eps: f64, top_k: usize) -> Self {
        NeighborParams {
            eps,
            top_k,
            prefilter: true,
        }
    }

    fn cutoff(&self) -> f64 {
        if self.prefilter {
            self.top_k as f64 * self.eps * (1.0 + PREFILTER_SLACK)
        } else {
            f64::INFINITY
        }
    }
}

/// Exhaustive scan for every same-length window within `eps` of `seed`.
pub fn seed_neighbors(
    dataset: &LabeledDataset,
    seed: SubTrajRef,
    params: NeighborParams,
) -> NeighborSet {
    let len = seed.len();
    assert!(
        params.top_k <= len,
        "K must be no greater than the window length"
    );
    let window = &dataset.points(seed.traj)[seed.range()];
    let cutoff = params.cutoff();

    let mut entries = Vec::new();
    for (traj, t) in dataset.trajectories().iter().enumerate() {
        if t.len() < len {
            continue;
        }
        for s0 in 0..=t.len() - len {
            if traj == seed.traj && s0 + 1 == seed.start {
                continue;
            }
            if let Some(topk) = pair_state(window, &t.points[s0..s0 + len], params.top_k, cutoff) {
                if topk.value().unwrap() <= params.eps {
                    entries.push(NeighborEntry {
                        traj,
                        start: s0 + 1,
                        topk,
                    });
                }
            }
        }
    }
    NeighborSet { entries }
}

fn pair_state(a: &[Point], b: &[Point], k: usize, cutoff: f64) -> Option<TopKState> {
    let cutoff_sq = cutoff * cutoff;
    let mut state = TopKState::new(k);
    for (&p, &q) in a.iter().zip(b) {
        let (dx, dy) = (p.x - q.x, p.y - q.y);
        let d_sq = dx * dx + dy * dy;
        if d_sq > cutoff_sq {
            return None;
        }
        // same expression as `pointwise_distance`
        state.absorb(d_sq.sqrt());
    }
    Some(state)
}

/// Every point of a dataset sorted by `x`, so a seed scan can restrict itself
/// to windows whose first point lies within the prefilter cutoff of the
/// seed's first point.
///
/// Candidates outside that band fail the single-distance prefilter anyway,
/// so [`NeighborIndex::seed_neighbors`] returns exactly what
/// [`seed_neighbors`] returns.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    dataset: &'a LabeledDataset,
    /// `(x, traj, 0-based index)`
    by_x: Vec<(f64, u32, u32)>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(dataset: &'a LabeledDataset) -> Self {
        let mut by_x: Vec<(f64, u32, u32)> = dataset
            .trajectories()
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                t.points
                    .iter()
                    .enumerate()
                    .map(move |(j, p)| (p.x, i as u32, j as u32))
            })
            .collect();
        by_x.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        NeighborIndex { dataset, by_x }
    }

    pub fn dataset(&self) -> &'a LabeledDataset {
        self.dataset
    }

    pub fn seed_neighbors(&self, seed: SubTrajRef, params: NeighborParams) -> NeighborSet {
        let cutoff = params.cutoff();
        if !cutoff.is_finite() {
            return seed_neighbors(self.dataset, seed, params);
        }
        let len = seed.len();
        assert!(
            params.top_k <= len,
            "K must be no greater than the window length"
        );
        let window = &self.dataset.points(seed.traj)[seed.range()];
        let x0 = window[0].x;
        // widened so that rounding in `x - x0` cannot hide a candidate
        let reach = cutoff * (1.0 + PREFILTER_SLACK) + x0.abs() * f64::EPSILON * 4.0;
        let lo = self.by_x.partition_point(|e| e.0 < x0 - reach);
        let hi = self.by_x.partition_point(|e| e.0 <= x0 + reach);

        let mut entries = Vec::new();
        for &(_, traj, s0) in &self.by_x[lo..hi] {
            let (traj, s0) = (traj as usize, s0 as usize);
            let points = self.dataset.points(traj);
            if s0 + len > points.len() || (traj == seed.traj && s0 + 1 == seed.start) {
                continue;
            }
            if let Some(topk) = pair_state(window, &points[s0..s0 + len], params.top_k, cutoff) {
                if topk.value().unwrap() <= params.eps {
                    entries.push(NeighborEntry {
                        traj,
                        start: s0 + 1,
                        topk,
                    });
                }
            }
        }
        entries.sort_unstable_by_key(|e| (e.traj, e.start));
        NeighborSet { entries }
    }
}

/// Neighborhood of `node.extended()`, derived from the neighborhood of `node`.
///
/// Every neighbor of the longer window has a prefix that neighbors `node`,
/// because the window distance never decreases under extension.
pub fn extend_neighbors(
    dataset: &LabeledDataset,
    node: SubTrajRef,
    mut neighbors: NeighborSet,
    eps: f64,
) -> NeighborSet {
    let points = dataset.points(node.traj);
    assert!(node.end < points.len(), "node {node} cannot be extended");
    let next = points[node.end];
    let offset = node.len();
    neighbors.entries.retain_mut(|entry| {
        let other = dataset.points(entry.traj);
        // 0-based index of the neighbor's new end point
        let idx = entry.start - 1 + offset;
        let Some(&q) = other.get(idx) else {
            return false;
        };
        entry.topk.absorb(pointwise_distance(next, q));
        entry.distance() <= eps
    });
    neighbors
}

/// Distinct trajectories holding at least one neighbor window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    members: Vec<usize>,
    mask: TrajMask,
    sup_pos: usize,
    sup_neg: usize,
}

impl SupportSet {
    pub fn new(dataset: &LabeledDataset, members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        let mask = TrajMask::from_indices(dataset.len(), members.iter().copied());
        let sup_pos = members
            .iter()
            .filter(|&&i| dataset.label(i).is_positive())
            .count();
        let sup_neg = members.len() - sup_pos;
        SupportSet {
            members,
            mask,
            sup_pos,
            sup_neg,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> &TrajMask {
        &self.mask
    }

    pub fn total(&self) -> usize {
        self.members.len()
    }

    /// Support within the positive group under the true labels.
    pub fn pos(&self) -> usize {
        self.sup_pos
    }

    pub fn neg(&self) -> usize {
        self.sup_neg
    }
}

pub fn support_of(dataset: &LabeledDataset, neighbors: &NeighborSet) -> SupportSet {
    SupportSet::new(dataset, neighbors.entries.iter().map(|e| e.traj))
}
