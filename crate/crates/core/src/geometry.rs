//! Pointwise Euclidean distance and the average-top-K-max window distance.
//!
//! The window distance between two equal-length windows is the mean of the
//! `K` largest index-aligned pointwise distances. [`TopKState`] maintains it
//! incrementally while both windows grow by one point at a time.
//!
//! Batch and incremental evaluation are bit-identical: both sum the kept
//! values in descending order before dividing by `K`.

use smallvec::SmallVec;

use crate::trajectory::Point;

pub fn pointwise_distance(p: Point, q: Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    (dx * dx + dy * dy).sqrt()
}

/// Mean of the `k` largest values of `dists`.
///
/// Panics if `k == 0` or `k > dists.len()`.
pub fn avg_top_k_max(dists: &[f64], k: usize) -> f64 {
    assert!(
        k >= 1 && k <= dists.len(),
        "top-k average needs 1 <= k <= {} (got k = {k})",
        dists.len()
    );
    let mut sorted = dists.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sum_descending(sorted[..k].iter().copied()) / k as f64
}

/// Average-top-K-max distance between two equal-length point windows.
pub fn window_distance(a: &[Point], b: &[Point], k: usize) -> f64 {
    assert_eq!(a.len(), b.len(), "windows must have equal length");
    let dists: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&p, &q)| pointwise_distance(p, q))
        .collect();
    avg_top_k_max(&dists, k)
}

fn sum_descending(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc + v)
}

/// The `K` largest pointwise distances absorbed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKState {
    capacity: usize,
    // ascending; kept[0] is the smallest retained distance
    kept: SmallVec<[f64; 8]>,
    count: usize,
}

impl TopKState {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "K must be at least 1");
        TopKState {
            capacity,
            kept: SmallVec::with_capacity(capacity),
            count: 0,
        }
    }

    pub fn from_distances(capacity: usize, dists: impl IntoIterator<Item = f64>) -> Self {
        let mut state = TopKState::new(capacity);
        for d in dists {
            state.absorb(d);
        }
        state
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Retained distances, largest first.
    pub fn kept(&self) -> impl Iterator<Item = f64> + '_ {
        self.kept.iter().rev().copied()
    }

    /// Sum of retained distances, recomputed from the kept values.
    pub fn sum_topk(&self) -> f64 {
        sum_descending(self.kept())
    }

    /// The current distance; `None` until `K` distances have been absorbed.
    pub fn value(&self) -> Option<f64> {
        (self.count >= self.capacity).then(|| self.sum_topk() / self.capacity as f64)
    }

    pub fn absorb(&mut self, d: f64) {
        self.count += 1;
        if self.kept.len() == self.capacity {
            if d <= self.kept[0] {
                return;
            }
            self.kept.remove(0);
        }
        let at = self.kept.partition_point(|&v| v < d);
        self.kept.insert(at, d);
    }
}

/// Functional form of [`TopKState::absorb`].
pub fn extend_topk(mut state: TopKState, d: f64) -> TopKState {
    state.absorb(d);
    state
}
