//! Label permutations and the Westfall–Young minimum p-value table.
//!
//! [`MinPTable`] keeps one running minimum p-value per permutation. Entries
//! are `AtomicU64` holding `f64` bits: for non-negative floats the bit order
//! equals the numeric order, so `fetch_min` is an atomic numeric minimum.
//!
//! The pruning threshold (the `k_index`-th smallest entry) is cached and
//! recomputed by linear-time selection only after a node lowers an entry.
//! A concurrently read threshold may be stale, but a stale value is never
//! smaller than the true one, so it can only cause under-pruning.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::TrajMask;
use crate::neighborhood::SupportSet;
use crate::trajectory::Label;

/// Name and version of the generator behind [`generate_permutations`].
pub const RNG_NAME: &str =
    "rand_chacha-0.9 ChaCha8Rng::seed_from_u64 + rand-0.9 SliceRandom::shuffle";

/// `⌈αB + 1⌉`, the rank of the pruning threshold among the `B` minima.
///
/// Products such as `0.05 · 1000` are snapped to the nearest integer before
/// taking the ceiling, so float noise cannot push the rank up by one.
pub fn k_index(alpha: f64, perms: usize) -> usize {
    let v = alpha * perms as f64 + 1.0;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// `B` independent uniformly shuffled copies of the labels.
#[derive(Debug, Clone)]
pub struct PermutationSet {
    seed: u64,
    assignments: Vec<Vec<Label>>,
    positive: Vec<TrajMask>,
}

impl PermutationSet {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assignment(&self, b: usize) -> &[Label] {
        &self.assignments[b]
    }

    /// Trajectories labeled positive under permutation `b`.
    pub fn positive_mask(&self, b: usize) -> &TrajMask {
        &self.positive[b]
    }
}

pub fn generate_permutations(labels: &[Label], perms: usize, seed: u64) -> PermutationSet {
    assert!(perms >= 1, "at least one permutation is required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(perms);
    let mut positive = Vec::with_capacity(perms);
    for _ in 0..perms {
        let mut g = labels.to_vec();
        g.shuffle(&mut rng);
        positive.push(TrajMask::from_indices(
            g.len(),
            g.iter()
                .enumerate()
                .filter(|(_, l)| l.is_positive())
                .map(|(i, _)| i),
        ));
        assignments.push(g);
    }
    PermutationSet {
        seed,
        assignments,
        positive,
    }
}

/// Positive-group support of a window under permutation `b`.
pub fn perm_support_pos(support: &SupportSet, b: usize, perms: &PermutationSet) -> usize {
    support.mask().intersection_count(perms.positive_mask(b))
}

/// Outcome of one [`MinPTable::update`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub tests: u64,
    pub improved: u64,
}

#[derive(Debug)]
pub struct MinPTable {
    values: Vec<AtomicU64>,
    k_index: usize,
    threshold: AtomicU64,
}

impl MinPTable {
    /// All `perms` entries start at `alpha`.
    pub fn new(perms: usize, alpha: f64) -> Result<Self> {
        let k = k_index(alpha, perms);
        if perms == 0 || k > perms {
            return Err(Error::Config(format!(
                "alpha = {alpha} with B = {perms} gives rank {k} > B; need alpha < (B-1)/B"
            )));
        }
        Ok(MinPTable {
            values: (0..perms)
                .map(|_| AtomicU64::new(alpha.to_bits()))
                .collect(),
            k_index: k,
            threshold: AtomicU64::new(alpha.to_bits()),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn k_index(&self) -> usize {
        self.k_index
    }

    pub fn get(&self, b: usize) -> f64 {
        f64::from_bits(self.values[b].load(Ordering::Relaxed))
    }

    pub fn snapshot(&self) -> Vec<f64> {
        (0..self.values.len()).map(|b| self.get(b)).collect()
    }

    /// Lowers entry `b` to `p` if smaller. Returns whether it changed.
    pub fn offer(&self, b: usize, p: f64) -> bool {
        debug_assert!(p >= 0.0);
        let prev = self.values[b].fetch_min(p.to_bits(), Ordering::AcqRel);
        p.to_bits() < prev
    }

    /// The `k_index`-th smallest entry, possibly stale under concurrency.
    pub fn pruning_threshold(&self) -> f64 {
        f64::from_bits(self.threshold.load(Ordering::Acquire))
    }

    fn refresh_threshold(&self) {
        let t = kth_smallest(self.snapshot(), self.k_index);
        self.threshold.fetch_min(t.to_bits(), Ordering::AcqRel);
    }

    /// For every permutation whose entry exceeds `lower_bound`, evaluates
    /// `p_value(b)` and keeps the minimum. Entries at or below the bound are
    /// skipped since no p-value can go under it.
    pub fn update(&self, lower_bound: f64, p_value: impl Fn(usize) -> f64) -> UpdateStats {
        let mut stats = UpdateStats::default();
        for b in 0..self.values.len() {
            if lower_bound < self.get(b) {
                stats.tests += 1;
                if self.offer(b, p_value(b)) {
                    stats.improved += 1;
                }
            }
        }
        if stats.improved > 0 {
            self.refresh_threshold();
        }
        stats
    }

    /// Unguarded variant: evaluates every permutation.
    pub fn update_all(&self, p_value: impl Fn(usize) -> f64) -> UpdateStats {
        let mut stats = UpdateStats::default();
        for b in 0..self.values.len() {
            stats.tests += 1;
            if self.offer(b, p_value(b)) {
                stats.improved += 1;
            }
        }
        if stats.improved > 0 {
            self.refresh_threshold();
        }
        stats
    }

    /// The `k_index` smallest entries, ascending.
    pub fn bottom_k(&self) -> Vec<f64> {
        let mut v = self.snapshot();
        v.sort_by(f64::total_cmp);
        v.truncate(self.k_index);
        v
    }

    pub fn delta_star(&self) -> f64 {
        compute_delta_star(&self.snapshot(), self.k_index)
    }
}

/// 1-based order statistic.
pub fn kth_smallest(mut values: Vec<f64>, k: usize) -> f64 {
    assert!(k >= 1 && k <= values.len());
    *values.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

/// Largest minimum p-value strictly below the `k_index`-th smallest, or `0.0`
/// when no value lies strictly below it.
pub fn compute_delta_star(min_p: &[f64], k_index: usize) -> f64 {
    let threshold = kth_smallest(min_p.to_vec(), k_index);
    min_p
        .iter()
        .copied()
        .filter(|&p| p < threshold)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::tests::line;
    use crate::trajectory::LabeledDataset;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn labels(n_pos: usize, n_neg: usize) -> Vec<Label> {
        let mut v = vec![Label::Positive; n_pos];
        v.extend(vec![Label::Negative; n_neg]);
        v
    }

    #[test]
    fn rank_of_threshold() {
        assert_eq!(k_index(0.05, 1000), 51);
        assert_eq!(k_index(0.1, 50), 6);
        assert_eq!(k_index(0.05, 200), 11);
        assert_eq!(k_index(0.05, 50), 4);
    }

    #[test]
    fn alpha_too_large_rejected() {
        assert!(MinPTable::new(10, 0.95).is_err());
        assert!(MinPTable::new(10, 0.9).is_ok());
    }

    #[test]
    fn two_labels_two_arrangements() {
        let p = generate_permutations(&labels(1, 1), 20, 3);
        let seen: HashSet<Vec<Label>> = (0..20).map(|b| p.assignment(b).to_vec()).collect();
        assert!(seen.len() <= 2);
        for a in &seen {
            assert_eq!(a.iter().filter(|l| l.is_positive()).count(), 1);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let l = labels(7, 12);
        let a = generate_permutations(&l, 50, 42);
        let b = generate_permutations(&l, 50, 42);
        let c = generate_permutations(&l, 50, 43);
        for i in 0..50 {
            assert_eq!(a.assignment(i), b.assignment(i));
            assert_eq!(
                a.assignment(i).iter().filter(|l| l.is_positive()).count(),
                7
            );
        }
        assert!((0..50).any(|i| a.assignment(i) != c.assignment(i)));
    }

    #[test]
    fn perm_support_extremes() {
        let ds = LabeledDataset::new((0..6).map(|i| line(i, 3)).collect(), labels(2, 4)).unwrap();
        let perms = generate_permutations(ds.labels(), 30, 1);
        let empty = SupportSet::new(&ds, []);
        let all = SupportSet::new(&ds, 0..6);
        for b in 0..30 {
            assert_eq!(perm_support_pos(&empty, b, &perms), 0);
            assert_eq!(perm_support_pos(&all, b, &perms), 2);
        }
    }

    #[test]
    fn initial_threshold_is_alpha() {
        let t = MinPTable::new(1000, 0.05).unwrap();
        assert_eq!(t.pruning_threshold(), 0.05);
        assert_eq!(t.k_index(), 51);
        assert_eq!(t.delta_star(), 0.0);
    }

    #[test]
    fn update_guard_skips_when_bound_too_high() {
        let t = MinPTable::new(20, 0.1).unwrap();
        let stats = t.update(0.1, |_| panic!("must not evaluate"));
        assert_eq!(stats.tests, 0);
        assert!(t.snapshot().iter().all(|&p| p == 0.1));
    }

    #[test]
    fn single_improvement() {
        let t = MinPTable::new(20, 0.05).unwrap();
        let stats = t.update(1e-4, |b| if b == 0 { 0.001 } else { 0.2 });
        assert_eq!(
            stats,
            UpdateStats {
                tests: 20,
                improved: 1
            }
        );
        assert_eq!(t.get(0), 0.001);
        assert_eq!(t.get(1), 0.05);
    }

    #[test]
    fn delta_star_examples() {
        let mut v: Vec<f64> = (1..=100).map(|i| i as f64 * 0.001).collect();
        assert_eq!(compute_delta_star(&v, 6), 0.005);
        v[4] = 0.006;
        v[3] = 0.004;
        assert_eq!(compute_delta_star(&v, 6), 0.004);
        assert_eq!(compute_delta_star(&[0.05; 100], 6), 0.0);
    }

    proptest! {
        #[test]
        fn threshold_matches_sort(values in prop::collection::vec(0.0f64..0.05, 20..200), alpha in 0.01f64..0.5) {
            let b = values.len();
            let t = MinPTable::new(b, 0.05).unwrap();
            let k = k_index(alpha, b);
            prop_assume!(k <= b);
            let t = MinPTable { k_index: k, ..t };
            for (i, &p) in values.iter().enumerate() {
                t.update(0.0, |j| if j == i { p } else { 1.0 });
            }
            let mut sorted = t.snapshot();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(t.pruning_threshold(), sorted[k - 1]);
        }

        #[test]
        fn delta_star_controls_estimate(values in prop::collection::vec(prop::sample::select(vec![1e-4, 5e-4, 1e-3, 0.01, 0.02, 0.05]), 20..200)) {
            // alpha * B integral
            let b = values.len() - values.len() % 20;
            let values = &values[..b];
            let alpha = 0.05;
            let k = k_index(alpha, b);
            let d = compute_delta_star(values, k);
            let fwer = values.iter().filter(|&&p| p <= d).count() as f64 / b as f64;
            prop_assert!(fwer <= alpha);
        }

        #[test]
        fn perm_support_matches_loop(members in prop::collection::vec(0usize..70, 0..40), seed in 0u64..1000) {
            let ds = LabeledDataset::new((0..70).map(|i| line(i, 2)).collect(), labels(30, 40)).unwrap();
            let perms = generate_permutations(ds.labels(), 5, seed);
            let sup = SupportSet::new(&ds, members.iter().copied());
            for b in 0..5 {
                let naive = sup.members().iter().filter(|&&i| perms.assignment(b)[i].is_positive()).count();
                prop_assert_eq!(perm_support_pos(&sup, b, &perms), naive);
            }
        }
    }
}
