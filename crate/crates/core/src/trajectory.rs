//! Trajectories, group labels and sub-trajectory windows.
//!
//! A [`LabeledDataset`] is immutable once built. Trajectories are kept sorted
//! by their external id; everything else in the crate addresses a trajectory
//! by its position in that order (its *index*), and converts back to the
//! external id only when writing reports.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// A raw trajectory: time-ordered points of one moving object.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn new(id: u64, points: impl IntoIterator<Item = impl Into<Point>>) -> Self {
        Trajectory {
            id,
            points: points.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Group membership of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// Parses `+1`, `1` or `-1`.
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "+1" | "1" => Some(Label::Positive),
            "-1" => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// `n` labeled trajectories with both groups non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    trajectories: Vec<Trajectory>,
    labels: Vec<Label>,
    n_pos: usize,
    n_neg: usize,
}

impl LabeledDataset {
    /// Validates and builds a dataset. `labels[i]` belongs to `trajectories[i]`;
    /// the pairs are reordered by ascending trajectory id.
    pub fn new(trajectories: Vec<Trajectory>, labels: Vec<Label>) -> Result<Self> {
        if trajectories.len() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} trajectories but {} labels",
                trajectories.len(),
                labels.len()
            )));
        }
        let mut seen = HashSet::with_capacity(trajectories.len());
        for t in &trajectories {
            if !seen.insert(t.id) {
                return Err(Error::Dataset(format!("duplicate trajectory id {}", t.id)));
            }
            if t.is_empty() {
                return Err(Error::Dataset(format!("trajectory {} has no points", t.id)));
            }
            if let Some(p) = t.points.iter().position(|p| !p.is_finite()) {
                return Err(Error::Dataset(format!(
                    "trajectory {} point {}: non-finite coordinate",
                    t.id,
                    p + 1
                )));
            }
        }

        let mut pairs: Vec<_> = trajectories.into_iter().zip(labels).collect();
        pairs.sort_by_key(|(t, _)| t.id);
        let (trajectories, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();

        let n_pos = labels.iter().filter(|l| l.is_positive()).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::Dataset(format!(
                "empty group (n_pos = {n_pos}, n_neg = {n_neg})"
            )));
        }
        Ok(LabeledDataset {
            trajectories,
            labels,
            n_pos,
            n_neg,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn trajectory(&self, index: usize) -> &Trajectory {
        &self.trajectories[index]
    }

    pub fn points(&self, index: usize) -> &[Point] {
        &self.trajectories[index].points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Label {
        self.labels[index]
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Position of the trajectory with external id `id`.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.trajectories.binary_search_by_key(&id, |t| t.id).ok()
    }

    /// Total number of windows with at least `min_len` points.
    pub fn count_subtrajectories(&self, min_len: usize) -> u64 {
        self.trajectories
            .iter()
            .map(|t| {
                let w = (t.len() + 1).saturating_sub(min_len) as u64;
                w * (w + 1) / 2
            })
            .sum()
    }
}

/// A window `T_i^(s,e)` of trajectory `traj` (dataset index).
///
/// `start` and `end` are 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubTrajRef {
    pub traj: usize,
    pub start: usize,
    pub end: usize,
}

impl SubTrajRef {
    pub const fn new(traj: usize, start: usize, end: usize) -> Self {
        SubTrajRef { traj, start, end }
    }

    /// Number of points in the window.
    pub const fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub const fn is_empty(&self) -> bool {
        false
    }

    /// 0-based slice range into the trajectory's points.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start - 1..self.end
    }

    /// The window with its end pushed one point further.
    pub const fn extended(&self) -> SubTrajRef {
        SubTrajRef {
            traj: self.traj,
            start: self.start,
            end: self.end + 1,
        }
    }

    /// Number of shared indices with another window of the same trajectory.
    pub fn overlap(&self, other: &SubTrajRef) -> usize {
        if self.traj != other.traj {
            return 0;
        }
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if hi >= lo {
            hi - lo + 1
        } else {
            0
        }
    }
}

impl fmt::Display for SubTrajRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T[{}]({},{})", self.traj, self.start, self.end)
    }
}

/// Every length-`min_len` window, ordered by trajectory then start.
pub fn enumerate_seeds(dataset: &LabeledDataset, min_len: usize) -> Vec<SubTrajRef> {
    assert!(min_len >= 2, "minimum length must be at least 2");
    let mut seeds = Vec::new();
    for (i, t) in dataset.trajectories().iter().enumerate() {
        if t.len() < min_len {
            continue;
        }
        for s in 1..=t.len() - min_len + 1 {
            seeds.push(SubTrajRef::new(i, s, s + min_len - 1));
        }
    }
    seeds
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn line(id: u64, n: usize) -> Trajectory {
        Trajectory::new(id, (0..n).map(|i| (i as f64, 0.0)))
    }

    #[test]
    fn minimal_dataset() {
        let ds = LabeledDataset::new(
            vec![line(1, 3), line(2, 3)],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        assert_eq!((ds.len(), ds.n_pos(), ds.n_neg()), (2, 1, 1));
    }

    #[test]
    fn single_group_rejected() {
        let err = LabeledDataset::new(
            vec![line(1, 3), line(2, 3)],
            vec![Label::Positive, Label::Positive],
        )
        .unwrap_err();
        assert!(err.to_string().contains("empty group"), "{err}");
    }

    #[test]
    fn sorted_by_id() {
        let ds = LabeledDataset::new(
            vec![line(9, 2), line(3, 2)],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        assert_eq!(ds.trajectory(0).id, 3);
        assert_eq!(ds.label(0), Label::Negative);
        assert_eq!(ds.index_of(9), Some(1));
    }

    #[test]
    fn non_finite_rejected() {
        let t = Trajectory::new(1, [(0.0, f64::NAN)]);
        let err = LabeledDataset::new(vec![t, line(2, 2)], vec![Label::Positive, Label::Negative])
            .unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn label_parsing() {
        assert_eq!(Label::parse("+1"), Some(Label::Positive));
        assert_eq!(Label::parse("1"), Some(Label::Positive));
        assert_eq!(Label::parse("-1"), Some(Label::Negative));
        assert_eq!(Label::parse("0"), None);
    }

    #[test]
    fn seeds_of_short_and_long() {
        let ds = LabeledDataset::new(
            vec![line(1, 4), line(2, 1)],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        assert_eq!(
            enumerate_seeds(&ds, 2),
            vec![
                SubTrajRef::new(0, 1, 2),
                SubTrajRef::new(0, 2, 3),
                SubTrajRef::new(0, 3, 4)
            ]
        );
        assert!(enumerate_seeds(&ds, 5).is_empty());
    }

    #[test]
    fn seeds_three_by_four() {
        let ds = LabeledDataset::new(
            vec![line(1, 4), line(2, 4), line(3, 4)],
            vec![Label::Positive, Label::Negative, Label::Negative],
        )
        .unwrap();
        assert_eq!(enumerate_seeds(&ds, 2).len(), 9);
        // 3 * (3 + 2 + 1) windows of length >= 2
        assert_eq!(ds.count_subtrajectories(2), 18);
    }

    #[test]
    fn overlap_counts_shared_indices() {
        let a = SubTrajRef::new(0, 3, 10);
        assert_eq!(a.overlap(&SubTrajRef::new(0, 8, 12)), 3);
        assert_eq!(a.overlap(&SubTrajRef::new(0, 11, 12)), 0);
        assert_eq!(a.overlap(&SubTrajRef::new(1, 3, 10)), 0);
    }

    proptest! {
        #[test]
        fn seed_count_and_bounds(lens in prop::collection::vec(1usize..15, 2..8), min_len in 2usize..6) {
            let n = lens.len();
            let trajs: Vec<_> = lens.iter().enumerate().map(|(i, &m)| line(i as u64, m)).collect();
            let mut labels = vec![Label::Negative; n];
            labels[0] = Label::Positive;
            let ds = LabeledDataset::new(trajs, labels).unwrap();
            let seeds = enumerate_seeds(&ds, min_len);
            let expected: usize = lens.iter().map(|&m| (m + 1).saturating_sub(min_len)).sum();
            prop_assert_eq!(seeds.len(), expected);
            for s in &seeds {
                prop_assert!(1 <= s.start && s.start < s.end && s.end <= ds.points(s.traj).len());
                prop_assert_eq!(s.len(), min_len);
            }
            prop_assert!(seeds.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
