//! Statistically discriminative sub-trajectory mining.
//!
//! Given trajectories split into a positive and a negative group, the miner
//! reports every sub-trajectory whose ε-neighborhood is significantly
//! unbalanced between the groups (two-sided Fisher exact test), with the
//! family-wise error rate held at `α` by Westfall–Young permutation testing.
//! Chains of windows that share a start index are pruned as soon as the
//! smallest p-value they could ever reach can no longer influence the
//! permutation threshold.
//!
//! ```
//! use sdsm::{mine, LabeledDataset, Label, MiningConfig, Trajectory};
//!
//! let trajectories = vec![
//!     Trajectory::new(1, [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]),
//!     Trajectory::new(2, [(0.0, 0.1), (1.0, 0.1), (2.0, 0.1)]),
//!     Trajectory::new(3, [(5.0, 5.0), (6.0, 7.0), (4.0, 9.0)]),
//! ];
//! let labels = vec![Label::Positive, Label::Positive, Label::Negative];
//! let dataset = LabeledDataset::new(trajectories, labels)?;
//!
//! let config = MiningConfig { eps: 0.2, min_len: 2, top_k: 2, perms: 100, alpha: 0.05, ..Default::default() };
//! let result = mine(&dataset, &config)?;
//! // three trajectories cannot produce a significant table
//! assert!(result.discoveries.is_empty());
//! # Ok::<(), sdsm::Error>(())
//! ```

pub mod error;
pub mod exact;
pub mod geometry;
pub mod io;
mod mask;
pub mod miner;
pub mod neighborhood;
pub mod permutation;
pub mod report;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use exact::{
    fisher_two_sided_p, hypergeom_log_pmf, p_lower_bound, ContingencyCounts, ExactTest,
};
pub use geometry::{avg_top_k_max, extend_topk, pointwise_distance, window_distance, TopKState};
pub use io::{load_dataset, write_dataset};
pub use mask::TrajMask;
pub use miner::{
    adjusted_p, diff_results, mine, oracle_mine, process_node, run, DiscoveryRecord, MiningConfig,
    MiningResult, Mode,
};
pub use neighborhood::{
    extend_neighbors, seed_neighbors, support_of, NeighborIndex, NeighborParams, NeighborSet,
    SupportSet,
};
pub use permutation::{
    compute_delta_star, generate_permutations, perm_support_pos, MinPTable, PermutationSet,
    RNG_NAME,
};
pub use report::{write_reports, RunSummary};
pub use synth::{generate, GenConfig, Manifest};
pub use trajectory::{enumerate_seeds, Label, LabeledDataset, Point, SubTrajRef, Trajectory};
