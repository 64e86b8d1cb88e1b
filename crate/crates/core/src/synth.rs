//! Seeded synthetic datasets.
//!
//! Every trajectory is a 2D Gaussian random walk starting at the origin.
//! Null datasets (`planted_len = 0`) carry no group signal at all. Planted
//! datasets copy one corridor (a fixed random-walk segment) with Gaussian
//! jitter into a random window of a fraction of the positive trajectories.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::ManifestRow;
use crate::trajectory::{Label, LabeledDataset, Point, SubTrajRef, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_pos: usize,
    pub n_neg: usize,
    /// Points per trajectory.
    pub traj_len: usize,
    pub step_sigma: f64,
    /// Corridor length in points; `0` generates a null dataset.
    pub planted_len: usize,
    /// Fraction of positive trajectories carrying the corridor.
    pub planted_frac: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_pos: 20,
            n_neg: 20,
            traj_len: 20,
            step_sigma: 1.0,
            planted_len: 0,
            planted_frac: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_pos == 0 || self.n_neg == 0 {
            return fail("both groups need at least one trajectory");
        }
        if self.traj_len == 0 {
            return fail("trajectories need at least one point");
        }
        if self.planted_len > self.traj_len {
            return fail("planted corridor is longer than the trajectories");
        }
        if !(0.0..=1.0).contains(&self.planted_frac) {
            return fail("planted fraction must lie in [0, 1]");
        }
        for s in [self.step_sigma, self.noise_sigma] {
            if !(s.is_finite() && s >= 0.0) {
                return fail("sigmas must be finite and non-negative");
            }
        }
        Ok(())
    }

    /// Number of positive trajectories that receive the corridor.
    pub fn carrier_count(&self) -> usize {
        if self.planted_len == 0 {
            return 0;
        }
        let v = self.planted_frac * self.n_pos as f64;
        let r = v.round();
        let c = if (v - r).abs() <= 1e-9 * v.max(1.0) {
            r
        } else {
            v.ceil()
        };
        c as usize
    }
}

/// Where the corridor was planted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    /// The planted window in dataset coordinates, if `traj` carries one.
    pub fn carrier_window(&self, dataset: &LabeledDataset, traj: usize) -> Option<SubTrajRef> {
        let id = dataset.trajectory(traj).id;
        self.rows
            .iter()
            .find(|r| r.traj_id == id)
            .map(|r| SubTrajRef::new(traj, r.start, r.end))
    }
}

pub fn generate(config: &GenConfig) -> Result<(LabeledDataset, Manifest)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_pos + config.n_neg;

    let mut labels: Vec<Label> = (0..n)
        .map(|i| {
            if i < config.n_pos {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    labels.shuffle(&mut rng);

    let step = Normal::new(0.0, config.step_sigma).expect("validated sigma");
    let walk = |rng: &mut ChaCha8Rng, start: Point, len: usize| -> Vec<Point> {
        let mut p = start;
        (0..len)
            .map(|i| {
                if i > 0 {
                    p = Point::new(p.x + step.sample(rng), p.y + step.sample(rng));
                }
                p
            })
            .collect()
    };

    let mut trajectories: Vec<Trajectory> = (0..n)
        .map(|i| Trajectory {
            id: i as u64 + 1,
            points: walk(&mut rng, Point::new(0.0, 0.0), config.traj_len),
        })
        .collect();

    let mut manifest = Manifest::default();
    let carriers = config.carrier_count();
    if carriers > 0 {
        let reach = config.step_sigma * (config.traj_len as f64).sqrt();
        let origin = Point::new(
            rng.random_range(-reach..=reach),
            rng.random_range(-reach..=reach),
        );
        let corridor = walk(&mut rng, origin, config.planted_len);
        let jitter = Normal::new(0.0, config.noise_sigma).expect("validated sigma");

        let mut positives: Vec<usize> = (0..n).filter(|&i| labels[i].is_positive()).collect();
        positives.shuffle(&mut rng);
        let mut chosen = positives[..carriers].to_vec();
        chosen.sort_unstable();
        for i in chosen {
            let start = rng.random_range(0..=config.traj_len - config.planted_len);
            for (t, c) in corridor.iter().enumerate() {
                trajectories[i].points[start + t] =
                    Point::new(c.x + jitter.sample(&mut rng), c.y + jitter.sample(&mut rng));
            }
            manifest.rows.push(ManifestRow {
                traj_id: trajectories[i].id,
                start: start + 1,
                end: start + config.planted_len,
            });
        }
    }

    let dataset = LabeledDataset::new(trajectories, labels)?;
    Ok((dataset, manifest))
}
