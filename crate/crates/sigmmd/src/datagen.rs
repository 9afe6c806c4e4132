//! Seeded generators for the synthetic sequence families used in the
//! experiments, plus the random tick-deletion transform.
//!
//! All generators draw from ChaCha8 streams: sample i of a batch uses
//! `ChaCha8Rng::seed_from_u64(seed)` with stream i, so batches are
//! reproducible bit-for-bit for any thread count and any batch splitting.
//! Derived seeds (per-path downsampling, bandwidth subsampling) come from
//! [`mix_seed`], a splitmix64-style mixer, so independent purposes never
//! share a stream by accident.

use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::try_map_indexed;
use crate::signature::PathSample;

/// The synthetic dataset families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Simple random walk: X_0 = 0, i.i.d. ±1 increments, d = 1.
    RandomWalk,
    /// Walk whose every w-th increment is the product of the previous w−1
    /// increments; same one-dimensional marginals as the simple walk.
    PathDependentWalk,
    /// Noisy circle: k_spins revolutions of radius r around a random
    /// origin, plus i.i.d. Gaussian noise, d = 2.
    CircleSignal,
    /// The noise component alone (no circle, no origin), d = 2.
    PureNoise,
}

impl DatasetKind {
    /// Dimension of the generated paths.
    pub fn dim(self) -> usize {
        match self {
            DatasetKind::RandomWalk | DatasetKind::PathDependentWalk => 1,
            DatasetKind::CircleSignal | DatasetKind::PureNoise => 2,
        }
    }
}

/// Full description of one synthetic sample distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Number of observations per path (time grid size).
    pub length: usize,
    /// Dependence window of the path-dependent walk.
    pub w: usize,
    /// Number of full revolutions of the circle signal.
    pub k_spins: usize,
    /// Circle radius.
    pub r: f64,
    /// Noise standard deviation (0 gives the deterministic signal).
    pub sigma: f64,
    /// Standard deviation of each origin coordinate.
    pub origin_std: f64,
    /// Base seed; sample i of a batch uses stream i of this seed.
    pub seed: u64,
}

impl DatasetConfig {
    pub fn new(kind: DatasetKind, seed: u64) -> Self {
        DatasetConfig {
            kind,
            length: 101,
            w: 3,
            k_spins: 10,
            r: 0.8,
            sigma: 0.5,
            origin_std: 5.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::invalid("path length must be at least 2"));
        }
        if self.w < 2 {
            return Err(Error::invalid("dependence window w must be at least 2"));
        }
        if self.r <= 0.0 || !self.r.is_finite() {
            return Err(Error::invalid("circle radius must be positive"));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::invalid("noise level must be non-negative"));
        }
        if self.origin_std < 0.0 || !self.origin_std.is_finite() {
            return Err(Error::invalid("origin spread must be non-negative"));
        }
        Ok(())
    }
}

/// Deterministic seed derivation (splitmix64 finalizer over seed and salt),
/// used to hand unrelated consumers unrelated seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform_times(length: usize) -> Vec<f64> {
    (0..length).map(|i| i as f64 / (length - 1) as f64).collect()
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn walk_values(cfg: &DatasetConfig, rng: &mut ChaCha8Rng, path_dependent: bool) -> Vec<f64> {
    let mut values = Vec::with_capacity(cfg.length);
    values.push(0.0);
    let mut increments: Vec<f64> = Vec::with_capacity(cfg.length - 1);
    for s in 1..cfg.length {
        // Deterministic steps consume no randomness.
        let inc = if path_dependent && s % cfg.w == 0 {
            increments[s - cfg.w..s - 1].iter().product()
        } else {
            sign(rng)
        };
        increments.push(inc);
        values.push(values[s - 1] + inc);
    }
    values
}

fn circle_points(cfg: &DatasetConfig, rng: &mut ChaCha8Rng, with_signal: bool) -> Vec<f64> {
    let origin = if with_signal {
        let ox: f64 = rng.sample(StandardNormal);
        let oy: f64 = rng.sample(StandardNormal);
        [cfg.origin_std * ox, cfg.origin_std * oy]
    } else {
        [0.0, 0.0]
    };
    let mut points = Vec::with_capacity(2 * cfg.length);
    let omega = 2.0 * std::f64::consts::PI * cfg.k_spins as f64;
    for i in 0..cfg.length {
        let t = i as f64 / (cfg.length - 1) as f64;
        let (mut x, mut y) = (0.0, 0.0);
        if with_signal {
            x = origin[0] + cfg.r * (omega * t).cos();
            y = origin[1] + cfg.r * (omega * t).sin();
        }
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        points.push(x + cfg.sigma * ex);
        points.push(y + cfg.sigma * ey);
    }
    points
}

/// Generates sample `sample_index` of the batch defined by `cfg`.
pub fn generate_indexed(cfg: &DatasetConfig, sample_index: u64) -> Result<PathSample> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(sample_index);
    let times = uniform_times(cfg.length);
    match cfg.kind {
        DatasetKind::RandomWalk => {
            PathSample::from_values(times, walk_values(cfg, &mut rng, false))
        }
        DatasetKind::PathDependentWalk => {
            PathSample::from_values(times, walk_values(cfg, &mut rng, true))
        }
        DatasetKind::CircleSignal => {
            PathSample::new(times, circle_points(cfg, &mut rng, true), 2)
        }
        DatasetKind::PureNoise => {
            PathSample::new(times, circle_points(cfg, &mut rng, false), 2)
        }
    }
}

/// Generates the first sample of the batch (stream 0).
pub fn generate(cfg: &DatasetConfig) -> Result<PathSample> {
    generate_indexed(cfg, 0)
}

/// Generates `count` independent samples, one per stream.
pub fn generate_batch(cfg: &DatasetConfig, count: usize) -> Result<Vec<PathSample>> {
    cfg.validate()?;
    try_map_indexed(count, |i| generate_indexed(cfg, i as u64))
}

/// Deletes ticks uniformly at random: draws a target size uniformly in
/// [keep_min, keep_max], then keeps a uniform subset of that size that
/// always contains the first and last tick. Retained observations keep
/// their original times, values, and order.
pub fn downsample(
    path: &PathSample,
    keep_min: usize,
    keep_max: usize,
    seed: u64,
) -> Result<PathSample> {
    let n = path.len();
    if keep_min < 2 || keep_min > keep_max || keep_max > n {
        return Err(Error::invalid(
            "tick retention range must satisfy 2 <= keep_min <= keep_max <= length",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(keep_min..=keep_max);
    let mut keep: Vec<usize> = vec![0];
    if count > 2 {
        let mut interior: Vec<usize> = index_sample(&mut rng, n - 2, count - 2)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        interior.sort_unstable();
        keep.extend(interior);
    }
    keep.push(n - 1);

    let d = path.dim();
    let times: Vec<f64> = keep.iter().map(|&i| path.times()[i]).collect();
    let mut points = Vec::with_capacity(keep.len() * d);
    for &i in &keep {
        points.extend_from_slice(path.point(i));
    }
    PathSample::new(times, points, d)
}
