//! Late (uncovered) vertex sets and the marking measures built on them:
//! samplers, the zero-count distinguisher, the exponential-moment bound on
//! total variation, and joint lateness correlation estimates.
//!
//! A *late set at fraction `alpha`* is the set of vertices a stationary-start
//! lazy walk has not visited by time `⌊alpha · T̂_cov⌋`, where `T̂_cov` is a
//! cover-time reference estimated once per experiment. A *range marking*
//! puts an independent fair bit on every visited vertex and forces unvisited
//! vertices to zero; the *uniform marking* puts a fair bit everywhere.
//! The tests here quantify how distinguishable the two laws are as `alpha`
//! varies, which is exactly what controls lamplighter mixing.

use rand::{Rng, RngExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphs::GraphTopology;
use crate::rng::{derive_seed, indexed_bit, replica_rng};
use crate::stats::{wilson_interval, Estimate};
use crate::walker::{run_range_with, StartPoint};

/// Stream-lane salts, fixed so every estimator's randomness is a pure
/// function of its master seed.
const SALT_WALKS: u64 = 0x4C41_5445;
const SALT_COINS: u64 = 0x434F_494E;
const SALT_PAIR_LEFT: u64 = 0x5041_4952;
const SALT_PAIR_RIGHT: u64 = 0x5249_4748;

/// Where a marking's bits came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MarkingSource {
    /// Fair bits on the range of a stationary-start walk run for `steps`
    /// steps (`steps = ⌊alpha · t_cov_ref⌋`), zero elsewhere.
    Mu {
        /// Fraction of the cover-time reference the walk ran for.
        alpha: f64,
        /// The resulting step count.
        steps: u64,
    },
    /// Independent fair bits on every vertex.
    Uniform,
}

/// A `{0,1}` labelling of the vertex set together with the law that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marking {
    /// One bit per vertex.
    pub bits: Vec<bool>,
    /// Which law produced it.
    pub source: MarkingSource,
}

impl Marking {
    /// Number of zero bits.
    pub fn zeros(&self) -> usize {
        self.bits.iter().filter(|&&b| !b).count()
    }
}

/// The set of vertices still unvisited at a fraction of the cover time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateSet {
    /// Unvisited vertices, ascending.
    pub vertices: Vec<u32>,
    /// The time fraction.
    pub alpha: f64,
    /// The cover-time reference the fraction was converted through.
    pub t_cov_ref: f64,
}

impl LateSet {
    /// Size of the late set.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// True when every vertex was reached in time.
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Knobs for the distinguishability estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinguisherConfig {
    /// Base parameter of the exponential moment; `ln 2` means base 2.
    pub zeta: f64,
    /// One-sided rejection cutoff for the zero-count z statistic.
    pub z_threshold: f64,
    /// Replicas for frequency estimates.
    pub replicas: usize,
    /// Independent range pairs for the exponential moment.
    pub pairs: usize,
    /// Master seed; every stream below derives from it.
    pub seed: u64,
}

impl Default for DistinguisherConfig {
    fn default() -> Self {
        DistinguisherConfig {
            zeta: std::f64::consts::LN_2,
            z_threshold: 3.0,
            replicas: 1000,
            pairs: 2000,
            seed: 0,
        }
    }
}

impl DistinguisherConfig {
    /// Panics on nonsensical settings; called by every estimator.
    fn validate(&self) {
        assert!(self.zeta > 0.0, "exponential-moment base must be positive");
        assert!(self.replicas >= 2, "need at least two replicas");
    }
}

/// Convert a time fraction to a step count: `⌊alpha · t_cov_ref⌋`.
pub fn steps_for_fraction(alpha: f64, t_cov_ref: f64) -> u64 {
    assert!(alpha >= 0.0, "time fraction must be nonnegative");
    assert!(t_cov_ref > 0.0, "cover-time reference must be positive");
    (alpha * t_cov_ref).floor() as u64
}

/// Sample one late set: run a stationary-start walk for `⌊alpha·t_cov_ref⌋`
/// steps and collect the unvisited vertices.
pub fn late_set(
    g: &GraphTopology,
    alpha: f64,
    t_cov_ref: f64,
    rng: &mut impl Rng,
) -> LateSet {
    let steps = steps_for_fraction(alpha, t_cov_ref);
    let record = run_range_with(g, rng, StartPoint::Stationary, steps, false);
    LateSet { vertices: record.unvisited(), alpha, t_cov_ref }
}

/// Fair bits on the visited vertices of `visited`, zero elsewhere. Coins are
/// drawn in ascending vertex order, one per visited vertex.
pub fn marking_from_range(visited: &[bool], source: MarkingSource, rng: &mut impl Rng) -> Marking {
    let bits = visited.iter().map(|&seen| seen && rng.random_bool(0.5)).collect();
    Marking { bits, source }
}

/// Sample a range marking: a fresh stationary-start range at
/// `⌊alpha·t_cov_ref⌋` steps, fair bits on it, zeros off it.
pub fn sample_marking_mu(
    g: &GraphTopology,
    alpha: f64,
    t_cov_ref: f64,
    rng: &mut impl Rng,
) -> Marking {
    let steps = steps_for_fraction(alpha, t_cov_ref);
    let record = run_range_with(g, rng, StartPoint::Stationary, steps, false);
    marking_from_range(&record.visited, MarkingSource::Mu { alpha, steps }, rng)
}

/// Sample the uniform marking: independent fair bits everywhere.
pub fn sample_marking_uniform(g: &GraphTopology, rng: &mut impl Rng) -> Marking {
    let bits = (0..g.vertex_count()).map(|_| rng.random_bool(0.5)).collect();
    Marking { bits, source: MarkingSource::Uniform }
}

/// The centered, scaled zero count: `(zeros − |V|/2) / (√|V|/2)`.
/// Standard normal under the uniform marking; drifts positive when unvisited
/// vertices force extra zeros.
pub fn zero_count_statistic(m: &Marking) -> f64 {
    let n = m.bits.len() as f64;
    (m.zeros() as f64 - n / 2.0) / (n.sqrt() / 2.0)
}

/// Rejection frequencies of the zero-count test over a grid of time
/// fractions, coupled through common random numbers.
#[derive(Debug, Clone)]
pub struct PowerCurve {
    /// `(alpha, rejection frequency)` rows, in the caller's grid order.
    pub rows: Vec<(f64, Estimate)>,
    /// Mean z statistic per grid point, same order.
    pub mean_z: Vec<Estimate>,
}

/// Zero-count rejection power over an `alpha` grid.
///
/// Each replica runs one walk to the largest horizon, keeps first-visit
/// times, and reuses a single coin per vertex across the whole grid. With
/// shared randomness the per-replica z statistic is nonincreasing in `alpha`
/// (a longer prefix of the same walk covers more vertices), so the estimated
/// power is monotone by construction rather than up to noise.
pub fn power_grid(
    g: &GraphTopology,
    alphas: &[f64],
    t_cov_ref: f64,
    config: &DistinguisherConfig,
) -> PowerCurve {
    config.validate();
    let horizons: Vec<u64> =
        alphas.iter().map(|&a| steps_for_fraction(a, t_cov_ref)).collect();
    let t_max = horizons.iter().copied().max().unwrap_or(0);
    let walk_seed = derive_seed(config.seed, SALT_WALKS);
    let coin_seed = derive_seed(config.seed, SALT_COINS);
    let n = g.vertex_count();
    let per_replica: Vec<(Vec<f64>, Vec<bool>)> = (0..config.replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(walk_seed, replica);
            let record = run_range_with(g, &mut rng, StartPoint::Stationary, t_max, true);
            let first = record.first_visit.as_ref().expect("tracking requested");
            let mut zs = Vec::with_capacity(horizons.len());
            let mut rejects = Vec::with_capacity(horizons.len());
            for &t in &horizons {
                let mut ones = 0usize;
                for x in 0..n {
                    if first[x] <= t && indexed_bit(coin_seed, replica, x as u64) {
                        ones += 1;
                    }
                }
                let zeros = n - ones;
                let z = (zeros as f64 - n as f64 / 2.0) / ((n as f64).sqrt() / 2.0);
                zs.push(z);
                rejects.push(z > config.z_threshold);
            }
            (zs, rejects)
        })
        .collect();
    let rows = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let indicators: Vec<f64> = per_replica
                .iter()
                .map(|(_, rejects)| if rejects[i] { 1.0 } else { 0.0 })
                .collect();
            (alpha, Estimate::from_values(&indicators))
        })
        .collect();
    let mean_z = (0..alphas.len())
        .map(|i| {
            let zs: Vec<f64> = per_replica.iter().map(|(zs, _)| zs[i]).collect();
            Estimate::from_values(&zs)
        })
        .collect();
    PowerCurve { rows, mean_z }
}

/// Raw zero-count statistics for range markings over an `alpha` grid, with
/// matched uniform-marking statistics, for distribution-level comparisons.
#[derive(Debug, Clone)]
pub struct ZeroStatisticSamples {
    /// `per_alpha[i][r]` is the z statistic of replica `r` at `alphas[i]`.
    /// Replicas share walks and coins across the grid, so each replica's
    /// statistic is nonincreasing in `alpha`.
    pub per_alpha: Vec<Vec<f64>>,
    /// z statistics of independent uniform markings, one per replica.
    pub uniform: Vec<f64>,
}

/// Collect raw zero-count statistics under the range-marking law at each
/// `alpha` and under the uniform law, using the same coupled-walk scheme as
/// [`power_grid`] (identical seeds produce identical statistics).
pub fn zero_statistic_samples(
    g: &GraphTopology,
    alphas: &[f64],
    t_cov_ref: f64,
    replicas: u64,
    seed: u64,
) -> ZeroStatisticSamples {
    assert!(!alphas.is_empty(), "need at least one grid point");
    let horizons: Vec<u64> =
        alphas.iter().map(|&a| steps_for_fraction(a, t_cov_ref)).collect();
    let t_max = horizons.iter().copied().max().unwrap_or(0);
    let walk_seed = derive_seed(seed, SALT_WALKS);
    let coin_seed = derive_seed(seed, SALT_COINS);
    let n = g.vertex_count();
    let per_replica: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(walk_seed, replica);
            let record = run_range_with(g, &mut rng, StartPoint::Stationary, t_max, true);
            let first = record.first_visit.as_ref().expect("tracking requested");
            horizons
                .iter()
                .map(|&t| {
                    let mut ones = 0usize;
                    for x in 0..n {
                        if first[x] <= t && indexed_bit(coin_seed, replica, x as u64) {
                            ones += 1;
                        }
                    }
                    let zeros = n - ones;
                    (zeros as f64 - n as f64 / 2.0) / ((n as f64).sqrt() / 2.0)
                })
                .collect()
        })
        .collect();
    let per_alpha = (0..alphas.len())
        .map(|i| per_replica.iter().map(|zs| zs[i]).collect())
        .collect();
    let uniform = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(coin_seed, replica);
            zero_count_statistic(&sample_marking_uniform(g, &mut rng))
        })
        .collect();
    ZeroStatisticSamples { per_alpha, uniform }
}

/// Rejection frequency of the zero-count test against range markings at one
/// time fraction.
pub fn distinguisher_power(
    g: &GraphTopology,
    alpha: f64,
    t_cov_ref: f64,
    config: &DistinguisherConfig,
) -> Estimate {
    power_grid(g, &[alpha], t_cov_ref, config).rows[0].1
}

/// False-rejection frequency of the same test against uniform markings;
/// should sit near the nominal one-sided Gaussian level.
pub fn uniform_false_rejection(g: &GraphTopology, config: &DistinguisherConfig) -> Estimate {
    config.validate();
    let seed = derive_seed(config.seed, SALT_COINS);
    let indicators: Vec<f64> = (0..config.replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, replica);
            let marking = sample_marking_uniform(g, &mut rng);
            if zero_count_statistic(&marking) > config.z_threshold {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Estimate::from_values(&indicators)
}

/// Outcome of the exponential-moment estimator.
#[derive(Debug, Clone)]
pub struct ExpMomentReport {
    /// Monte Carlo mean of `2^{|L ∩ L'|}` over independent late-set pairs.
    pub m_hat: Estimate,
    /// The Cauchy–Schwarz bound `½·√max(m̂ − 1, 0)` on the total variation
    /// distance between the range-marking and uniform laws.
    pub tv_upper: f64,
    /// Pairs whose intersection exceeded 500 vertices: the estimator is in
    /// the blow-up regime and `m_hat` is not statistically meaningful.
    pub overflow_count: usize,
    /// Pairs sampled.
    pub pairs: usize,
}

/// Threshold above which an intersection count is flagged as blown up.
pub const OVERFLOW_EXPONENT: f64 = 500.0;

/// Estimate `m = E[2^{|L ∩ L'|}]` over independent late-set pairs and derive
/// the total-variation upper bound `½√(m−1)`.
///
/// A large value is information, not an error: it demonstrates the
/// second-moment method failing below the threshold fraction, so overflowing
/// pairs are counted rather than rejected.
pub fn exp_moment_estimate(
    g: &GraphTopology,
    alpha: f64,
    t_cov_ref: f64,
    config: &DistinguisherConfig,
) -> ExpMomentReport {
    config.validate();
    assert!(config.pairs >= 2, "need at least two pairs");
    let left_seed = derive_seed(config.seed, SALT_PAIR_LEFT);
    let right_seed = derive_seed(config.seed, SALT_PAIR_RIGHT);
    let base = config.zeta.exp();
    let samples: Vec<(f64, bool)> = (0..config.pairs as u64)
        .into_par_iter()
        .map(|pair| {
            let mut left_rng = replica_rng(left_seed, pair);
            let mut right_rng = replica_rng(right_seed, pair);
            let left = late_set(g, alpha, t_cov_ref, &mut left_rng);
            let right = late_set(g, alpha, t_cov_ref, &mut right_rng);
            let mut overlap = 0usize;
            let mut i = 0usize;
            let mut j = 0usize;
            while i < left.vertices.len() && j < right.vertices.len() {
                match left.vertices[i].cmp(&right.vertices[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        overlap += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            let exponent = overlap as f64;
            (base.powf(exponent), exponent > OVERFLOW_EXPONENT)
        })
        .collect();
    let values: Vec<f64> = samples.iter().map(|&(v, _)| v).collect();
    let overflow_count = samples.iter().filter(|&&(_, o)| o).count();
    let m_hat = Estimate::from_values(&values);
    let tv_upper = 0.5 * (m_hat.mean - 1.0).max(0.0).sqrt();
    ExpMomentReport { m_hat, tv_upper, overflow_count, pairs: config.pairs }
}

/// Joint-lateness measurement for a fixed tuple of vertices.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    /// Empirical probability that every listed vertex is late.
    pub p_joint: f64,
    /// Number of replicas where that happened.
    pub joint_count: usize,
    /// Per-vertex marginal late probabilities, in input order.
    pub p_singles: Vec<f64>,
    /// Product of the marginals.
    pub product: f64,
    /// `p_joint / product`, present only with at least ten joint events.
    pub ratio: Option<f64>,
    /// Wilson interval (z = 3) for the joint probability; the honest answer
    /// when the point estimate is withheld.
    pub joint_interval: (f64, f64),
    /// The idealized reference `|V|^{−ℓ·alpha}` for an `ℓ`-tuple.
    pub reference: f64,
    /// Replicas used.
    pub replicas: usize,
}

/// Minimum joint events for reporting a point-estimate ratio.
pub const MIN_JOINT_EVENTS: usize = 10;

/// Estimate how far joint lateness of `points` departs from independence at
/// fraction `alpha`: the ratio `P[all late] / Π P[late]` with an
/// `|V|^{−ℓα}` reference value.
pub fn correlation_ratio(
    g: &GraphTopology,
    alpha: f64,
    t_cov_ref: f64,
    points: &[u32],
    replicas: usize,
    seed: u64,
) -> CorrelationReport {
    assert!(!points.is_empty(), "need at least one vertex");
    assert!(replicas >= 2, "need at least two replicas");
    let mut deduped = points.to_vec();
    deduped.sort_unstable();
    deduped.dedup();
    assert_eq!(deduped.len(), points.len(), "points must be distinct");
    let steps = steps_for_fraction(alpha, t_cov_ref);
    let walk_seed = derive_seed(seed, SALT_WALKS);
    let outcomes: Vec<Vec<bool>> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(walk_seed, replica);
            let record = run_range_with(g, &mut rng, StartPoint::Stationary, steps, false);
            points.iter().map(|&x| !record.visited[x as usize]).collect()
        })
        .collect();
    let mut single_counts = vec![0usize; points.len()];
    let mut joint_count = 0usize;
    for row in &outcomes {
        for (i, &late) in row.iter().enumerate() {
            if late {
                single_counts[i] += 1;
            }
        }
        if row.iter().all(|&late| late) {
            joint_count += 1;
        }
    }
    let p_singles: Vec<f64> =
        single_counts.iter().map(|&c| c as f64 / replicas as f64).collect();
    let product: f64 = p_singles.iter().product();
    let p_joint = joint_count as f64 / replicas as f64;
    let ratio = (joint_count >= MIN_JOINT_EVENTS && product > 0.0)
        .then(|| p_joint / product);
    let joint_interval = wilson_interval(joint_count, replicas, 3.0);
    let reference =
        (g.vertex_count() as f64).powf(-(points.len() as f64) * alpha);
    CorrelationReport {
        p_joint,
        joint_count,
        p_singles,
        product,
        ratio,
        joint_interval,
        reference,
        replicas,
    }
}

/// Mean late-set size at one fraction, for exponent checks
/// (`log Ê|L(alpha)| / log |V|` should track `1 − alpha`).
pub fn mean_late_size(
    g: &GraphTopology,
    alpha: f64,
    t_cov_ref: f64,
    replicas: usize,
    seed: u64,
) -> Estimate {
    assert!(replicas >= 2, "need at least two replicas");
    let walk_seed = derive_seed(seed, SALT_WALKS);
    let sizes: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(walk_seed, replica);
            late_set(g, alpha, t_cov_ref, &mut rng).len() as f64
        })
        .collect();
    Estimate::from_values(&sizes)
}
