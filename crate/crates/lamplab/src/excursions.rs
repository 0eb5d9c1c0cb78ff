//! Excursion decomposition of a walk around small target sets.
//!
//! An *excursion* around a target set starts when the walk enters the
//! sphere of radius `r` centred on the targets and ends when it leaves the
//! ball of radius `R`.  Between consecutive excursions the decomposition
//! waits out a relaxation gap (a multiple of the uniform mixing time) so
//! that successive excursions are approximately independent.  This module
//! provides the trajectory-level decomposition together with Monte-Carlo
//! estimators built on top of it: excursion success probabilities, mean
//! excursion lengths, occupation ratios, hitting-time predictions, an
//! excursion-rate partition of the vertex set, and per-excursion
//! conditional hit probabilities with an exact linear-algebra cross-check.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::graphs::GraphTopology;
use crate::oracle::{self, OracleError, DENSE_CAP};
use crate::rng::{derive_seed, replica_rng};
use crate::stats::Estimate;
use crate::walker;

/// Seed-derivation salts, one per estimator lane, so that estimators using
/// the same master seed draw from disjoint RNG streams.
const SALT_SUCCESS: u64 = 0x4558_4355;
const SALT_CYCLE: u64 = 0x4359_434C;
const SALT_OCCUPATION: u64 = 0x4F43_4355;
const SALT_PARTITION: u64 = 0x5041_5254;
const SALT_COUNT: u64 = 0x434E_5452;

/// Largest number of vertices measured individually by
/// [`cover_time_partition`]; larger graphs are sampled.
pub const PARTITION_SAMPLE_CAP: usize = 4096;
/// Number of vertices sampled when a graph exceeds [`PARTITION_SAMPLE_CAP`].
pub const PARTITION_SAMPLE_SIZE: usize = 256;
/// A conditional hit probability at least `1 - SATURATION_TOLERANCE` is
/// reported as saturated (the excursion geometry forces a hit).
pub const SATURATION_TOLERANCE: f64 = 1e-9;

/// Errors produced by excursion decomposition and its estimators.
#[derive(Debug, thiserror::Error)]
pub enum ExcursionError {
    /// The inner and outer radii must satisfy `0 < r < R`.
    #[error("invalid radii: need 0 < r < R, got r={r}, R={big_r}")]
    InvalidRadii { r: u32, big_r: u32 },
    /// The hit window must not outlast the relaxation gap.
    #[error("invalid multipliers: need 0 <= window <= gap, got window={window}, gap={gap}")]
    InvalidMultipliers { window: f64, gap: f64 },
    /// Two targets are so close that their balls of radius `R` overlap.
    #[error("targets {a} and {b} are {distance} apart; decomposition needs at least {required}")]
    TargetsTooClose {
        a: u32,
        b: u32,
        distance: u32,
        required: u32,
    },
    /// The sphere/ball structure degenerates (e.g. the ball swallows the
    /// whole graph), so "entering" and "leaving" lose their meaning.
    #[error("degenerate excursion geometry: {reason}")]
    GeometryDegenerate { reason: String },
    /// A simulation exceeded its safety horizon before completing.
    #[error("walk exceeded {steps}-step safety horizon before completing an excursion")]
    HorizonExceeded { steps: u64 },
    /// The uniform mixing time could not be obtained from the exact oracle
    /// and was not supplied explicitly.
    #[error("uniform mixing time unavailable: {0}")]
    Mixing(#[from] OracleError),
    /// A supplied trajectory references a vertex outside the graph.
    #[error("trajectory vertex {vertex} out of range for a {vertices}-vertex graph")]
    BadTrajectory { vertex: u32, vertices: usize },
}

/// Parameters of the excursion decomposition.
///
/// `gap` and `window` are expressed as multiples of the uniform mixing
/// time `t_mix_uniform(1/4)`; [`ExcursionParams::resolve`] converts them to
/// step counts.  When the graph is too large for the exact oracle, supply
/// `t_mix_uniform` explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcursionParams {
    /// Inner radius: excursions begin on the sphere at distance `r`.
    pub r: u32,
    /// Outer radius: excursions end on leaving the ball of radius `big_r`.
    pub big_r: u32,
    /// Relaxation gap between excursions, in units of the uniform mixing
    /// time.
    pub gap: f64,
    /// Hit window extending past the excursion end, in units of the
    /// uniform mixing time.  A target visit within the window still counts
    /// as a hit for the excursion that just ended.
    pub window: f64,
    /// Explicit uniform mixing time in steps; `None` asks the exact oracle.
    pub t_mix_uniform: Option<u64>,
}

impl Default for ExcursionParams {
    fn default() -> Self {
        Self {
            r: 1,
            big_r: 3,
            gap: 2.0,
            window: 1.0,
            t_mix_uniform: None,
        }
    }
}

impl ExcursionParams {
    /// Validate the radii and multipliers.
    pub fn validate(&self) -> Result<(), ExcursionError> {
        if self.r == 0 || self.r >= self.big_r {
            return Err(ExcursionError::InvalidRadii {
                r: self.r,
                big_r: self.big_r,
            });
        }
        if !(0.0..).contains(&self.window)
            || !(0.0..).contains(&self.gap)
            || self.window > self.gap
        {
            return Err(ExcursionError::InvalidMultipliers {
                window: self.window,
                gap: self.gap,
            });
        }
        Ok(())
    }

    /// Convert gap and window multipliers into step counts, consulting the
    /// exact oracle for the uniform mixing time unless one was supplied.
    pub fn resolve(&self, g: &GraphTopology) -> Result<ResolvedParams, ExcursionError> {
        self.validate()?;
        let t_u = match self.t_mix_uniform {
            Some(t) => t,
            None => oracle::uniform_mixing_time(g, oracle::DEFAULT_EPSILON)?,
        };
        let to_steps = |mult: f64| (mult * t_u as f64).ceil() as u64;
        Ok(ResolvedParams {
            r: self.r,
            big_r: self.big_r,
            gap_steps: to_steps(self.gap),
            window_steps: to_steps(self.window),
            t_mix_uniform: t_u,
        })
    }

    /// Copy of `self` with the uniform mixing time pinned, so repeated
    /// estimator calls skip the oracle.
    pub fn with_mixing_time(&self, t_u: u64) -> Self {
        let mut p = self.clone();
        p.t_mix_uniform = Some(t_u);
        p
    }
}

/// [`ExcursionParams`] with multipliers converted to step counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResolvedParams {
    pub r: u32,
    pub big_r: u32,
    pub gap_steps: u64,
    pub window_steps: u64,
    pub t_mix_uniform: u64,
}

/// Distance structure around a target set, checked for the separation and
/// non-degeneracy conditions the decomposition needs.
#[derive(Clone, Debug)]
pub struct TargetGeometry {
    /// The target vertices.
    pub targets: Vec<u32>,
    /// Distance from every vertex to the nearest target.
    pub distance: Vec<u32>,
    /// Vertices at distance exactly `r` (excursion entry points).
    pub sphere: Vec<u32>,
    /// Number of vertices within distance `big_r`.
    pub ball_size: usize,
    pub r: u32,
    pub big_r: u32,
}

impl TargetGeometry {
    /// Build and validate the geometry for `targets` under `r`, `big_r`.
    ///
    /// Requires pairwise target distances of at least `2 * big_r` (so the
    /// outer balls are disjoint), a nonempty entry sphere, and an outer
    /// ball that does not swallow the whole vertex set.
    pub fn new(
        g: &GraphTopology,
        targets: &[u32],
        r: u32,
        big_r: u32,
    ) -> Result<Self, ExcursionError> {
        assert!(!targets.is_empty(), "target set must be nonempty");
        let n = g.vertex_count();
        for &t in targets {
            assert!((t as usize) < n, "target {t} out of range");
        }
        for (i, &a) in targets.iter().enumerate() {
            for &b in &targets[i + 1..] {
                let d = g.distance(a, b);
                if d < 2 * big_r {
                    return Err(ExcursionError::TargetsTooClose {
                        a,
                        b,
                        distance: d,
                        required: 2 * big_r,
                    });
                }
            }
        }
        let distance = g.multi_source_distances(targets);
        let sphere: Vec<u32> = (0..n as u32)
            .filter(|&v| distance[v as usize] == r)
            .collect();
        let ball_size = distance.iter().filter(|&&d| d <= big_r).count();
        if ball_size == n {
            return Err(ExcursionError::GeometryDegenerate {
                reason: format!(
                    "ball of radius {big_r} around the targets covers all {n} vertices"
                ),
            });
        }
        if sphere.is_empty() {
            return Err(ExcursionError::GeometryDegenerate {
                reason: format!("no vertex lies at distance exactly {r} from the targets"),
            });
        }
        Ok(Self {
            targets: targets.to_vec(),
            distance,
            sphere,
            ball_size,
            r,
            big_r,
        })
    }

    #[inline]
    fn dist(&self, v: u32) -> u32 {
        self.distance[v as usize]
    }
}

/// One completed excursion: entry on the sphere, exit outside the ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Excursion {
    /// Index within the trace (0-based).
    pub index: usize,
    /// Step at which the walk entered the sphere.
    pub entry_time: u64,
    /// Step at which the walk first left the outer ball.
    pub exit_time: u64,
    /// Sphere vertex where the excursion began.
    pub entry_vertex: u32,
    /// Vertex outside the ball where the excursion ended.
    pub exit_vertex: u32,
    /// Whether a target was visited between entry and exit.
    pub hit_by_exit: bool,
    /// Whether a target was visited between entry and the end of the hit
    /// window (`exit_time + window_steps`).
    pub hit: bool,
    /// Number of target visits between entry and the end of the hit window.
    pub occupation: u64,
}

/// Result of decomposing a trajectory into excursions.
#[derive(Clone, Debug, Default)]
pub struct ExcursionTrace {
    /// Completed excursions in chronological order.
    pub excursions: Vec<Excursion>,
    /// Entry times of all excursions, including one still open at the end
    /// of the trajectory.
    pub entry_times: Vec<u64>,
    /// Number of sphere entries observed (`entry_times.len()`).
    pub entries: usize,
    /// Number of steps consumed (trajectory length minus one).
    pub steps: u64,
}

/// Incremental excursion state machine; feed it `(time, vertex)`
/// observations in order.
#[derive(Clone, Debug)]
struct Tracker<'a> {
    geometry: &'a TargetGeometry,
    gap_steps: u64,
    window_steps: u64,
    phase: Phase,
    open: Option<OpenExcursion>,
    trace: ExcursionTrace,
}

#[derive(Clone, Copy, Debug)]
enum Phase {
    /// Waiting for a sphere entry at time `earliest` or later.
    Seeking { earliest: u64 },
    /// Between entry and ball exit.
    Inside,
    /// After an exit: the hit window may still be open, and no new entry
    /// counts until `gap_end`.
    Draining { window_end: u64, gap_end: u64 },
}

#[derive(Clone, Copy, Debug)]
struct OpenExcursion {
    entry_time: u64,
    entry_vertex: u32,
    hit_by_exit: bool,
    occupation: u64,
}

impl<'a> Tracker<'a> {
    fn new(geometry: &'a TargetGeometry, gap_steps: u64, window_steps: u64) -> Self {
        Self {
            geometry,
            gap_steps,
            window_steps,
            phase: Phase::Seeking { earliest: 0 },
            open: None,
            trace: ExcursionTrace::default(),
        }
    }

    fn from_resolved(geometry: &'a TargetGeometry, resolved: &ResolvedParams) -> Self {
        Self::new(geometry, resolved.gap_steps, resolved.window_steps)
    }

    /// Observe the walk at vertex `v` at step `t`.  Times must be fed in
    /// strictly increasing order starting from the initial position.
    fn observe(&mut self, t: u64, v: u32) {
        self.trace.steps = t;
        let d = self.geometry.dist(v);
        loop {
            match self.phase {
                Phase::Seeking { earliest } => {
                    if t >= earliest && d == self.geometry.r {
                        self.trace.entry_times.push(t);
                        self.trace.entries += 1;
                        self.open = Some(OpenExcursion {
                            entry_time: t,
                            entry_vertex: v,
                            hit_by_exit: false,
                            occupation: 0,
                        });
                        self.phase = Phase::Inside;
                    }
                    return;
                }
                Phase::Inside => {
                    if d > self.geometry.big_r {
                        let open = self.open.take().expect("inside phase has an open excursion");
                        self.trace.excursions.push(Excursion {
                            index: self.trace.excursions.len(),
                            entry_time: open.entry_time,
                            exit_time: t,
                            entry_vertex: open.entry_vertex,
                            exit_vertex: v,
                            hit_by_exit: open.hit_by_exit,
                            hit: open.hit_by_exit,
                            occupation: open.occupation,
                        });
                        self.phase = Phase::Draining {
                            window_end: t + self.window_steps,
                            gap_end: t + self.gap_steps,
                        };
                    } else if d == 0 {
                        let open = self.open.as_mut().expect("inside phase has an open excursion");
                        open.hit_by_exit = true;
                        open.occupation += 1;
                    }
                    return;
                }
                Phase::Draining { window_end, gap_end } => {
                    if t <= window_end && d == 0 {
                        let last = self
                            .trace
                            .excursions
                            .last_mut()
                            .expect("draining phase follows a completed excursion");
                        last.hit = true;
                        last.occupation += 1;
                    }
                    if t >= gap_end {
                        // The gap has elapsed; this same observation may
                        // already be a fresh sphere entry, so re-dispatch.
                        self.phase = Phase::Seeking { earliest: gap_end };
                        continue;
                    }
                    return;
                }
            }
        }
    }

    fn finish(self) -> ExcursionTrace {
        self.trace
    }
}

/// Decompose an explicit trajectory (`trajectory[t]` = position at step
/// `t`) into excursions around `targets`.
pub fn decompose(
    g: &GraphTopology,
    targets: &[u32],
    params: &ExcursionParams,
    trajectory: &[u32],
) -> Result<ExcursionTrace, ExcursionError> {
    let resolved = params.resolve(g)?;
    let geometry = TargetGeometry::new(g, targets, resolved.r, resolved.big_r)?;
    let n = g.vertex_count();
    for &v in trajectory {
        if v as usize >= n {
            return Err(ExcursionError::BadTrajectory { vertex: v, vertices: n });
        }
    }
    let mut tracker = Tracker::from_resolved(&geometry, &resolved);
    for (t, &v) in trajectory.iter().enumerate() {
        tracker.observe(t as u64, v);
    }
    Ok(tracker.finish())
}

/// Safety horizon for open-ended excursion simulations.
fn safety_horizon(g: &GraphTopology, resolved: &ResolvedParams) -> u64 {
    walker::default_cover_horizon(g) + resolved.gap_steps + resolved.window_steps
}

/// Estimate the probability that a single excursion around `x` hits `x`,
/// starting the walk from stationarity and scoring the first completed
/// excursion (hit window included).
pub fn estimate_success_prob(
    g: &GraphTopology,
    x: u32,
    params: &ExcursionParams,
    replicas: u64,
    seed: u64,
) -> Result<Estimate, ExcursionError> {
    assert!(replicas > 0, "need at least one replica");
    let resolved = params.resolve(g)?;
    let geometry = TargetGeometry::new(g, &[x], resolved.r, resolved.big_r)?;
    let horizon = safety_horizon(g, &resolved);
    let lane = derive_seed(seed, SALT_SUCCESS);
    let outcomes: Result<Vec<f64>, ExcursionError> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(lane, replica);
            let mut tracker = Tracker::from_resolved(&geometry, &resolved);
            let mut v = walker::sample_stationary(g, &mut rng);
            tracker.observe(0, v);
            for t in 1..=horizon {
                v = walker::step(g, v, &mut rng);
                tracker.observe(t, v);
                if let Some(first) = tracker.trace.excursions.first() {
                    if first.hit {
                        return Ok(1.0);
                    }
                    if t > first.exit_time + resolved.window_steps {
                        return Ok(0.0);
                    }
                }
            }
            Err(ExcursionError::HorizonExceeded { steps: horizon })
        })
        .collect();
    Ok(Estimate::from_values(&outcomes?))
}

/// Estimate the mean excursion cycle length around `targets`: the expected
/// time between the first and second sphere entries with no relaxation gap,
/// starting from stationarity.
pub fn mean_excursion_length(
    g: &GraphTopology,
    targets: &[u32],
    params: &ExcursionParams,
    replicas: u64,
    seed: u64,
) -> Result<Estimate, ExcursionError> {
    assert!(replicas > 0, "need at least one replica");
    let resolved = params.resolve(g)?;
    let geometry = TargetGeometry::new(g, targets, resolved.r, resolved.big_r)?;
    let horizon = safety_horizon(g, &resolved);
    let lane = derive_seed(seed, SALT_CYCLE);
    let samples: Result<Vec<f64>, ExcursionError> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(lane, replica);
            // Gap and window are irrelevant for cycle timing; a zero-gap
            // tracker records raw consecutive sphere entries.
            let mut tracker = Tracker::new(&geometry, 0, 0);
            let mut v = walker::sample_stationary(g, &mut rng);
            tracker.observe(0, v);
            for t in 1..=horizon {
                v = walker::step(g, v, &mut rng);
                tracker.observe(t, v);
                if tracker.trace.entries >= 2 {
                    let times = &tracker.trace.entry_times;
                    return Ok((times[1] - times[0]) as f64);
                }
            }
            Err(ExcursionError::HorizonExceeded { steps: horizon })
        })
        .collect();
    Ok(Estimate::from_values(&samples?))
}

/// Occupation-versus-stationarity diagnostics from one long run.
#[derive(Clone, Debug)]
pub struct OccupationReport {
    /// Mean target visits per completed excursion (sphere entry to ball
    /// exit).
    pub occupation_per_excursion: Estimate,
    /// Mean gap between consecutive raw sphere entries.
    pub cycle_length: Estimate,
    /// `occupation_per_excursion.mean / cycle_length.mean`: the long-run
    /// fraction of time the walk spends on the targets, excursion-estimated.
    pub occupation_rate: f64,
    /// Stationary mass of the targets.
    pub stationary: f64,
    /// `occupation_rate / stationary`; close to `1.0` when the excursion
    /// decomposition is consistent with the stationary law.
    pub ratio: f64,
    /// Number of completed excursions.
    pub excursions: u64,
    /// Number of completed raw cycles.
    pub cycles: u64,
}

/// Compare the excursion-based occupation rate of `x` with its stationary
/// probability over a single `steps`-long run.
///
/// Uses raw (zero-gap, zero-window) excursions: every visit to a target
/// happens strictly between a sphere entry and the following ball exit,
/// and consecutive entries tile the run, so the renewal identity
/// `E[visits per excursion] / E[cycle length] = π(targets)` holds exactly
/// in the long-run limit.  The relaxation gap and hit window play no role
/// here; only the radii in `params` are used.
pub fn occupation_ratio(
    g: &GraphTopology,
    x: u32,
    params: &ExcursionParams,
    steps: u64,
    seed: u64,
) -> Result<OccupationReport, ExcursionError> {
    params.validate()?;
    let geometry = TargetGeometry::new(g, &[x], params.r, params.big_r)?;
    let mut rng = replica_rng(derive_seed(seed, SALT_OCCUPATION), 0);
    let mut raw = Tracker::new(&geometry, 0, 0);
    let mut v = walker::sample_stationary(g, &mut rng);
    raw.observe(0, v);
    for t in 1..=steps {
        v = walker::step(g, v, &mut rng);
        raw.observe(t, v);
    }
    let raw = raw.finish();
    let occupations: Vec<f64> = raw.excursions.iter().map(|e| e.occupation as f64).collect();
    let cycles: Vec<f64> = raw
        .entry_times
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64)
        .collect();
    if occupations.len() < 2 || cycles.len() < 2 {
        return Err(ExcursionError::HorizonExceeded { steps });
    }
    let occupation_per_excursion = Estimate::from_values(&occupations);
    let cycle_length = Estimate::from_values(&cycles);
    let occupation_rate = occupation_per_excursion.mean / cycle_length.mean;
    let stationary = g.stationary_probability(x);
    Ok(OccupationReport {
        ratio: occupation_rate / stationary,
        occupation_rate,
        stationary,
        excursions: occupations.len() as u64,
        cycles: cycles.len() as u64,
        occupation_per_excursion,
        cycle_length,
    })
}

/// Excursion-based prediction of the stationary hitting time of a vertex.
#[derive(Clone, Debug)]
pub struct HittingPrediction {
    /// Predicted hitting time `cycle_length / success_prob`.
    pub predicted: f64,
    /// Delta-method standard error of the prediction.
    pub stderr: f64,
    /// Excursion success probability estimate.
    pub success_prob: Estimate,
    /// Mean excursion cycle length estimate.
    pub cycle_length: Estimate,
    /// Exact stationary hitting time from the linear-algebra oracle, when
    /// the graph is small enough.
    pub exact: Option<f64>,
    /// `predicted / exact`, when the exact value is available.
    pub ratio: Option<f64>,
}

/// Predict the stationary hitting time of `x` as the ratio of the mean
/// excursion cycle length to the excursion success probability, and compare
/// with the exact oracle when available.
pub fn hitting_prediction(
    g: &GraphTopology,
    x: u32,
    params: &ExcursionParams,
    replicas: u64,
    seed: u64,
) -> Result<HittingPrediction, ExcursionError> {
    let resolved = params.resolve(g)?;
    let pinned = params.with_mixing_time(resolved.t_mix_uniform);
    let success_prob = estimate_success_prob(g, x, &pinned, replicas, seed)?;
    let cycle_length = mean_excursion_length(g, &[x], &pinned, replicas, seed)?;
    let p = success_prob.mean;
    let t = cycle_length.mean;
    assert!(p > 0.0, "no excursion hit the target; increase replicas");
    let predicted = t / p;
    // First-order error propagation for the ratio T / p.
    let stderr = ((cycle_length.stderr / p).powi(2)
        + (t * success_prob.stderr / (p * p)).powi(2))
    .sqrt();
    let exact = match oracle::stationary_hitting_time(g, x) {
        Ok(v) => Some(v),
        Err(OracleError::CapExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(HittingPrediction {
        predicted,
        stderr,
        ratio: exact.map(|e| predicted / e),
        exact,
        success_prob,
        cycle_length,
    })
}

/// Count sphere entries (no relaxation gap) during the first `steps` steps
/// of a stationary-start walk around `targets`.
///
/// This is the raw excursion count whose renewal rate is the reciprocal of
/// the mean cycle length, so `count * cycle_length / steps` concentrates
/// near `1` for long runs.
pub fn excursion_count(
    g: &GraphTopology,
    targets: &[u32],
    params: &ExcursionParams,
    steps: u64,
    seed: u64,
) -> Result<u64, ExcursionError> {
    let resolved = params.resolve(g)?;
    let geometry = TargetGeometry::new(g, targets, resolved.r, resolved.big_r)?;
    let mut rng = replica_rng(derive_seed(seed, SALT_COUNT), 0);
    let mut tracker = Tracker::new(&geometry, 0, 0);
    let mut v = walker::sample_stationary(g, &mut rng);
    tracker.observe(0, v);
    for t in 1..=steps {
        v = walker::step(g, v, &mut rng);
        tracker.observe(t, v);
    }
    Ok(tracker.trace.entries as u64)
}

/// Per-vertex excursion rate and its partition class.
#[derive(Clone, Debug)]
pub struct VertexRate {
    pub vertex: u32,
    /// Excursion success probability estimate.
    pub success_prob: Estimate,
    /// Mean excursion cycle length estimate.
    pub cycle_length: Estimate,
    /// Excursion hit rate `success_prob / cycle_length`.
    pub rate: f64,
    /// Delta-method standard error of the rate.
    pub rate_stderr: f64,
    /// Partition class index (1-based; higher classes hit faster).
    pub class: u32,
    /// Whether `rate ± 3·stderr` straddles a class boundary.
    pub boundary_flagged: bool,
}

/// Partition of the vertex set by excursion hit rate, with per-class cover
/// time contributions.
#[derive(Clone, Debug)]
pub struct PartitionReport {
    /// Bucket width multiplier.
    pub epsilon: f64,
    /// Measured vertices grouped by class.
    pub members: BTreeMap<u32, Vec<u32>>,
    /// Estimated total class sizes (sums to the vertex count).
    pub class_sizes: BTreeMap<u32, usize>,
    /// Per-class size exponent `ln|class| / ln|V|`.
    pub dimension: BTreeMap<u32, f64>,
    /// Per-class cover-time contribution.
    pub contribution: BTreeMap<u32, f64>,
    /// Overall cover-time bound: the largest class contribution.
    pub cover_bound: f64,
    /// Whether a vertex fell in the degenerate zero-rate class, making the
    /// bound infinite.
    pub degenerate_zero_class: bool,
    /// Whether vertices were sampled rather than enumerated.
    pub sampled: bool,
    /// Per-vertex measurements.
    pub rates: Vec<VertexRate>,
}

/// Class index for rate `v`: buckets of width `min_degree * epsilon / |V|`.
/// Class `0` would mean a vanishing rate; the smallest real class is `1`.
fn rate_class(rate: f64, n: f64, min_degree: f64, epsilon: f64) -> u32 {
    let scaled = rate * n / (min_degree * epsilon);
    scaled.ceil().max(0.0) as u32
}

/// Partition vertices by excursion hit rate and bound the cover time by
/// the slowest class: a class of estimated size `s` with index `k`
/// contributes `|V| * ln|V| * (ln s / ln|V|) / (min_degree * k * epsilon)`.
///
/// Vertex-transitive graphs are measured at a single vertex; graphs larger
/// than [`PARTITION_SAMPLE_CAP`] are sampled at [`PARTITION_SAMPLE_SIZE`]
/// vertices and class sizes extrapolated.
pub fn cover_time_partition(
    g: &GraphTopology,
    epsilon: f64,
    params: &ExcursionParams,
    replicas: u64,
    seed: u64,
) -> Result<PartitionReport, ExcursionError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let n = g.vertex_count();
    let nf = n as f64;
    let min_degree = g.degree_stats().min as f64;
    let resolved = params.resolve(g)?;
    let pinned = params.with_mixing_time(resolved.t_mix_uniform);
    let lane = derive_seed(seed, SALT_PARTITION);

    let transitive = g.is_vertex_transitive();
    let sampled = !transitive && n > PARTITION_SAMPLE_CAP;
    let measured: Vec<u32> = if transitive {
        vec![0]
    } else if sampled {
        let mut rng = replica_rng(lane, u64::MAX);
        let mut picks: Vec<u32> = rand::seq::index::sample(&mut rng, n, PARTITION_SAMPLE_SIZE)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        picks.sort_unstable();
        picks
    } else {
        (0..n as u32).collect()
    };

    let mut rates = Vec::with_capacity(measured.len());
    for &x in &measured {
        let vertex_seed = derive_seed(lane, x as u64);
        let success_prob = estimate_success_prob(g, x, &pinned, replicas, vertex_seed)?;
        let cycle_length = mean_excursion_length(g, &[x], &pinned, replicas, vertex_seed)?;
        let p = success_prob.mean;
        let t = cycle_length.mean;
        let rate = p / t;
        let rate_stderr = if p > 0.0 {
            rate * ((success_prob.stderr / p).powi(2) + (cycle_length.stderr / t).powi(2)).sqrt()
        } else {
            success_prob.stderr / t
        };
        let class = rate_class(rate, nf, min_degree, epsilon);
        let lo_class = rate_class((rate - 3.0 * rate_stderr).max(0.0), nf, min_degree, epsilon);
        let hi_class = rate_class(rate + 3.0 * rate_stderr, nf, min_degree, epsilon);
        rates.push(VertexRate {
            vertex: x,
            success_prob,
            cycle_length,
            rate,
            rate_stderr,
            class,
            boundary_flagged: lo_class != hi_class,
        });
    }

    let mut members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for r in &rates {
        members.entry(r.class).or_default().push(r.vertex);
    }
    let class_sizes = extrapolate_class_sizes(&members, n, measured.len());

    let mut dimension = BTreeMap::new();
    let mut contribution = BTreeMap::new();
    let mut cover_bound: f64 = 0.0;
    let mut degenerate_zero_class = false;
    let log_n = nf.ln();
    for (&k, &size) in &class_sizes {
        let d_k = if n > 1 {
            (size.max(1) as f64).ln() / log_n
        } else {
            0.0
        };
        dimension.insert(k, d_k);
        let c_k = if k == 0 {
            degenerate_zero_class = true;
            f64::INFINITY
        } else {
            nf * log_n * d_k / (min_degree * k as f64 * epsilon)
        };
        contribution.insert(k, c_k);
        cover_bound = cover_bound.max(c_k);
    }

    Ok(PartitionReport {
        epsilon,
        members,
        class_sizes,
        dimension,
        contribution,
        cover_bound,
        degenerate_zero_class,
        sampled,
        rates,
    })
}

/// Scale per-class measured counts up to total class sizes summing exactly
/// to `n`, using largest-remainder rounding.
fn extrapolate_class_sizes(
    members: &BTreeMap<u32, Vec<u32>>,
    n: usize,
    measured: usize,
) -> BTreeMap<u32, usize> {
    let mut sizes = BTreeMap::new();
    if measured == 0 {
        return sizes;
    }
    let scale = n as f64 / measured as f64;
    let mut remainders: Vec<(f64, u32)> = Vec::new();
    let mut assigned = 0usize;
    for (&k, verts) in members {
        let exact = verts.len() as f64 * scale;
        let floor = exact.floor() as usize;
        sizes.insert(k, floor);
        assigned += floor;
        remainders.push((exact - floor as f64, k));
    }
    // Distribute the rounding deficit to the classes with the largest
    // fractional parts (ties broken by class index for determinism).
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut deficit = n - assigned;
    for (_, k) in remainders {
        if deficit == 0 {
            break;
        }
        *sizes.get_mut(&k).unwrap() += 1;
        deficit -= 1;
    }
    sizes
}

/// Conditional hit probabilities for the excursions of a trace.
#[derive(Clone, Debug)]
pub struct HitProfile {
    /// `values[j]` is the probability that excursion `j` hits the target,
    /// conditioned on its observed entry and exit vertices.
    pub values: Vec<f64>,
    /// Running product of miss probabilities: `running_miss_product[j]`
    /// is the probability that excursions `0..=j` all miss, conditioned on
    /// their entry/exit pairs.
    pub running_miss_product: Vec<f64>,
    /// Largest conditional hit probability observed.
    pub max_value: f64,
    /// Entry/exit pairs whose conditional hit probability is within
    /// [`SATURATION_TOLERANCE`] of one (the geometry forces a hit).
    pub saturated_pairs: Vec<(u32, u32)>,
    /// Whether the values come from exact absorbing-chain solves (`true`)
    /// or from empirical per-pair frequencies (`false`).
    pub exact: bool,
}

/// Compute, for each excursion in `trace`, the probability that an
/// excursion entering at its entry vertex and exiting at its exit vertex
/// visits `x` in between.
///
/// For each pair `(a, b)` the exact value is `h(a) * W(x, b) / W(a, b)`
/// where `h` solves the hit-`x`-before-leaving-the-ball problem and `W` is
/// the exit-vertex distribution, both restricted to the ball of radius
/// `big_r`.  Falls back to empirical per-pair frequencies when the ball is
/// larger than the dense-solver cap.
pub fn conditional_hit_probabilities(
    g: &GraphTopology,
    x: u32,
    params: &ExcursionParams,
    trace: &ExcursionTrace,
) -> Result<HitProfile, ExcursionError> {
    let resolved = params.resolve(g)?;
    let geometry = TargetGeometry::new(g, &[x], resolved.r, resolved.big_r)?;
    let exact = geometry.ball_size <= DENSE_CAP;
    let pair_values: BTreeMap<(u32, u32), f64> = if exact {
        exact_pair_probabilities(g, x, &geometry, trace)?
    } else {
        empirical_pair_probabilities(trace)
    };
    let mut values = Vec::with_capacity(trace.excursions.len());
    let mut running_miss_product = Vec::with_capacity(trace.excursions.len());
    let mut product = 1.0f64;
    let mut max_value = 0.0f64;
    let mut saturated_pairs = Vec::new();
    for e in &trace.excursions {
        let q = pair_values[&(e.entry_vertex, e.exit_vertex)];
        if q > max_value {
            max_value = q;
        }
        if q >= 1.0 - SATURATION_TOLERANCE
            && !saturated_pairs.contains(&(e.entry_vertex, e.exit_vertex))
        {
            saturated_pairs.push((e.entry_vertex, e.exit_vertex));
        }
        product *= 1.0 - q;
        values.push(q);
        running_miss_product.push(product);
    }
    Ok(HitProfile {
        values,
        running_miss_product,
        max_value,
        saturated_pairs,
        exact,
    })
}

/// Exact conditional hit probabilities via two absorbing-chain solves on
/// the ball around `x`.
fn exact_pair_probabilities(
    g: &GraphTopology,
    x: u32,
    geometry: &TargetGeometry,
    trace: &ExcursionTrace,
) -> Result<BTreeMap<(u32, u32), f64>, ExcursionError> {
    let n = g.vertex_count();
    // Interior states: the ball of radius big_r.  Exits: outside vertices
    // adjacent to the ball.
    let mut interior_index = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n as u32 {
        if geometry.dist(v) <= geometry.big_r {
            interior_index[v as usize] = interior.len();
            interior.push(v);
        }
    }
    let mut exit_index: BTreeMap<u32, usize> = BTreeMap::new();
    for &v in &interior {
        for &w in g.neighbors(v) {
            if geometry.dist(w) > geometry.big_r {
                let next = exit_index.len();
                exit_index.entry(w).or_insert(next);
            }
        }
    }
    let m = interior.len();
    let lazy_self = 0.5f64;

    // System A: unknowns on the ball minus {x}; h(v) = P_v[hit x before
    // leaving the ball].  Treat x as absorbing with value 1.
    let xi = interior_index[x as usize];
    let reduced: Vec<u32> = interior.iter().copied().filter(|&v| v != x).collect();
    let mut reduced_index = vec![usize::MAX; n];
    for (i, &v) in reduced.iter().enumerate() {
        reduced_index[v as usize] = i;
    }
    let mr = reduced.len();
    let mut a = DMatrix::<f64>::identity(mr, mr);
    let mut rhs = DVector::<f64>::zeros(mr);
    for (i, &v) in reduced.iter().enumerate() {
        a[(i, i)] -= lazy_self;
        let step = 0.5 / g.degree(v) as f64;
        for &w in g.neighbors(v) {
            if w == x {
                rhs[i] += step;
            } else if geometry.dist(w) <= geometry.big_r {
                a[(i, reduced_index[w as usize])] -= step;
            }
        }
    }
    let lu_a = a.lu();
    let h_reduced = lu_a
        .solve(&rhs)
        .ok_or_else(|| ExcursionError::GeometryDegenerate {
            reason: "singular hit-probability system on the excursion ball".into(),
        })?;
    let h = |v: u32| -> f64 {
        if v == x {
            1.0
        } else {
            h_reduced[reduced_index[v as usize]]
        }
    };

    // System B: W(v, e) = P_v[first exit vertex is e], unknowns on the
    // whole ball.
    let ne = exit_index.len();
    let mut b = DMatrix::<f64>::identity(m, m);
    let mut rhs_w = DMatrix::<f64>::zeros(m, ne);
    for (i, &v) in interior.iter().enumerate() {
        b[(i, i)] -= lazy_self;
        let step = 0.5 / g.degree(v) as f64;
        for &w in g.neighbors(v) {
            if geometry.dist(w) <= geometry.big_r {
                b[(i, interior_index[w as usize])] -= step;
            } else {
                rhs_w[(i, exit_index[&w])] += step;
            }
        }
    }
    let lu_b = b.lu();
    let w_mat = lu_b
        .solve(&rhs_w)
        .ok_or_else(|| ExcursionError::GeometryDegenerate {
            reason: "singular exit-distribution system on the excursion ball".into(),
        })?;

    let mut out = BTreeMap::new();
    for e in &trace.excursions {
        let key = (e.entry_vertex, e.exit_vertex);
        if out.contains_key(&key) {
            continue;
        }
        let (a_v, b_v) = key;
        let ai = interior_index[a_v as usize];
        let bi = *exit_index
            .get(&b_v)
            .expect("observed exit vertex borders the ball");
        let w_ab = w_mat[(ai, bi)];
        let w_xb = w_mat[(xi, bi)];
        assert!(
            w_ab > 0.0,
            "observed exit pair ({a_v}, {b_v}) has zero probability"
        );
        let q = (h(a_v) * w_xb / w_ab).clamp(0.0, 1.0);
        out.insert(key, q);
    }
    Ok(out)
}

/// Empirical conditional hit probabilities: per entry/exit pair, the
/// fraction of excursions with that pair that hit by exit.
fn empirical_pair_probabilities(trace: &ExcursionTrace) -> BTreeMap<(u32, u32), f64> {
    let mut hits: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
    for e in &trace.excursions {
        let entry = hits.entry((e.entry_vertex, e.exit_vertex)).or_insert((0, 0));
        entry.1 += 1;
        if e.hit_by_exit {
            entry.0 += 1;
        }
    }
    hits.into_iter()
        .map(|(k, (h, t))| (k, h as f64 / t as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::FamilySpec;

    fn cycle(n: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Cycle { n }).unwrap()
    }

    fn complete(n: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Complete { n }).unwrap()
    }

    fn torus(dim: usize, side: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Torus { dim, side }).unwrap()
    }

    /// Star with each edge subdivided into a path of length 3.
    fn spider(legs: u32) -> GraphTopology {
        let mut edges = Vec::new();
        for leg in 0..legs {
            let base = 1 + 3 * leg;
            edges.push((0, base));
            edges.push((base, base + 1));
            edges.push((base + 1, base + 2));
        }
        GraphTopology::from_edges((1 + 3 * legs) as usize, &edges).unwrap()
    }

    fn params(r: u32, big_r: u32, gap: f64, window: f64, t_u: u64) -> ExcursionParams {
        ExcursionParams {
            r,
            big_r,
            gap,
            window,
            t_mix_uniform: Some(t_u),
        }
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        let g = cycle(12);
        let bad_radii = params(1, 1, 2.0, 1.0, 2);
        assert!(matches!(
            bad_radii.resolve(&g),
            Err(ExcursionError::InvalidRadii { r: 1, big_r: 1 })
        ));
        let zero_r = params(0, 2, 2.0, 1.0, 2);
        assert!(matches!(
            zero_r.resolve(&g),
            Err(ExcursionError::InvalidRadii { .. })
        ));
        let window_exceeds_gap = params(1, 2, 1.0, 2.0, 2);
        assert!(matches!(
            window_exceeds_gap.resolve(&g),
            Err(ExcursionError::InvalidMultipliers { .. })
        ));
        let ok = params(1, 2, 2.0, 1.0, 3);
        let resolved = ok.resolve(&g).unwrap();
        assert_eq!(resolved.gap_steps, 6);
        assert_eq!(resolved.window_steps, 3);
        assert_eq!(resolved.t_mix_uniform, 3);
    }

    #[test]
    fn complete_graph_geometry_is_degenerate() {
        let g = complete(5);
        // The radius-2 ball around any vertex of K_5 is the whole graph.
        let err = TargetGeometry::new(&g, &[0], 1, 2).unwrap_err();
        assert!(matches!(err, ExcursionError::GeometryDegenerate { .. }));
    }

    #[test]
    fn close_targets_are_rejected() {
        let g = cycle(12);
        let err = TargetGeometry::new(&g, &[0, 3], 1, 2).unwrap_err();
        match err {
            ExcursionError::TargetsTooClose {
                distance, required, ..
            } => {
                assert_eq!(distance, 3);
                assert_eq!(required, 4);
            }
            other => panic!("unexpected error: {other:?}"),
        }
        // Opposite vertices of a 12-cycle are distance 6 apart: admissible.
        assert!(TargetGeometry::new(&g, &[0, 6], 1, 2).is_ok());
    }

    #[test]
    fn hand_traced_trajectory_decomposes_into_two_excursions() {
        let g = cycle(12);
        let p = params(1, 2, 0.0, 0.0, 1);
        let path = [4, 3, 2, 2, 1, 0, 1, 2, 3, 3, 2, 1, 1, 2, 3, 4, 4, 3, 2, 1];
        let trace = decompose(&g, &[0], &p, &path).unwrap();
        assert_eq!(trace.excursions.len(), 2);
        assert_eq!(trace.entries, 3);
        assert_eq!(trace.entry_times, vec![4, 11, 19]);
        assert_eq!(trace.steps, 19);

        let first = trace.excursions[0];
        assert_eq!(first.entry_time, 4);
        assert_eq!(first.exit_time, 8);
        assert_eq!(first.entry_vertex, 1);
        assert_eq!(first.exit_vertex, 3);
        assert!(first.hit_by_exit);
        assert!(first.hit);
        assert_eq!(first.occupation, 1);

        let second = trace.excursions[1];
        assert_eq!(second.entry_time, 11);
        assert_eq!(second.exit_time, 14);
        assert!(!second.hit_by_exit);
        assert!(!second.hit);
        assert_eq!(second.occupation, 0);
    }

    #[test]
    fn hit_window_boundary_is_inclusive() {
        let g = cycle(12);
        // Entry at t=1, exit at t=3 (distance 3 > R=2), target visit at t=6.
        let path = [2, 1, 2, 3, 2, 1, 0, 1, 2, 3];
        // Window of 2 steps ends at t=5: the visit at t=6 is too late.
        // (The gap ends at t=7 and a second excursion runs from 7 to 9.)
        let short = params(1, 2, 2.0, 1.0, 2);
        let trace = decompose(&g, &[0], &short, &path).unwrap();
        assert_eq!(trace.excursions.len(), 2);
        assert_eq!(trace.excursions[0].exit_time, 3);
        assert!(!trace.excursions[0].hit);
        assert_eq!(trace.excursions[0].occupation, 0);
        assert_eq!(trace.excursions[1].entry_time, 7);
        // Window of 3 steps ends at t=6: now the visit counts, though the
        // excursion still missed by exit time.
        let long = params(1, 2, 2.0, 1.5, 2);
        let trace = decompose(&g, &[0], &long, &path).unwrap();
        assert_eq!(trace.excursions.len(), 2);
        assert!(trace.excursions[0].hit);
        assert!(!trace.excursions[0].hit_by_exit);
        assert_eq!(trace.excursions[0].occupation, 1);
    }

    #[test]
    fn relaxation_gap_delays_reentry() {
        let g = cycle(12);
        // Exit at t=3; with a 4-step gap no entry counts before t=7.
        let path = [2, 1, 2, 3, 2, 1, 2, 1, 2, 3, 4];
        let gapped = params(1, 2, 2.0, 0.0, 2);
        let trace = decompose(&g, &[0], &gapped, &path).unwrap();
        assert_eq!(trace.entry_times, vec![1, 7]);
        assert_eq!(trace.excursions.len(), 2);
        assert_eq!(trace.excursions[1].entry_time, 7);
        assert_eq!(trace.excursions[1].exit_time, 9);
        // Without a gap the sphere visit at t=5 starts an excursion; the
        // later sphere visit at t=7 happens inside that open excursion
        // (which only exits at t=9), so it is not a fresh entry.
        let raw = params(1, 2, 0.0, 0.0, 2);
        let trace = decompose(&g, &[0], &raw, &path).unwrap();
        assert_eq!(trace.entry_times, vec![1, 5]);
        assert_eq!(trace.excursions.len(), 2);
        assert_eq!(trace.excursions[1].entry_time, 5);
        assert_eq!(trace.excursions[1].exit_time, 9);
    }

    #[test]
    fn random_trajectories_satisfy_ordering_invariants() {
        use rand::RngExt;
        let g = torus(2, 5);
        let p = params(1, 2, 1.5, 0.5, 3);
        let resolved = p.resolve(&g).unwrap();
        for replica in 0..200u64 {
            let mut rng = replica_rng(0xFEED, replica);
            let mut v = rng.random_range(0..g.vertex_count() as u32);
            let mut path = vec![v];
            for _ in 0..300 {
                v = walker::step(&g, v, &mut rng);
                path.push(v);
            }
            let trace = decompose(&g, &[0], &p, &path).unwrap();
            let dist = g.distances_from(0);
            let mut prev_exit: Option<u64> = None;
            for e in &trace.excursions {
                assert!(e.entry_time < e.exit_time);
                assert_eq!(dist[e.entry_vertex as usize], 1);
                assert!(dist[e.exit_vertex as usize] > 2);
                assert_eq!(path[e.entry_time as usize], e.entry_vertex);
                assert_eq!(path[e.exit_time as usize], e.exit_vertex);
                if let Some(prev) = prev_exit {
                    assert!(e.entry_time >= prev + resolved.gap_steps);
                }
                if e.hit_by_exit {
                    assert!(e.hit);
                    assert!(e.occupation > 0);
                }
                prev_exit = Some(e.exit_time);
            }
            for w in trace.entry_times.windows(2) {
                assert!(w[0] < w[1]);
            }
            assert_eq!(trace.entries, trace.entry_times.len());
            assert!(trace.excursions.len() <= trace.entries);
        }
    }

    #[test]
    fn cycle_success_probability_and_length_are_sane() {
        let g = cycle(12);
        let p = params(1, 2, 1.0, 0.5, 4);
        let prob = estimate_success_prob(&g, 0, &p, 400, 7).unwrap();
        assert!(prob.mean > 0.0 && prob.mean < 1.0, "p = {}", prob.mean);
        let len = mean_excursion_length(&g, &[0], &p, 400, 7).unwrap();
        // Leaving the radius-2 ball and returning to the sphere takes at
        // least two steps from entry.
        assert!(len.mean >= 2.0, "T = {}", len.mean);
    }

    #[test]
    fn estimators_are_deterministic() {
        let g = torus(2, 5);
        let p = params(1, 2, 1.0, 0.5, 3);
        let a = estimate_success_prob(&g, 0, &p, 200, 42).unwrap();
        let b = estimate_success_prob(&g, 0, &p, 200, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let la = mean_excursion_length(&g, &[0], &p, 200, 42).unwrap();
        let lb = mean_excursion_length(&g, &[0], &p, 200, 42).unwrap();
        assert_eq!(la.mean.to_bits(), lb.mean.to_bits());
        let ca = excursion_count(&g, &[0], &p, 2_000, 42).unwrap();
        let cb = excursion_count(&g, &[0], &p, 2_000, 42).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn excursion_count_is_monotone_in_run_length() {
        let g = torus(2, 5);
        let p = params(1, 2, 1.0, 0.5, 3);
        let short = excursion_count(&g, &[0], &p, 500, 11).unwrap();
        let long = excursion_count(&g, &[0], &p, 2_000, 11).unwrap();
        assert!(short <= long, "short={short} long={long}");
        assert!(long > 0);
    }

    #[test]
    fn occupation_ratio_tracks_stationarity_on_a_small_torus() {
        let g = torus(2, 5);
        let p = params(1, 2, 1.0, 1.0, 3);
        let report = occupation_ratio(&g, 0, &p, 200_000, 3).unwrap();
        assert!(report.excursions > 100);
        assert!(report.cycles > 100);
        // The raw renewal identity is exact up to boundary effects, so a
        // run this long should land within a few percent.
        assert!(
            (report.ratio - 1.0).abs() < 0.10,
            "ratio = {} (rate {}, pi {})",
            report.ratio,
            report.occupation_rate,
            report.stationary
        );
    }

    #[test]
    fn hitting_prediction_matches_oracle_on_a_small_torus() {
        let g = torus(2, 5);
        // Let the oracle pick the true mixing time: the hit window must be
        // genuinely mixing-scale for the renewal identity to be accurate.
        let p = ExcursionParams {
            r: 1,
            big_r: 2,
            gap: 2.0,
            window: 1.0,
            t_mix_uniform: None,
        };
        let pred = hitting_prediction(&g, 0, &p, 3_000, 5).unwrap();
        let exact = pred.exact.expect("small graph has an exact value");
        assert!(exact > 0.0);
        let ratio = pred.ratio.unwrap();
        // On 25 vertices the radius-2 ball holds half the graph, so the
        // asymptotic identity is only expected to be loosely accurate.
        assert!(
            (0.7..=1.3).contains(&ratio),
            "predicted {} vs exact {} (ratio {ratio})",
            pred.predicted,
            exact
        );
        assert!(pred.stderr > 0.0);
    }

    #[test]
    fn spider_cross_leg_excursions_always_hit_the_centre() {
        let g = spider(3);
        let p = params(1, 2, 0.0, 0.0, 1);
        // Walk long enough to see excursions entering one leg and exiting
        // another; every such excursion must pass through the centre.
        let mut rng = replica_rng(0xABCD, 0);
        let mut v = 0u32;
        let mut path = vec![v];
        for _ in 0..40_000 {
            v = walker::step(&g, v, &mut rng);
            path.push(v);
        }
        let trace = decompose(&g, &[0], &p, &path).unwrap();
        let leg_of = |v: u32| (v - 1) / 3;
        let cross: Vec<&Excursion> = trace
            .excursions
            .iter()
            .filter(|e| leg_of(e.entry_vertex) != leg_of(e.exit_vertex))
            .collect();
        assert!(!cross.is_empty(), "no cross-leg excursions observed");
        for e in &cross {
            assert!(e.hit_by_exit, "cross-leg excursion missed the centre: {e:?}");
        }
        let profile = conditional_hit_probabilities(&g, 0, &p, &trace).unwrap();
        assert!(profile.exact);
        for (e, &q) in trace.excursions.iter().zip(&profile.values) {
            if leg_of(e.entry_vertex) != leg_of(e.exit_vertex) {
                assert!(q >= 1.0 - SATURATION_TOLERANCE, "cross-leg q = {q}");
            } else {
                assert!(q < 1.0 - SATURATION_TOLERANCE, "same-leg q = {q}");
            }
        }
        assert!(!profile.saturated_pairs.is_empty());
        assert_eq!(profile.values.len(), profile.running_miss_product.len());
        let mut prev = 1.0f64;
        for (&q, &m) in profile.values.iter().zip(&profile.running_miss_product) {
            let expected = prev * (1.0 - q);
            assert!((m - expected).abs() < 1e-12);
            prev = m;
        }
    }

    #[test]
    fn exact_hit_profile_matches_empirical_frequencies() {
        let g = torus(2, 5);
        let p = params(1, 2, 0.0, 0.0, 1);
        let mut rng = replica_rng(0x5EED, 1);
        let mut v = 12u32;
        let mut path = vec![v];
        for _ in 0..150_000 {
            v = walker::step(&g, v, &mut rng);
            path.push(v);
        }
        let trace = decompose(&g, &[0], &p, &path).unwrap();
        let profile = conditional_hit_probabilities(&g, 0, &p, &trace).unwrap();
        assert!(profile.exact);
        let empirical = empirical_pair_probabilities(&trace);
        // Aggregate over pairs seen often enough for a stable frequency.
        let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for e in &trace.excursions {
            *counts.entry((e.entry_vertex, e.exit_vertex)).or_default() += 1;
        }
        let mut checked = 0;
        for (pair, &freq) in &empirical {
            let n = counts[pair];
            if n < 200 {
                continue;
            }
            let e = trace
                .excursions
                .iter()
                .find(|e| (e.entry_vertex, e.exit_vertex) == *pair)
                .unwrap();
            let exact_q = profile.values[e.index];
            let sigma = (exact_q * (1.0 - exact_q) / n as f64).sqrt().max(1e-6);
            assert!(
                (freq - exact_q).abs() < 5.0 * sigma,
                "pair {pair:?}: empirical {freq} vs exact {exact_q} (n={n})"
            );
            checked += 1;
        }
        assert!(checked > 0, "no pair had enough samples");
    }

    #[test]
    fn partition_of_transitive_graph_has_one_class() {
        let g = cycle(16);
        let p = params(1, 2, 1.0, 0.5, 8);
        let report = cover_time_partition(&g, 0.05, &p, 2_000, 9).unwrap();
        assert_eq!(report.rates.len(), 1, "transitive graphs measure one vertex");
        assert_eq!(report.members.len(), 1);
        assert_eq!(report.class_sizes.values().sum::<usize>(), 16);
        assert!(!report.sampled);
        let (&class, _) = report.members.iter().next().unwrap();
        assert!(class > 0, "cycle rates are bounded away from zero");
        assert!(!report.degenerate_zero_class);
        assert!(report.cover_bound.is_finite());
        assert!((report.dimension[&class] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_covers_all_vertices_on_an_irregular_graph() {
        let g = spider(3);
        let p = params(1, 2, 1.0, 0.5, 6);
        let report = cover_time_partition(&g, 0.05, &p, 1_500, 13).unwrap();
        assert!(!report.sampled);
        let measured: usize = report.members.values().map(Vec::len).sum();
        assert_eq!(measured, g.vertex_count());
        assert_eq!(
            report.class_sizes.values().sum::<usize>(),
            g.vertex_count()
        );
        assert!(report.cover_bound > 0.0);
        for r in &report.rates {
            assert!(r.rate > 0.0);
            assert!(r.rate_stderr >= 0.0);
        }
    }

    #[test]
    fn largest_remainder_extrapolation_is_exact() {
        let mut members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        members.insert(1, vec![0, 1, 2]);
        members.insert(2, vec![3, 4]);
        members.insert(5, vec![5]);
        // 6 measured out of 100: scaled sizes 50, 33.33, 16.67.
        let sizes = extrapolate_class_sizes(&members, 100, 6);
        assert_eq!(sizes.values().sum::<usize>(), 100);
        assert_eq!(sizes[&1], 50);
        assert_eq!(sizes[&2], 33);
        assert_eq!(sizes[&5], 17);
    }
}
