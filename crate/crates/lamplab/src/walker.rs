//! Lazy random walks: stepping, range records, cover and hitting samples.
//!
//! The walk kernel is the lazy one throughout the crate: from `x` the walk
//! holds with probability 1/2 and otherwise moves to a uniformly random
//! neighbor, so each neighbor receives probability `1 / (2 deg(x))`. Its
//! stationary law weights a vertex by its degree.
//!
//! Monte Carlo estimators fan replicas out with [`crate::rng::replica_rng`]
//! and reduce them in replica order, so a `(seed, replica count)` pair pins
//! the result exactly, independent of thread scheduling.

use rand::{Rng, RngExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphs::GraphTopology;
use crate::rng::replica_rng;
use crate::stats::Estimate;

/// Where a walk starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartPoint {
    /// A fixed vertex.
    Vertex(u32),
    /// A fresh draw from the stationary law.
    Stationary,
}

/// Reproducible configuration for one walk replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Master seed of the experiment.
    pub seed: u64,
    /// Replica index; each index owns an independent generator stream.
    pub replica: u64,
    /// Start distribution.
    pub start: StartPoint,
}

impl WalkConfig {
    /// Stationary-start configuration for one replica.
    pub fn stationary(seed: u64, replica: u64) -> WalkConfig {
        WalkConfig { seed, replica, start: StartPoint::Stationary }
    }

    /// Fixed-start configuration for one replica.
    pub fn from_vertex(seed: u64, replica: u64, start: u32) -> WalkConfig {
        WalkConfig { seed, replica, start: StartPoint::Vertex(start) }
    }
}

/// Errors from walk simulation.
#[derive(Debug, thiserror::Error)]
pub enum WalkError {
    /// The walk ran `horizon` steps without completing its goal.
    #[error("walk exceeded its safety horizon of {horizon} steps")]
    HorizonExceeded { horizon: u64 },
}

/// One lazy-walk step from `x`.
pub fn step(g: &GraphTopology, x: u32, rng: &mut impl Rng) -> u32 {
    if rng.random_bool(0.5) {
        x
    } else {
        let neighbors = g.neighbors(x);
        neighbors[rng.random_range(0..neighbors.len())]
    }
}

/// Draw a vertex from the stationary law (probability proportional to degree).
pub fn sample_stationary(g: &GraphTopology, rng: &mut impl Rng) -> u32 {
    let stub = rng.random_range(0..g.total_degree());
    g.vertex_of_stub(stub)
}

fn draw_start(g: &GraphTopology, start: StartPoint, rng: &mut impl Rng) -> u32 {
    match start {
        StartPoint::Vertex(v) => {
            assert!((v as usize) < g.vertex_count(), "start vertex out of range");
            v
        }
        StartPoint::Stationary => sample_stationary(g, rng),
    }
}

/// What a range-recording walk saw.
#[derive(Clone, Debug)]
pub struct RangeRecord {
    /// Start vertex (counted as visited at time 0).
    pub start: u32,
    /// Position after the last step.
    pub end: u32,
    /// Number of steps taken.
    pub horizon: u64,
    /// `visited[v]`: whether `v` was seen by the horizon.
    pub visited: Vec<bool>,
    /// Number of distinct vertices seen.
    pub visited_count: usize,
    /// First time the range equaled the whole vertex set, if it did. The
    /// clock starts at 1: covering cannot happen before the first step.
    pub cover_time: Option<u64>,
    /// Per-vertex first-visit times (time 0 for the start vertex,
    /// `u64::MAX` for vertices never seen), when requested.
    pub first_visit: Option<Vec<u64>>,
}

impl RangeRecord {
    /// Vertices not visited by the horizon, sorted.
    pub fn unvisited(&self) -> Vec<u32> {
        self.visited
            .iter()
            .enumerate()
            .filter(|(_, &seen)| !seen)
            .map(|(v, _)| v as u32)
            .collect()
    }
}

/// Run a lazy walk for `horizon` steps recording its range.
///
/// With `track_first_visits` the record also carries every vertex's first
/// visit time, which lets one walk serve a whole grid of shorter horizons.
pub fn run_range(
    g: &GraphTopology,
    config: &WalkConfig,
    horizon: u64,
    track_first_visits: bool,
) -> RangeRecord {
    let mut rng = replica_rng(config.seed, config.replica);
    run_range_with(g, &mut rng, config.start, horizon, track_first_visits)
}

/// [`run_range`] driven by a caller-supplied generator, for estimators that
/// manage their own stream layout.
pub fn run_range_with(
    g: &GraphTopology,
    rng: &mut impl Rng,
    start: StartPoint,
    horizon: u64,
    track_first_visits: bool,
) -> RangeRecord {
    let start = draw_start(g, start, rng);
    let n = g.vertex_count();
    let mut visited = vec![false; n];
    let mut first_visit = track_first_visits.then(|| vec![u64::MAX; n]);
    visited[start as usize] = true;
    if let Some(fv) = &mut first_visit {
        fv[start as usize] = 0;
    }
    let mut visited_count = 1;
    let mut cover_time = None;
    let mut x = start;
    for t in 1..=horizon {
        x = step(g, x, rng);
        if !visited[x as usize] {
            visited[x as usize] = true;
            visited_count += 1;
            if let Some(fv) = &mut first_visit {
                fv[x as usize] = t;
            }
            if visited_count == n && cover_time.is_none() {
                cover_time = Some(t);
            }
        }
    }
    // A single-step self-check: the range can never shrink.
    debug_assert!(visited_count <= n);
    RangeRecord { start, end: x, horizon, visited, visited_count, cover_time, first_visit }
}

/// Default safety horizon for open-ended walks: `10^4 · |V| · ln |V|` steps.
pub fn default_cover_horizon(g: &GraphTopology) -> u64 {
    let n = g.vertex_count() as f64;
    (1e4 * n * n.max(2.0).ln()).ceil() as u64
}

/// Run until the walk has visited every vertex; errors if the safety horizon
/// (default [`default_cover_horizon`]) is exceeded.
pub fn run_until_cover(
    g: &GraphTopology,
    config: &WalkConfig,
    horizon: Option<u64>,
) -> Result<RangeRecord, WalkError> {
    let horizon = horizon.unwrap_or_else(|| default_cover_horizon(g));
    let mut rng = replica_rng(config.seed, config.replica);
    let start = draw_start(g, config.start, &mut rng);
    let n = g.vertex_count();
    let mut visited = vec![false; n];
    let mut first_visit = vec![u64::MAX; n];
    visited[start as usize] = true;
    first_visit[start as usize] = 0;
    let mut visited_count = 1;
    let mut x = start;
    for t in 1..=horizon {
        x = step(g, x, &mut rng);
        if !visited[x as usize] {
            visited[x as usize] = true;
            first_visit[x as usize] = t;
            visited_count += 1;
            if visited_count == n {
                return Ok(RangeRecord {
                    start,
                    end: x,
                    horizon: t,
                    visited,
                    visited_count,
                    cover_time: Some(t),
                    first_visit: Some(first_visit),
                });
            }
        }
    }
    Err(WalkError::HorizonExceeded { horizon })
}

/// First time `t >= 1` at which the walk started at `start` sits on `target`.
///
/// With `start == target` this is a return time.
pub fn hitting_sample(
    g: &GraphTopology,
    start: u32,
    target: u32,
    rng: &mut impl Rng,
) -> Result<u64, WalkError> {
    let horizon = default_cover_horizon(g);
    let mut x = start;
    for t in 1..=horizon {
        x = step(g, x, rng);
        if x == target {
            return Ok(t);
        }
    }
    Err(WalkError::HorizonExceeded { horizon })
}

/// Stationary-start Monte Carlo estimate of the expected cover time.
pub fn estimate_cover_time(
    g: &GraphTopology,
    replicas: usize,
    seed: u64,
) -> Result<Estimate, WalkError> {
    assert!(replicas >= 2, "a standard error needs at least 2 replicas");
    let samples: Result<Vec<f64>, WalkError> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let config = WalkConfig::stationary(seed, replica);
            run_until_cover(g, &config, None).map(|r| r.cover_time.unwrap() as f64)
        })
        .collect();
    Ok(Estimate::from_values(&samples?))
}

/// Mean first-visit times of `target` from `start`, over replicas.
pub fn estimate_hitting_time(
    g: &GraphTopology,
    start: StartPoint,
    target: u32,
    replicas: usize,
    seed: u64,
) -> Result<Estimate, WalkError> {
    assert!(replicas >= 2);
    let samples: Result<Vec<f64>, WalkError> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, replica);
            let from = draw_start(g, start, &mut rng);
            hitting_sample(g, from, target, &mut rng).map(|t| t as f64)
        })
        .collect();
    Ok(Estimate::from_values(&samples?))
}
