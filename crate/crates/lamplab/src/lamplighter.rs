//! Lamplighter chains over a base graph.
//!
//! A lamplighter chain tracks a walker's position on a base graph together
//! with one binary lamp per vertex.  Each step first picks the next
//! position from the lazy walk kernel; a move rerandomizes the lamps at
//! both endpoints, while a hold rerandomizes the single lamp under the
//! walker.  Started from all-dark lamps, the lamp configuration at time `t`
//! is exactly a fair-coin marking of the walk's range, which ties lamp
//! mixing to cover-time structure: lamps over unvisited vertices are
//! certainly dark, and the chain cannot look stationary until the walk has
//! covered most of the graph.
//!
//! Note the distinction between the lamplighter *chain* and the lazy walk
//! on the wreath product *graph* (`FamilySpec::Wreath`): the wreath graph's
//! lazy walk holds the entire state (lamps included) with probability 1/2,
//! whereas the chain rerandomizes the local lamp on a hold.  The two
//! processes share a state space but not a kernel.
//!
//! This module provides the chain sampler, exact small-graph distribution
//! evolution for total-variation curves, and a cutoff probe that brackets
//! the time at which lamp configurations become indistinguishable from
//! uniform.

use rand::{Rng, RngExt};
use rayon::prelude::*;

use crate::graphs::GraphTopology;
use crate::latepoints::{self, DistinguisherConfig};
use crate::oracle::{self, OracleError};
use crate::rng::{derive_seed, replica_rng};
use crate::stats::binned_tv;
use crate::walker;

/// Largest exact state count (`vertices * 2^vertices`) the distribution
/// evolution will handle.
pub const EXACT_STATE_CAP: usize = 1 << 22;

/// Seed-derivation salts for the cutoff probe's estimator lanes.
const SALT_LOWER: u64 = 0x4C4F_5745;
const SALT_UPPER: u64 = 0x5550_5052;

/// Errors from lamplighter computations.
#[derive(Debug, thiserror::Error)]
pub enum LamplighterError {
    /// The exact distribution over `(position, lamps)` does not fit.
    #[error("lamplighter state space has {states} states, above the exact cap {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },
    /// An exact base-graph quantity was needed but unavailable.
    #[error("base-graph oracle unavailable: {0}")]
    Oracle(#[from] OracleError),
    /// The probe grid is unusable.
    #[error("invalid probe grid: {reason}")]
    InvalidGrid { reason: String },
}

/// Full state of a lamplighter chain: the walker's position plus one lamp
/// bit per base vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LampState {
    position: u32,
    lamps: Vec<u64>,
    vertices: usize,
}

impl LampState {
    /// All lamps off, walker at `position`.
    pub fn dark(vertices: usize, position: u32) -> Self {
        assert!((position as usize) < vertices, "position out of range");
        Self {
            position,
            lamps: vec![0; vertices.div_ceil(64)],
            vertices,
        }
    }

    pub fn position(&self) -> u32 {
        self.position
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn is_lit(&self, v: u32) -> bool {
        let v = v as usize;
        assert!(v < self.vertices, "vertex out of range");
        self.lamps[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn set_lamp(&mut self, v: u32, lit: bool) {
        let v = v as usize;
        assert!(v < self.vertices, "vertex out of range");
        let mask = 1u64 << (v % 64);
        if lit {
            self.lamps[v / 64] |= mask;
        } else {
            self.lamps[v / 64] &= !mask;
        }
    }

    pub fn lit_count(&self) -> usize {
        self.lamps.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lamp configuration as one bit per vertex.
    pub fn lamp_bits(&self) -> Vec<bool> {
        (0..self.vertices as u32).map(|v| self.is_lit(v)).collect()
    }

    /// Flat index `position * 2^vertices + lamp bits`, matching the vertex
    /// numbering of the wreath product graph.  Only valid for small bases.
    pub fn index(&self) -> usize {
        assert!(
            self.vertices < usize::BITS as usize,
            "state index overflows for {} vertices",
            self.vertices
        );
        (self.position as usize) << self.vertices | self.lamps[0] as usize
    }

    /// Compact text encoding `position:hex`, hex nibbles covering lamp bits
    /// in vertex order (vertex 0 is the lowest bit of the first nibble).
    pub fn encode(&self) -> String {
        let nibbles = self.vertices.div_ceil(4);
        let mut s = format!("{}:", self.position);
        for j in 0..nibbles {
            let mut nibble = 0u8;
            for b in 0..4 {
                let v = 4 * j + b;
                if v < self.vertices && self.is_lit(v as u32) {
                    nibble |= 1 << b;
                }
            }
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        s
    }

    /// Inverse of [`LampState::encode`].
    pub fn decode(text: &str, vertices: usize) -> Option<Self> {
        let (pos, hex) = text.split_once(':')?;
        let position: u32 = pos.parse().ok()?;
        if position as usize >= vertices || hex.len() != vertices.div_ceil(4) {
            return None;
        }
        let mut state = Self::dark(vertices, position);
        for (j, c) in hex.chars().enumerate() {
            let nibble = c.to_digit(16)? as u8;
            for b in 0..4 {
                let v = 4 * j + b;
                if v < vertices && nibble >> b & 1 == 1 {
                    state.set_lamp(v as u32, true);
                }
            }
        }
        Some(state)
    }
}

/// Advance the lamplighter chain by one step: draw the next position from
/// the lazy walk kernel, rerandomize the lamp at the departure vertex, and
/// on an actual move also rerandomize the lamp at the arrival vertex.
pub fn step(g: &GraphTopology, state: &mut LampState, rng: &mut impl Rng) {
    let x = state.position;
    let y = walker::step(g, x, rng);
    state.set_lamp(x, rng.random_bool(0.5));
    if y != x {
        state.set_lamp(y, rng.random_bool(0.5));
    }
    state.position = y;
}

/// Run the chain for `steps` steps from all-dark lamps at `position`.
pub fn run(g: &GraphTopology, position: u32, steps: u64, rng: &mut impl Rng) -> LampState {
    let mut state = LampState::dark(g.vertex_count(), position);
    for _ in 0..steps {
        step(g, &mut state, rng);
    }
    state
}

/// Run the chain from all-dark lamps at a stationary starting position.
pub fn run_stationary(g: &GraphTopology, steps: u64, rng: &mut impl Rng) -> LampState {
    let position = walker::sample_stationary(g, rng);
    run(g, position, steps, rng)
}

/// Lamp configuration after `steps` steps from a stationary start: one
/// fair coin per vertex the walk has visited, dark elsewhere.  This is the
/// range-marking law expressed through the chain.
pub fn sample_lamp_marginal(g: &GraphTopology, steps: u64, rng: &mut impl Rng) -> Vec<bool> {
    run_stationary(g, steps, rng).lamp_bits()
}

/// Check the base graph is small enough for exact distribution work and
/// return `(2^n, n * 2^n)`.
fn exact_dimensions(g: &GraphTopology) -> Result<(usize, usize), LamplighterError> {
    let n = g.vertex_count();
    let states = if n >= usize::BITS as usize - 2 {
        usize::MAX
    } else {
        n << n
    };
    if states > EXACT_STATE_CAP {
        return Err(LamplighterError::StateSpaceTooLarge {
            states,
            cap: EXACT_STATE_CAP,
        });
    }
    Ok((1 << n, states))
}

/// One exact pushforward of a distribution over `(position, lamps)` states
/// under the lamplighter kernel.
fn push_forward(g: &GraphTopology, configs: usize, dist: &[f64], next: &mut [f64]) {
    next.fill(0.0);
    for x in 0..g.vertex_count() {
        let base = x * configs;
        let move_each = 0.5 / g.degree(x as u32) as f64 * 0.25;
        let xbit = 1usize << x;
        for lamps in 0..configs {
            let p = dist[base + lamps];
            if p == 0.0 {
                continue;
            }
            // Hold: the lamp at x is rerandomized, position unchanged.
            let hold_each = p * 0.25;
            let off = lamps & !xbit;
            next[base + off] += hold_each;
            next[base + (off | xbit)] += hold_each;
            // Moves: lamps at both endpoints are rerandomized.
            for &y in g.neighbors(x as u32) {
                let ybit = 1usize << y;
                let cleared = lamps & !xbit & !ybit;
                let ybase = y as usize * configs;
                let q = p * move_each;
                next[ybase + cleared] += q;
                next[ybase + (cleared | xbit)] += q;
                next[ybase + (cleared | ybit)] += q;
                next[ybase + (cleared | xbit | ybit)] += q;
            }
        }
    }
}

/// Total variation between a state distribution and the stationary law
/// (stationary position times independent uniform lamps).
fn tv_to_stationary(g: &GraphTopology, configs: usize, dist: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in 0..g.vertex_count() {
        let pi = g.stationary_probability(x as u32) / configs as f64;
        for lamps in 0..configs {
            acc += (dist[x * configs + lamps] - pi).abs();
        }
    }
    acc / 2.0
}

/// Exact total-variation curve of the chain started from all-dark lamps at
/// `start`: entry `t` is the distance to stationarity after `t` steps.
pub fn exact_tv_curve_from(
    g: &GraphTopology,
    start: u32,
    horizon: u64,
) -> Result<Vec<f64>, LamplighterError> {
    let (configs, states) = exact_dimensions(g)?;
    let mut dist = vec![0.0; states];
    dist[LampState::dark(g.vertex_count(), start).index()] = 1.0;
    let mut next = vec![0.0; states];
    let mut curve = Vec::with_capacity(horizon as usize + 1);
    curve.push(tv_to_stationary(g, configs, &dist));
    for _ in 0..horizon {
        push_forward(g, configs, &dist, &mut next);
        std::mem::swap(&mut dist, &mut next);
        curve.push(tv_to_stationary(g, configs, &dist));
    }
    Ok(curve)
}

/// Worst-start exact total-variation curve.  Any initial lamp pattern is
/// equivalent to all-dark under the lamp-flip symmetry of the kernel, so
/// only base starting vertices need to be scanned; vertex-transitive bases
/// need just one.
pub fn exact_tv_curve(g: &GraphTopology, horizon: u64) -> Result<Vec<f64>, LamplighterError> {
    let starts: Vec<u32> = if g.is_vertex_transitive() {
        vec![0]
    } else {
        (0..g.vertex_count() as u32).collect()
    };
    let mut worst = vec![0.0; horizon as usize + 1];
    for start in starts {
        let curve = exact_tv_curve_from(g, start, horizon)?;
        for (w, c) in worst.iter_mut().zip(curve) {
            if c > *w {
                *w = c;
            }
        }
    }
    Ok(worst)
}

/// Empirical total-variation curve from `replicas` sampled chains started
/// at `start`, against the exact stationary law.
pub fn empirical_tv_curve(
    g: &GraphTopology,
    start: u32,
    horizon: u64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<f64>, LamplighterError> {
    let (configs, states) = exact_dimensions(g)?;
    let n = g.vertex_count();
    let steps = horizon as usize;
    let counts: Vec<Vec<u64>> = (0..replicas)
        .into_par_iter()
        .fold(
            || vec![vec![0u64; states]; steps + 1],
            |mut acc, replica| {
                let mut rng = replica_rng(seed, replica);
                let mut state = LampState::dark(n, start);
                acc[0][state.index()] += 1;
                for t in 1..=steps {
                    step(g, &mut state, &mut rng);
                    acc[t][state.index()] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![vec![0u64; states]; steps + 1],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (ca, cb) in ra.iter_mut().zip(rb) {
                        *ca += cb;
                    }
                }
                a
            },
        );
    let total = replicas as f64;
    Ok(counts
        .iter()
        .map(|row| {
            let dist: Vec<f64> = row.iter().map(|&c| c as f64 / total).collect();
            tv_to_stationary(g, configs, &dist)
        })
        .collect())
}

/// Settings for the cutoff probe.
#[derive(Clone, Debug)]
pub struct CutoffConfig {
    /// Markings sampled per side (chain law and uniform law) per grid point.
    pub replicas_per_side: u64,
    /// Late-set pairs for the exponential-moment upper bound.
    pub pairs: u64,
    /// Histogram bins for the binned total-variation lower bound.
    pub bins: usize,
    /// Fraction of the cover time reserved for position mixing when
    /// composing the upper bound.
    pub residual_alpha: f64,
    pub seed: u64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            replicas_per_side: 2000,
            pairs: 2000,
            bins: 49,
            residual_alpha: 0.05,
            seed: 0,
        }
    }
}

/// One grid point of the cutoff probe.
#[derive(Clone, Debug)]
pub struct CutoffRow {
    /// Time fraction relative to the cover-time reference.
    pub alpha: f64,
    /// Binned total-variation lower bound from zero-count statistics.
    pub tv_lower: f64,
    /// Composed upper bound: exponential-moment marking bound at
    /// `alpha - residual_alpha` plus the base-walk distance to
    /// stationarity over the residual steps, clamped to one.
    pub tv_upper: f64,
    /// Exponential-moment mean behind the upper bound.
    pub m_hat: f64,
    /// Pairs that overflowed the moment estimator; a nonzero count makes
    /// the upper bound vacuous at this point.
    pub overflow_pairs: usize,
    /// Base-walk total variation over the residual steps.
    pub position_residual: f64,
}

/// Output of [`cutoff_probe`].
#[derive(Clone, Debug)]
pub struct CutoffReport {
    /// Cover-time reference used to convert fractions to steps.
    pub t_cov_ref: f64,
    pub rows: Vec<CutoffRow>,
    /// Interpolated fraction where the lower bound falls through 1/2.
    pub lower_crossing: Option<f64>,
    /// Interpolated fraction where the upper bound falls through 1/4.
    pub upper_crossing: Option<f64>,
    /// Midpoint of the two crossings: the probe's cutoff location estimate.
    pub crossing: Option<f64>,
}

/// Locate where a nonincreasing sampled curve first reaches `level`,
/// interpolating linearly between grid points.
fn crossing_point(alphas: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if values[0] <= level {
        return Some(alphas[0]);
    }
    for i in 1..values.len() {
        if values[i] <= level {
            let (a0, a1) = (alphas[i - 1], alphas[i]);
            let (v0, v1) = (values[i - 1], values[i]);
            if v1 == v0 {
                return Some(a1);
            }
            return Some(a0 + (level - v0) * (a1 - a0) / (v1 - v0));
        }
    }
    None
}

/// Probe the lamp-marginal cutoff: for each time fraction, a binned
/// total-variation lower bound (chain-law zero statistics against uniform
/// ones) and a composed upper bound (exponential-moment marking bound plus
/// base-walk residual).  The midpoint of the two threshold crossings
/// locates the indistinguishability transition.
pub fn cutoff_probe(
    g: &GraphTopology,
    alphas: &[f64],
    t_cov_ref: f64,
    config: &CutoffConfig,
) -> Result<CutoffReport, LamplighterError> {
    if alphas.is_empty() || alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LamplighterError::InvalidGrid {
            reason: "grid must be nonempty and strictly increasing".into(),
        });
    }
    if !(t_cov_ref > 0.0) {
        return Err(LamplighterError::InvalidGrid {
            reason: format!("cover-time reference {t_cov_ref} must be positive"),
        });
    }
    assert!(config.bins >= 2, "need at least two histogram bins");

    let samples = latepoints::zero_statistic_samples(
        g,
        alphas,
        t_cov_ref,
        config.replicas_per_side,
        derive_seed(config.seed, SALT_LOWER),
    );
    let residual_steps = latepoints::steps_for_fraction(config.residual_alpha, t_cov_ref);
    let position_residual = oracle::tv_at(g, residual_steps)?;

    let mut rows = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let tv_lower = binned_tv(&samples.per_alpha[i], &samples.uniform, config.bins);
        let moment_alpha = (alpha - config.residual_alpha).max(0.0);
        let moment = latepoints::exp_moment_estimate(
            g,
            moment_alpha,
            t_cov_ref,
            &DistinguisherConfig {
                pairs: config.pairs as usize,
                seed: derive_seed(config.seed, SALT_UPPER),
                ..DistinguisherConfig::default()
            },
        );
        let tv_upper = if moment.overflow_count > 0 {
            1.0
        } else {
            (moment.tv_upper + position_residual).min(1.0)
        };
        rows.push(CutoffRow {
            alpha,
            tv_lower,
            tv_upper,
            m_hat: moment.m_hat.mean,
            overflow_pairs: moment.overflow_count,
            position_residual,
        });
    }

    let lower_values: Vec<f64> = rows.iter().map(|r| r.tv_lower).collect();
    let upper_values: Vec<f64> = rows.iter().map(|r| r.tv_upper).collect();
    let lower_crossing = crossing_point(alphas, &lower_values, 0.5);
    let upper_crossing = crossing_point(alphas, &upper_values, 0.25);
    let crossing = match (lower_crossing, upper_crossing) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    Ok(CutoffReport {
        t_cov_ref,
        rows,
        lower_crossing,
        upper_crossing,
        crossing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::FamilySpec;
    use crate::walker::run_range_with;
    use crate::walker::StartPoint;

    fn complete(n: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Complete { n }).unwrap()
    }

    fn torus(dim: usize, side: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Torus { dim, side }).unwrap()
    }

    #[test]
    fn lamp_state_bits_and_encoding_round_trip() {
        let mut s = LampState::dark(70, 3);
        assert_eq!(s.lit_count(), 0);
        s.set_lamp(0, true);
        s.set_lamp(64, true);
        s.set_lamp(69, true);
        assert!(s.is_lit(0) && s.is_lit(64) && s.is_lit(69));
        assert!(!s.is_lit(1));
        assert_eq!(s.lit_count(), 3);
        s.set_lamp(64, false);
        assert_eq!(s.lit_count(), 2);
        let text = s.encode();
        let back = LampState::decode(&text, 70).expect("well-formed encoding");
        assert_eq!(back, s);
        assert!(LampState::decode("3", 70).is_none());
        assert!(LampState::decode("99:0000", 70).is_none());
    }

    #[test]
    fn state_index_matches_wreath_vertex_numbering() {
        // The wreath graph over K_2 numbers states as position * 4 + lamps.
        let mut s = LampState::dark(2, 1);
        s.set_lamp(0, true);
        assert_eq!(s.index(), 1 * 4 + 1);
        s.set_lamp(1, true);
        assert_eq!(s.index(), 1 * 4 + 3);
    }

    #[test]
    fn one_step_distribution_over_an_edge_matches_hand_kernel() {
        // Base K_2 from position 0, all dark.  Hold (prob 1/2): lamp 0
        // rerandomized, two states at 1/4 each.  Move (prob 1/2): both
        // lamps rerandomized, four states at 1/8 each.
        let g = complete(2);
        let (configs, states) = exact_dimensions(&g).unwrap();
        assert_eq!((configs, states), (4, 8));
        let mut dist = vec![0.0; states];
        dist[LampState::dark(2, 0).index()] = 1.0;
        let mut next = vec![0.0; states];
        push_forward(&g, configs, &dist, &mut next);
        let expected = [
            0.25, 0.25, 0.0, 0.0, // position 0: lamps 00, 01 (lamp 1 dark)
            0.125, 0.125, 0.125, 0.125, // position 1: all four lamp patterns
        ];
        for (i, (&got, &want)) in next.iter().zip(&expected).enumerate() {
            assert!((got - want).abs() < 1e-15, "state {i}: {got} vs {want}");
        }
        assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_curve_starts_at_full_distance_and_decreases() {
        let g = complete(3);
        let curve = exact_tv_curve(&g, 25).unwrap();
        assert_eq!(curve.len(), 26);
        // At t = 0 the whole mass sits on one of 24 equally likely states.
        assert!((curve[0] - 23.0 / 24.0).abs() < 1e-12);
        for w in curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "curve increased: {w:?}");
        }
        assert!(curve[25] < 0.05, "chain failed to mix: {}", curve[25]);
    }

    #[test]
    fn empirical_curve_tracks_exact_curve() {
        let g = complete(2);
        let exact = exact_tv_curve_from(&g, 0, 10).unwrap();
        let empirical = empirical_tv_curve(&g, 0, 10, 40_000, 77).unwrap();
        assert_eq!(empirical.len(), exact.len());
        for (t, (e, x)) in empirical.iter().zip(&exact).enumerate() {
            assert!((e - x).abs() < 0.02, "t={t}: empirical {e} vs exact {x}");
        }
    }

    #[test]
    fn chain_moves_respect_base_adjacency_and_locality() {
        let g = torus(2, 4);
        let mut rng = replica_rng(0xBEEF, 0);
        let mut state = LampState::dark(g.vertex_count(), 5);
        for _ in 0..2_000 {
            let before = state.clone();
            step(&g, &mut state, &mut rng);
            let x = before.position();
            let y = state.position();
            if y == x {
                // Hold: at most the lamp under the walker changed.
                for v in 0..g.vertex_count() as u32 {
                    if v != x {
                        assert_eq!(state.is_lit(v), before.is_lit(v));
                    }
                }
            } else {
                assert!(g.neighbors(x).contains(&y), "jumped {x} -> {y}");
                for v in 0..g.vertex_count() as u32 {
                    if v != x && v != y {
                        assert_eq!(state.is_lit(v), before.is_lit(v));
                    }
                }
            }
        }
    }

    #[test]
    fn lamp_marginal_matches_range_marking_frequencies() {
        // The lamp configuration from a stationary start must agree in law
        // with a fair-coin marking of the walk's range at the same horizon.
        let g = complete(3);
        let steps = 4u64;
        let replicas = 40_000u64;
        let lamp_freq: Vec<f64> = {
            let mut counts = vec![0u64; 3];
            for replica in 0..replicas {
                let mut rng = replica_rng(0xA1, replica);
                let bits = sample_lamp_marginal(&g, steps, &mut rng);
                for (v, &b) in bits.iter().enumerate() {
                    if b {
                        counts[v] += 1;
                    }
                }
            }
            counts.iter().map(|&c| c as f64 / replicas as f64).collect()
        };
        let marking_freq: Vec<f64> = {
            let mut counts = vec![0u64; 3];
            for replica in 0..replicas {
                let mut rng = replica_rng(0xB2, replica);
                let record = run_range_with(&g, &mut rng, StartPoint::Stationary, steps, false);
                for v in 0..3u32 {
                    if record.visited[v as usize] && rng.random_bool(0.5) {
                        counts[v as usize] += 1;
                    }
                }
            }
            counts.iter().map(|&c| c as f64 / replicas as f64).collect()
        };
        for v in 0..3 {
            let sigma = (0.5 * 0.5 / replicas as f64).sqrt() * 2.0f64.sqrt();
            assert!(
                (lamp_freq[v] - marking_freq[v]).abs() < 4.0 * sigma,
                "vertex {v}: lamp {} vs marking {}",
                lamp_freq[v],
                marking_freq[v]
            );
        }
    }

    #[test]
    fn cutoff_probe_produces_ordered_bounds() {
        let g = complete(8);
        let t_cov = walker::estimate_cover_time(&g, 200, 1).unwrap();
        let grid = [0.2, 0.6, 1.0, 1.6, 2.4];
        // A K_8 cover time is ~40 steps, so the default 5% residual leaves
        // the walk a single position-mixing step and floors the upper
        // bound near 0.375; a quarter of the cover time (~10 steps) is the
        // appropriate residual at this toy scale.
        let config = CutoffConfig {
            replicas_per_side: 500,
            pairs: 400,
            residual_alpha: 0.25,
            seed: 9,
            ..CutoffConfig::default()
        };
        let report = cutoff_probe(&g, &grid, t_cov.mean, &config).unwrap();
        assert_eq!(report.rows.len(), grid.len());
        for row in &report.rows {
            assert!((0.0..=1.0).contains(&row.tv_lower), "{row:?}");
            assert!((0.0..=1.0).contains(&row.tv_upper), "{row:?}");
        }
        // Early fractions leave the graph badly under-covered, late ones
        // fully covered: the lower bound must relax across the grid.
        let first = report.rows.first().unwrap();
        let last = report.rows.last().unwrap();
        assert!(first.tv_lower > last.tv_lower);
        assert!(last.tv_upper < 0.25, "late upper bound: {}", last.tv_upper);
        assert!(report.upper_crossing.is_some());

        let again = cutoff_probe(&g, &grid, t_cov.mean, &config).unwrap();
        for (a, b) in report.rows.iter().zip(&again.rows) {
            assert_eq!(a.tv_lower.to_bits(), b.tv_lower.to_bits());
            assert_eq!(a.tv_upper.to_bits(), b.tv_upper.to_bits());
        }
    }

    #[test]
    fn probe_rejects_bad_grids() {
        let g = complete(4);
        let config = CutoffConfig::default();
        assert!(matches!(
            cutoff_probe(&g, &[], 10.0, &config),
            Err(LamplighterError::InvalidGrid { .. })
        ));
        assert!(matches!(
            cutoff_probe(&g, &[0.5, 0.5], 10.0, &config),
            Err(LamplighterError::InvalidGrid { .. })
        ));
        assert!(matches!(
            cutoff_probe(&g, &[0.2, 0.5], 0.0, &config),
            Err(LamplighterError::InvalidGrid { .. })
        ));
    }

    #[test]
    fn oversized_state_space_is_refused() {
        let g = torus(2, 5);
        assert!(matches!(
            exact_tv_curve(&g, 5),
            Err(LamplighterError::StateSpaceTooLarge { .. })
        ));
    }
}
