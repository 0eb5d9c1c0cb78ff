//! Exact dense-matrix analysis of the lazy walk: transition powers, mixing
//! times, Green's functions, hitting times, Matthews bounds, and transience
//! profiles.
//!
//! Everything in this module is deterministic linear algebra, restricted to
//! graphs with at most [`DENSE_CAP`] vertices. Above the cap the operations
//! refuse with [`OracleError::CapExceeded`] instead of approximating; large
//! graphs are handled by the Monte Carlo estimators elsewhere in the crate,
//! which are in turn validated against these exact values on small graphs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graphs::GraphTopology;
use crate::stats::harmonic;

/// Largest vertex count for which dense-matrix computations are attempted.
pub const DENSE_CAP: usize = 4096;

/// Hard iteration guard for mixing-time scans.
pub const MIXING_STEP_LIMIT: u64 = 1_000_000;

/// Default mixing threshold: a mixing time without an explicit ε means ε = ¼.
pub const DEFAULT_EPSILON: f64 = 0.25;

/// Threshold grid computed by [`SpectralSummary::compute`].
pub const DEFAULT_EPS_GRID: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

/// Errors from exact computations.
#[derive(Debug, Error)]
pub enum OracleError {
    /// The graph is too large for dense-matrix work.
    #[error("graph has {vertices} vertices, above the dense cap of {cap}")]
    CapExceeded { vertices: usize, cap: usize },
    /// A mixing scan hit the iteration guard before reaching its threshold.
    #[error("mixing scan did not reach epsilon {epsilon} within {limit} steps")]
    DidNotConverge { epsilon: f64, limit: u64 },
    /// An absorbing linear system failed to solve; indicates a disconnected
    /// graph, which the graph constructors are supposed to rule out.
    #[error("absorbing system for target vertex {target} is singular")]
    SingularSystem { target: u32 },
    /// Transience profiles are only supported for small set diameters.
    #[error("transience profile span {s_max} exceeds the supported limit {limit}")]
    ProfileSpanTooLarge { s_max: u32, limit: u32 },
    /// Reading or writing a cached summary failed.
    #[error("summary i/o failed: {0}")]
    Io(#[from] std::io::Error),
    /// A cached summary file did not parse or did not match the graph.
    #[error("malformed summary cache: {0}")]
    MalformedCache(String),
}

/// Numerical tolerances used by [`SpectralSummary::verify`], centralized so
/// every exactness claim in the crate refers to one set of constants.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Permitted drift of transition-power row sums away from 1.
    pub row_sum_drift: f64,
    /// Permitted residual of the stationary vector under the kernel.
    pub stationarity: f64,
    /// Permitted gap between the hitting diagonal and the return time 1/π(x).
    pub return_time: f64,
    /// Permitted relative drift of Green's-function row sums from the horizon.
    pub greens_row_sum: f64,
    /// Additive slack when asserting mixing-decay inequalities.
    pub decay_slack: f64,
}

/// Default tolerances: row-stochasticity and stationarity to 1e-10, the
/// return-time identity to 1e-8.
pub const STANDARD_TOLERANCES: Tolerances = Tolerances {
    row_sum_drift: 1e-10,
    stationarity: 1e-10,
    return_time: 1e-8,
    greens_row_sum: 1e-9,
    decay_slack: 1e-12,
};

impl Default for Tolerances {
    fn default() -> Self {
        STANDARD_TOLERANCES
    }
}

fn ensure_dense(g: &GraphTopology) -> Result<(), OracleError> {
    let vertices = g.vertex_count();
    if vertices > DENSE_CAP {
        return Err(OracleError::CapExceeded { vertices, cap: DENSE_CAP });
    }
    Ok(())
}

/// The lazy transition kernel as a dense row-stochastic matrix: entry
/// `(x, x)` is ½ and `(x, y)` is `1/(2 deg x)` for each neighbor `y`.
pub fn transition_matrix(g: &GraphTopology) -> Result<DMatrix<f64>, OracleError> {
    ensure_dense(g)?;
    let n = g.vertex_count();
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        p[(x, x)] = 0.5;
        let step = 0.5 / g.degree(x as u32) as f64;
        for &y in g.neighbors(x as u32) {
            p[(x, y as usize)] = step;
        }
    }
    Ok(p)
}

/// The stationary distribution π(x) = deg(x) / Σ deg, exact up to one
/// floating-point division per entry.
pub fn stationary_vector(g: &GraphTopology) -> DVector<f64> {
    let total = g.total_degree() as f64;
    DVector::from_fn(g.vertex_count(), |x, _| g.degree(x as u32) as f64 / total)
}

/// Total variation distance between a probability row and π.
fn tv_to_pi(row: &DVector<f64>, pi: &DVector<f64>) -> f64 {
    0.5 * row.iter().zip(pi.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Worst relative deviation `max_y |row(y)/π(y) − 1|`.
fn uniform_dev(row: &DVector<f64>, pi: &DVector<f64>) -> f64 {
    row.iter()
        .zip(pi.iter())
        .map(|(a, b)| (a / b - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Mixing times for several thresholds at once, sharing one scan.
#[derive(Debug, Clone)]
pub struct MixingTimes {
    /// Pairs `(ε, t)` where `t` is the smallest time with worst-start total
    /// variation at most ε.
    pub tv: Vec<(f64, u64)>,
    /// Pairs `(ε, t)` for the uniform (ratio) distance.
    pub uniform: Vec<(f64, u64)>,
}

impl MixingTimes {
    fn lookup(list: &[(f64, u64)], epsilon: f64) -> Option<u64> {
        list.iter().find(|(e, _)| (e - epsilon).abs() < 1e-12).map(|&(_, t)| t)
    }

    /// Total-variation mixing time recorded for `epsilon`, if scanned.
    pub fn tv_time(&self, epsilon: f64) -> Option<u64> {
        Self::lookup(&self.tv, epsilon)
    }

    /// Uniform-distance mixing time recorded for `epsilon`, if scanned.
    pub fn uniform_time(&self, epsilon: f64) -> Option<u64> {
        Self::lookup(&self.uniform, epsilon)
    }
}

/// Walk state for the scan: a single row when vertex-transitivity makes every
/// start equivalent, otherwise the full power matrix.
enum ScanState {
    Row { v: DVector<f64>, pt: DMatrix<f64> },
    Full { m: DMatrix<f64>, p: DMatrix<f64> },
}

impl ScanState {
    fn new(g: &GraphTopology) -> Result<Self, OracleError> {
        let p = transition_matrix(g)?;
        let n = g.vertex_count();
        if g.is_vertex_transitive() {
            let mut v = DVector::zeros(n);
            v[0] = 1.0;
            Ok(ScanState::Row { v, pt: p.transpose() })
        } else {
            Ok(ScanState::Full { m: DMatrix::identity(n, n), p })
        }
    }

    /// Worst-start TV and uniform deviation at the current time.
    fn stats(&self, pi: &DVector<f64>) -> (f64, f64) {
        match self {
            ScanState::Row { v, .. } => (tv_to_pi(v, pi), uniform_dev(v, pi)),
            ScanState::Full { m, .. } => {
                let mut tv: f64 = 0.0;
                let mut uni: f64 = 0.0;
                for x in 0..m.nrows() {
                    let row = DVector::from_iterator(m.ncols(), m.row(x).iter().copied());
                    tv = tv.max(tv_to_pi(&row, pi));
                    uni = uni.max(uniform_dev(&row, pi));
                }
                (tv, uni)
            }
        }
    }

    fn advance(&mut self) {
        match self {
            ScanState::Row { v, pt } => *v = &*pt * &*v,
            ScanState::Full { m, p } => *m = &*m * &*p,
        }
    }
}

/// One scan over increasing `t` that records, for each requested threshold,
/// the first time the relevant distance drops to it. Both distances are
/// nonincreasing in `t` for the lazy kernel, so first crossings are exact.
fn scan_mixing(
    g: &GraphTopology,
    tv_eps: &[f64],
    uniform_eps: &[f64],
) -> Result<MixingTimes, OracleError> {
    ensure_dense(g)?;
    let pi = stationary_vector(g);
    let mut state = ScanState::new(g)?;
    let mut tv_slots: Vec<(f64, Option<u64>)> = tv_eps.iter().map(|&e| (e, None)).collect();
    let mut uni_slots: Vec<(f64, Option<u64>)> =
        uniform_eps.iter().map(|&e| (e, None)).collect();
    for t in 0..=MIXING_STEP_LIMIT {
        let (tv, uni) = state.stats(&pi);
        for slot in tv_slots.iter_mut() {
            if slot.1.is_none() && tv <= slot.0 {
                slot.1 = Some(t);
            }
        }
        for slot in uni_slots.iter_mut() {
            if slot.1.is_none() && uni <= slot.0 {
                slot.1 = Some(t);
            }
        }
        let done = tv_slots.iter().chain(uni_slots.iter()).all(|s| s.1.is_some());
        if done {
            return Ok(MixingTimes {
                tv: tv_slots.into_iter().map(|(e, t)| (e, t.unwrap())).collect(),
                uniform: uni_slots.into_iter().map(|(e, t)| (e, t.unwrap())).collect(),
            });
        }
        state.advance();
        let _ = t;
    }
    let epsilon = tv_slots
        .iter()
        .chain(uni_slots.iter())
        .filter(|s| s.1.is_none())
        .map(|s| s.0)
        .fold(f64::INFINITY, f64::min);
    Err(OracleError::DidNotConverge { epsilon, limit: MIXING_STEP_LIMIT })
}

/// Smallest `t` with worst-start total variation to π at most `epsilon`,
/// from exact kernel powers.
pub fn mixing_time(g: &GraphTopology, epsilon: f64) -> Result<u64, OracleError> {
    Ok(scan_mixing(g, &[epsilon], &[])?.tv[0].1)
}

/// Smallest `t` with `max_{x,y} |p^t(x,y)/π(y) − 1|` at most `epsilon`.
/// Always at least [`mixing_time`] at the same threshold.
pub fn uniform_mixing_time(g: &GraphTopology, epsilon: f64) -> Result<u64, OracleError> {
    Ok(scan_mixing(g, &[], &[epsilon])?.uniform[0].1)
}

/// Both mixing-time families over a threshold grid, in one scan.
pub fn mixing_times(g: &GraphTopology, eps_grid: &[f64]) -> Result<MixingTimes, OracleError> {
    scan_mixing(g, eps_grid, eps_grid)
}

/// `p^t` by binary powering.
fn matrix_power(p: &DMatrix<f64>, t: u64) -> DMatrix<f64> {
    let n = p.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = p.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Worst-start total variation distance to π at exactly time `t`.
pub fn tv_at(g: &GraphTopology, t: u64) -> Result<f64, OracleError> {
    ensure_dense(g)?;
    let pi = stationary_vector(g);
    if g.is_vertex_transitive() {
        let mut state = ScanState::new(g)?;
        for _ in 0..t {
            state.advance();
        }
        Ok(state.stats(&pi).0)
    } else {
        let p = transition_matrix(g)?;
        let m = matrix_power(&p, t);
        let mut tv: f64 = 0.0;
        for x in 0..m.nrows() {
            let row = DVector::from_iterator(m.ncols(), m.row(x).iter().copied());
            tv = tv.max(tv_to_pi(&row, &pi));
        }
        Ok(tv)
    }
}

/// Worst-start total variation at every `t = 0..=t_max`.
pub fn tv_curve(g: &GraphTopology, t_max: u64) -> Result<Vec<f64>, OracleError> {
    ensure_dense(g)?;
    let pi = stationary_vector(g);
    let mut state = ScanState::new(g)?;
    let mut curve = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        curve.push(state.stats(&pi).0);
        if t < t_max {
            state.advance();
        }
    }
    Ok(curve)
}

/// Truncated Green's function `g(x,y) = Σ_{t=1}^{horizon} p^t(x,y)`:
/// the expected number of visits to `y` in the first `horizon` steps from `x`.
#[derive(Debug, Clone)]
pub struct GreensFunction {
    /// Entry `(x, y)` is `g(x, y)`.
    pub matrix: DMatrix<f64>,
    /// The truncation horizon; every row sums to it exactly.
    pub horizon: u64,
}

impl GreensFunction {
    /// `g(x, A) = Σ_{y∈A} g(x, y)` for a vertex set `A`.
    pub fn mass_on_set(&self, x: u32, set: &[u32]) -> f64 {
        set.iter().map(|&y| self.matrix[(x as usize, y as usize)]).sum()
    }

    /// Single entry `g(x, y)`.
    pub fn value(&self, x: u32, y: u32) -> f64 {
        self.matrix[(x as usize, y as usize)]
    }
}

/// Compute the Green's function. `horizon = None` uses the uniform mixing
/// time at ε = ¼, the crate-wide default truncation.
pub fn greens_function(
    g: &GraphTopology,
    horizon: Option<u64>,
) -> Result<GreensFunction, OracleError> {
    ensure_dense(g)?;
    let horizon = match horizon {
        Some(h) => h,
        None => uniform_mixing_time(g, DEFAULT_EPSILON)?,
    };
    let p = transition_matrix(g)?;
    let n = g.vertex_count();
    let mut sum = DMatrix::zeros(n, n);
    let mut power = p.clone();
    for t in 1..=horizon {
        sum += &power;
        if t < horizon {
            power = &power * &p;
        }
    }
    Ok(GreensFunction { matrix: sum, horizon })
}

/// Expected hitting times of one target from every start, solved through the
/// absorbing-chain linear system `(I − Q) h = 1` with the target removed.
/// The entry at the target itself is the expected *return* time
/// `1 + Σ_y p(target, y) h(y)`, which equals `1/π(target)`.
pub fn hitting_times_to_target(
    g: &GraphTopology,
    target: u32,
) -> Result<DVector<f64>, OracleError> {
    ensure_dense(g)?;
    let n = g.vertex_count();
    let t = target as usize;
    let reduced = |v: usize| if v < t { v } else { v - 1 };
    let mut a = DMatrix::zeros(n - 1, n - 1);
    for x in 0..n {
        if x == t {
            continue;
        }
        let i = reduced(x);
        a[(i, i)] = 0.5;
        let step = 0.5 / g.degree(x as u32) as f64;
        for &y in g.neighbors(x as u32) {
            if y as usize != t {
                a[(i, reduced(y as usize))] -= step;
            }
        }
    }
    let rhs = DVector::from_element(n - 1, 1.0);
    let h = a
        .lu()
        .solve(&rhs)
        .ok_or(OracleError::SingularSystem { target })?;
    let mut full = DVector::zeros(n);
    for x in 0..n {
        if x != t {
            full[x] = h[reduced(x)];
        }
    }
    let step = 0.5 / g.degree(target) as f64;
    full[t] = 1.0 + g.neighbors(target).iter().map(|&y| step * full[y as usize]).sum::<f64>();
    Ok(full)
}

/// Full matrix of expected hitting times: entry `(x, y)` is the expected time
/// for a walk from `x` to first reach `y`; the diagonal holds return times.
/// Targets are solved independently in parallel.
pub fn expected_hitting_times(g: &GraphTopology) -> Result<DMatrix<f64>, OracleError> {
    ensure_dense(g)?;
    let n = g.vertex_count();
    let columns: Vec<DVector<f64>> = (0..n as u32)
        .into_par_iter()
        .map(|target| hitting_times_to_target(g, target))
        .collect::<Result<_, _>>()?;
    Ok(DMatrix::from_fn(n, n, |x, y| columns[y][x]))
}

/// Maximal hitting time: the largest off-diagonal entry, i.e. the worst
/// expected first-visit time over ordered pairs of distinct vertices.
pub fn max_hitting_time(hitting: &DMatrix<f64>) -> f64 {
    let n = hitting.nrows();
    let mut best: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                best = best.max(hitting[(x, y)]);
            }
        }
    }
    best
}

/// Expected hitting time of `target` from a stationary start,
/// `Σ_{z≠target} π(z) · E_z τ(target)`.
pub fn stationary_hitting_time(g: &GraphTopology, target: u32) -> Result<f64, OracleError> {
    let h = hitting_times_to_target(g, target)?;
    let total = g.total_degree() as f64;
    let mut sum = 0.0;
    for z in 0..g.vertex_count() {
        if z != target as usize {
            sum += (g.degree(z as u32) as f64 / total) * h[z];
        }
    }
    Ok(sum)
}

/// Harmonic-number bounds sandwiching the expected cover time.
#[derive(Debug, Clone)]
pub struct MatthewsBounds {
    /// Best lower bound found: `min-pairwise-hitting(A) · H_{|A|−1}` maximized
    /// over greedily chosen far-apart vertex subsets `A`.
    pub lower: f64,
    /// The classical upper bound `t_hit · H_{|V|}`.
    pub upper: f64,
    /// The subset realizing the lower bound.
    pub subset: Vec<u32>,
    /// Its minimal pairwise expected hitting time.
    pub subset_min_hitting: f64,
}

/// Greedy farthest-point vertex ordering: start from a vertex of maximal BFS
/// distance from vertex 0, then repeatedly append the vertex farthest from
/// the set chosen so far (ties broken by smallest index).
pub fn farthest_point_ordering(g: &GraphTopology, count: usize) -> Vec<u32> {
    let n = g.vertex_count();
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    let from0 = g.distances_from(0);
    let first = (0..n).max_by_key(|&v| (from0[v], std::cmp::Reverse(v))).unwrap() as u32;
    let mut order = vec![first];
    let mut dist = g.distances_from(first);
    let mut chosen = vec![false; n];
    chosen[first as usize] = true;
    while order.len() < count {
        let next = (0..n)
            .filter(|&v| !chosen[v])
            .max_by_key(|&v| (dist[v], std::cmp::Reverse(v)))
            .unwrap();
        chosen[next] = true;
        order.push(next as u32);
        let d2 = g.distances_from(next as u32);
        for v in 0..n {
            dist[v] = dist[v].min(d2[v]);
        }
    }
    order
}

/// Matthews bounds on the expected cover time. The upper bound is exact form;
/// the lower bound tries every prefix of a farthest-point ordering up to 64
/// vertices, since any subset yields a valid bound.
pub fn matthews_bounds(g: &GraphTopology) -> Result<MatthewsBounds, OracleError> {
    let hitting = expected_hitting_times(g)?;
    let n = g.vertex_count();
    let upper = max_hitting_time(&hitting) * harmonic(n);
    let order = farthest_point_ordering(g, 64.min(n));
    let mut lower = 0.0;
    let mut subset = Vec::new();
    let mut subset_min = 0.0;
    let mut min_pair = f64::INFINITY;
    for k in 2..=order.len() {
        let w = order[k - 1] as usize;
        for &u in &order[..k - 1] {
            min_pair = min_pair.min(hitting[(u as usize, w)]);
            min_pair = min_pair.min(hitting[(w, u as usize)]);
        }
        let candidate = min_pair * harmonic(k - 1);
        if candidate > lower {
            lower = candidate;
            subset = order[..k].to_vec();
            subset_min = min_pair;
        }
    }
    Ok(MatthewsBounds { lower, upper, subset, subset_min_hitting: subset_min })
}

/// Empirical transience function: `rho(r, s)` is the largest Green's mass
/// `g(x, A)` over all vertices `x` and sets `A` with diameter at most `s`
/// and distance at least `r` from `x`.
#[derive(Debug, Clone)]
pub struct TransienceProfile {
    /// Largest separation tabulated.
    pub r_max: u32,
    /// Largest set diameter tabulated.
    pub s_max: u32,
    /// `values[s][r]`; 0.0 where no admissible set exists.
    pub values: Vec<Vec<f64>>,
}

impl TransienceProfile {
    /// Tabulated `ρ̂(r, s)`.
    pub fn rho(&self, r: u32, s: u32) -> f64 {
        self.values[s as usize][r as usize]
    }
}

/// Maximum-weight subset of `candidates` whose members are pairwise
/// `compatible`, by branch and bound over a weight-sorted ordering.
fn max_weight_clique(
    candidates: &[usize],
    weight: &[f64],
    compatible: &dyn Fn(usize, usize) -> bool,
) -> f64 {
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_by(|&a, &b| weight[b].partial_cmp(&weight[a]).unwrap());
    let mut best = 0.0_f64;
    fn search(
        chosen: f64,
        cand: &[usize],
        weight: &[f64],
        compatible: &dyn Fn(usize, usize) -> bool,
        best: &mut f64,
    ) {
        if cand.is_empty() {
            *best = best.max(chosen);
            return;
        }
        let remaining: f64 = cand.iter().map(|&v| weight[v]).sum();
        if chosen + remaining <= *best {
            return;
        }
        let v = cand[0];
        let filtered: Vec<usize> =
            cand[1..].iter().copied().filter(|&u| compatible(u, v)).collect();
        search(chosen + weight[v], &filtered, weight, compatible, best);
        search(chosen, &cand[1..], weight, compatible, best);
    }
    search(0.0, &sorted, weight, compatible, &mut best);
    best
}

/// Tabulate `ρ̂(r, s)` for `r = 0..=r_max`, `s = 0..=s_max` from the exact
/// Green's matrix. The maximum over admissible sets shrinks as `r` grows, so
/// each column is nonincreasing in `r` by construction.
pub fn transience_profile(
    g: &GraphTopology,
    r_max: u32,
    s_max: u32,
) -> Result<TransienceProfile, OracleError> {
    const SPAN_LIMIT: u32 = 2;
    if s_max > SPAN_LIMIT {
        return Err(OracleError::ProfileSpanTooLarge { s_max, limit: SPAN_LIMIT });
    }
    ensure_dense(g)?;
    let greens = greens_function(g, None)?;
    let n = g.vertex_count();
    let dist: Vec<Vec<u32>> = (0..n as u32).map(|v| g.distances_from(v)).collect();
    let mut values = vec![vec![0.0_f64; r_max as usize + 1]; s_max as usize + 1];
    for s in 0..=s_max as usize {
        for r in 0..=r_max as usize {
            let mut best = 0.0_f64;
            for x in 0..n {
                let candidates: Vec<usize> =
                    (0..n).filter(|&v| dist[x][v] >= r as u32).collect();
                if candidates.is_empty() {
                    continue;
                }
                let weights: Vec<f64> =
                    (0..n).map(|v| greens.matrix[(x, v)]).collect();
                let compatible = |u: usize, v: usize| dist[u][v] <= s as u32;
                best = best.max(max_weight_clique(&candidates, &weights, &compatible));
            }
            values[s][r] = best;
        }
    }
    Ok(TransienceProfile { r_max, s_max, values })
}

/// One sampled check of the mixing-decay inequalities.
#[derive(Debug, Clone)]
pub struct DecaySample {
    /// The two time offsets combined.
    pub s: u64,
    /// See `s`.
    pub t: u64,
    /// Worst-start TV at `t + s`.
    pub tv_combined: f64,
    /// The product bound `4 · d(t) · d(s)`.
    pub tv_bound: f64,
    /// Worst-pair uniform deviation at `t + s`.
    pub uniform_combined: f64,
    /// The product bound `d^U(t) · d^U(s)`.
    pub uniform_bound: f64,
    /// Whether both inequalities hold (up to additive slack).
    pub holds: bool,
}

/// Outcome of [`mixing_decay_check`].
#[derive(Debug, Clone)]
pub struct MixingDecayReport {
    /// Per-pair results.
    pub samples: Vec<DecaySample>,
    /// Whether every sampled pair satisfied both inequalities.
    pub all_hold: bool,
}

/// Verify, for each `(s, t)` pair, the decay inequalities
/// `d(t+s) ≤ 4·d(t)·d(s)` for worst-start TV and
/// `d^U(t+s) ≤ d^U(t)·d^U(s)` for the uniform distance.
pub fn mixing_decay_check(
    g: &GraphTopology,
    pairs: &[(u64, u64)],
) -> Result<MixingDecayReport, OracleError> {
    ensure_dense(g)?;
    let pi = stationary_vector(g);
    let needed: BTreeSet<u64> = pairs
        .iter()
        .flat_map(|&(s, t)| [s, t, s + t])
        .collect();
    let t_max = needed.iter().next_back().copied().unwrap_or(0);
    let mut tv_of = std::collections::BTreeMap::new();
    let mut uni_of = std::collections::BTreeMap::new();
    let mut state = ScanState::new(g)?;
    for t in 0..=t_max {
        if needed.contains(&t) {
            let (tv, uni) = state.stats(&pi);
            tv_of.insert(t, tv);
            uni_of.insert(t, uni);
        }
        if t < t_max {
            state.advance();
        }
    }
    let slack = STANDARD_TOLERANCES.decay_slack;
    let samples: Vec<DecaySample> = pairs
        .iter()
        .map(|&(s, t)| {
            let tv_combined = tv_of[&(s + t)];
            let tv_bound = 4.0 * tv_of[&t] * tv_of[&s];
            let uniform_combined = uni_of[&(s + t)];
            let uniform_bound = uni_of[&t] * uni_of[&s];
            let holds = tv_combined <= tv_bound + slack
                && uniform_combined <= uniform_bound + slack;
            DecaySample { s, t, tv_combined, tv_bound, uniform_combined, uniform_bound, holds }
        })
        .collect();
    let all_hold = samples.iter().all(|s| s.holds);
    Ok(MixingDecayReport { samples, all_hold })
}

/// Everything the exact layer knows about one graph: mixing times over a
/// threshold grid, the Green's function at the default horizon, the full
/// hitting matrix, and the stationary law.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// Thresholds the mixing scans covered.
    pub eps_grid: Vec<f64>,
    /// `(ε, t)` pairs for worst-start total variation.
    pub t_mix: Vec<(f64, u64)>,
    /// `(ε, t)` pairs for the uniform distance.
    pub t_mix_uniform: Vec<(f64, u64)>,
    /// Green's function truncated at the uniform mixing time (ε = ¼).
    pub greens: GreensFunction,
    /// Expected hitting times; diagonal holds return times.
    pub hitting: DMatrix<f64>,
    /// Largest off-diagonal hitting entry.
    pub t_hit: f64,
    /// Stationary distribution.
    pub stationary: DVector<f64>,
}

impl SpectralSummary {
    /// Compute the full summary for one graph.
    pub fn compute(g: &GraphTopology) -> Result<Self, OracleError> {
        let times = mixing_times(g, &DEFAULT_EPS_GRID)?;
        let horizon = times
            .uniform_time(DEFAULT_EPSILON)
            .expect("default epsilon is part of the grid");
        let greens = greens_function(g, Some(horizon))?;
        let hitting = expected_hitting_times(g)?;
        let t_hit = max_hitting_time(&hitting);
        let stationary = stationary_vector(g);
        Ok(SpectralSummary {
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            t_mix: times.tv,
            t_mix_uniform: times.uniform,
            greens,
            hitting,
            t_hit,
            stationary,
        })
    }

    /// Mixing time at a grid threshold.
    pub fn t_mix_at(&self, epsilon: f64) -> Option<u64> {
        MixingTimes::lookup(&self.t_mix, epsilon)
    }

    /// Uniform mixing time at a grid threshold.
    pub fn t_mix_uniform_at(&self, epsilon: f64) -> Option<u64> {
        MixingTimes::lookup(&self.t_mix_uniform, epsilon)
    }

    /// Check every structural invariant of the summary against the graph.
    /// Returns a list of human-readable violations; empty means clean.
    pub fn verify(&self, g: &GraphTopology, tol: &Tolerances) -> Vec<String> {
        let mut failures = Vec::new();
        let n = g.vertex_count();
        let p = match transition_matrix(g) {
            Ok(p) => p,
            Err(e) => return vec![format!("kernel unavailable: {e}")],
        };

        // Adjacency symmetry: the exact (rational) form of reversibility.
        for x in 0..n as u32 {
            for &y in g.neighbors(x) {
                if g.neighbors(y).binary_search(&x).is_err() {
                    failures.push(format!("adjacency asymmetric on ({x}, {y})"));
                }
            }
        }

        // Row-stochasticity of the kernel and its square.
        let p2 = &p * &p;
        for (label, m) in [("p", &p), ("p^2", &p2)] {
            for x in 0..n {
                let drift = (m.row(x).iter().sum::<f64>() - 1.0).abs();
                if drift > tol.row_sum_drift {
                    failures.push(format!("row sum of {label} drifts {drift:e} at {x}"));
                }
            }
        }

        // π is left-fixed and matches degree weights.
        let pi_next = p.transpose() * &self.stationary;
        for x in 0..n {
            let residual = (pi_next[x] - self.stationary[x]).abs();
            if residual > tol.stationarity {
                failures.push(format!("stationarity residual {residual:e} at {x}"));
            }
            let exact = g.degree(x as u32) as f64 / g.total_degree() as f64;
            if self.stationary[x] != exact {
                failures.push(format!("stationary entry differs from degree ratio at {x}"));
            }
        }

        // Hitting diagonal is the return time 1/π(x).
        for x in 0..n {
            let gap = (self.hitting[(x, x)] - 1.0 / self.stationary[x]).abs();
            if gap > tol.return_time {
                failures.push(format!("return-time identity off by {gap:e} at {x}"));
            }
        }

        // TV mixing never exceeds uniform mixing at the same threshold.
        for &(eps, t) in &self.t_mix {
            if let Some(tu) = self.t_mix_uniform_at(eps) {
                if t > tu {
                    failures.push(format!("t_mix({eps}) = {t} exceeds uniform {tu}"));
                }
            }
        }

        // Green's rows sum to the horizon.
        for x in 0..n {
            let sum: f64 = self.greens.matrix.row(x).iter().sum();
            let drift = (sum - self.greens.horizon as f64).abs()
                / (self.greens.horizon as f64).max(1.0);
            if drift > tol.greens_row_sum {
                failures.push(format!("greens row {x} sums to {sum}, drift {drift:e}"));
            }
        }

        // Hitting times dominate graph distance.
        for x in 0..n as u32 {
            let dist = g.distances_from(x);
            for y in 0..n {
                if self.hitting[(x as usize, y)] < dist[y] as f64 - 1e-9 {
                    failures.push(format!(
                        "hitting ({x}, {y}) below graph distance {}",
                        dist[y]
                    ));
                }
            }
        }

        failures
    }

    fn format_eps_times(list: &[(f64, u64)]) -> String {
        list.iter()
            .map(|(e, t)| format!("{e}:{t}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn parse_eps_times(text: &str) -> Result<Vec<(f64, u64)>, OracleError> {
        text.split_whitespace()
            .map(|pair| {
                let (e, t) = pair
                    .split_once(':')
                    .ok_or_else(|| OracleError::MalformedCache(format!("bad pair {pair}")))?;
                let e: f64 = e
                    .parse()
                    .map_err(|_| OracleError::MalformedCache(format!("bad epsilon {e}")))?;
                let t: u64 = t
                    .parse()
                    .map_err(|_| OracleError::MalformedCache(format!("bad time {t}")))?;
                Ok((e, t))
            })
            .collect()
    }

    fn write_matrix(path: &Path, m: &DMatrix<f64>) -> std::io::Result<()> {
        let mut out = String::new();
        for x in 0..m.nrows() {
            let row: Vec<String> =
                m.row(x).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        std::fs::write(path, out)
    }

    fn read_matrix(path: &Path) -> Result<DMatrix<f64>, OracleError> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|_| {
                OracleError::MalformedCache(format!("bad matrix row in {}", path.display()))
            })?);
        }
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(OracleError::MalformedCache(format!(
                "ragged matrix in {}",
                path.display()
            )));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |x, y| rows[x][y]))
    }

    /// Write the summary as a key-value header plus CSV matrices under
    /// `dir`, using `stem` as the file-name prefix. Returns the paths.
    pub fn save(
        &self,
        g: &GraphTopology,
        dir: &Path,
        stem: &str,
    ) -> Result<Vec<PathBuf>, OracleError> {
        std::fs::create_dir_all(dir)?;
        let mut header = String::new();
        let _ = writeln!(header, "format = spectral-summary-v1");
        for (k, v) in g.family().to_kv("") {
            let _ = writeln!(header, "{k} = {v}");
        }
        let _ = writeln!(header, "vertices = {}", g.vertex_count());
        let _ = writeln!(header, "horizon = {}", self.greens.horizon);
        let _ = writeln!(header, "t_hit = {:.16e}", self.t_hit);
        let _ = writeln!(
            header,
            "eps_grid = {}",
            self.eps_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
        );
        let _ = writeln!(header, "t_mix = {}", Self::format_eps_times(&self.t_mix));
        let _ = writeln!(
            header,
            "t_mix_uniform = {}",
            Self::format_eps_times(&self.t_mix_uniform)
        );
        let summary_path = dir.join(format!("{stem}.summary"));
        std::fs::write(&summary_path, header)?;

        let stationary_path = dir.join(format!("{stem}.stationary.csv"));
        let mut out = String::new();
        for (i, v) in self.stationary.iter().enumerate() {
            let _ = writeln!(out, "{i},{v:.16e}");
        }
        std::fs::write(&stationary_path, out)?;

        let greens_path = dir.join(format!("{stem}.greens.csv"));
        Self::write_matrix(&greens_path, &self.greens.matrix)?;
        let hitting_path = dir.join(format!("{stem}.hitting.csv"));
        Self::write_matrix(&hitting_path, &self.hitting)?;
        Ok(vec![summary_path, stationary_path, greens_path, hitting_path])
    }

    /// Load a summary previously written by [`SpectralSummary::save`].
    pub fn load(dir: &Path, stem: &str) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(dir.join(format!("{stem}.summary")))?;
        let mut map = std::collections::BTreeMap::new();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        if map.get("format").map(String::as_str) != Some("spectral-summary-v1") {
            return Err(OracleError::MalformedCache("unknown format tag".into()));
        }
        let fetch = |key: &str| {
            map.get(key)
                .cloned()
                .ok_or_else(|| OracleError::MalformedCache(format!("missing key {key}")))
        };
        let horizon: u64 = fetch("horizon")?
            .parse()
            .map_err(|_| OracleError::MalformedCache("bad horizon".into()))?;
        let t_hit: f64 = fetch("t_hit")?
            .parse()
            .map_err(|_| OracleError::MalformedCache("bad t_hit".into()))?;
        let eps_grid: Vec<f64> = fetch("eps_grid")?
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| OracleError::MalformedCache("bad eps grid".into()))?;
        let t_mix = Self::parse_eps_times(&fetch("t_mix")?)?;
        let t_mix_uniform = Self::parse_eps_times(&fetch("t_mix_uniform")?)?;

        let stationary_text =
            std::fs::read_to_string(dir.join(format!("{stem}.stationary.csv")))?;
        let mut stationary_entries = Vec::new();
        for line in stationary_text.lines() {
            let (_, v) = line
                .split_once(',')
                .ok_or_else(|| OracleError::MalformedCache("bad stationary row".into()))?;
            stationary_entries.push(v.trim().parse::<f64>().map_err(|_| {
                OracleError::MalformedCache("bad stationary value".into())
            })?);
        }
        let greens_matrix = Self::read_matrix(&dir.join(format!("{stem}.greens.csv")))?;
        let hitting = Self::read_matrix(&dir.join(format!("{stem}.hitting.csv")))?;
        let vertices: usize = fetch("vertices")?
            .parse()
            .map_err(|_| OracleError::MalformedCache("bad vertex count".into()))?;
        if hitting.nrows() != vertices
            || greens_matrix.nrows() != vertices
            || stationary_entries.len() != vertices
        {
            return Err(OracleError::MalformedCache("dimension mismatch".into()));
        }
        Ok(SpectralSummary {
            eps_grid,
            t_mix,
            t_mix_uniform,
            greens: GreensFunction { matrix: greens_matrix, horizon },
            hitting,
            t_hit,
            stationary: DVector::from_vec(stationary_entries),
        })
    }

    /// Cache stem for a graph: a content hash of its family description.
    pub fn cache_stem(g: &GraphTopology) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in g.family().to_kv("") {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut stem = String::from("summary-");
        for byte in digest.iter().take(8) {
            let _ = write!(stem, "{byte:02x}");
        }
        stem
    }

    /// Load the summary for `g` from `cache_dir` if present, otherwise
    /// compute and store it.
    pub fn cached(g: &GraphTopology, cache_dir: &Path) -> Result<Self, OracleError> {
        let stem = Self::cache_stem(g);
        if cache_dir.join(format!("{stem}.summary")).exists() {
            let loaded = Self::load(cache_dir, &stem)?;
            if loaded.hitting.nrows() != g.vertex_count() {
                return Err(OracleError::MalformedCache(
                    "cached summary does not match the graph".into(),
                ));
            }
            return Ok(loaded);
        }
        let summary = Self::compute(g)?;
        summary.save(g, cache_dir, &stem)?;
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::FamilySpec;
    use approx::assert_relative_eq;

    fn complete(n: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Complete { n }).unwrap()
    }

    fn cycle(n: usize) -> GraphTopology {
        GraphTopology::generate(&FamilySpec::Cycle { n }).unwrap()
    }

    #[test]
    fn edge_graph_kernel_and_fixtures() {
        let g = complete(2);
        let p = transition_matrix(&g).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(p[(x, y)], 0.5);
            }
        }
        assert_eq!(mixing_time(&g, 0.25).unwrap(), 1);
        assert_eq!(mixing_time(&g, 0.5).unwrap(), 0);
        assert_eq!(uniform_mixing_time(&g, 0.25).unwrap(), 1);
        let greens = greens_function(&g, None).unwrap();
        assert_eq!(greens.horizon, 1);
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(greens.matrix[(x, y)], 0.5);
            }
        }
        let hitting = expected_hitting_times(&g).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_relative_eq!(hitting[(x, y)], 2.0, max_relative = 1e-12);
            }
        }
        let bounds = matthews_bounds(&g).unwrap();
        assert_relative_eq!(bounds.upper, 3.0, max_relative = 1e-12);
        assert_relative_eq!(bounds.lower, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn triangle_mixing_and_hitting() {
        let g = complete(3);
        assert_eq!(mixing_time(&g, 0.25).unwrap(), 1);
        assert_eq!(uniform_mixing_time(&g, 0.25).unwrap(), 2);
        assert_relative_eq!(tv_at(&g, 1).unwrap(), 1.0 / 6.0, max_relative = 1e-12);
        let hitting = expected_hitting_times(&g).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let expected = if x == y { 3.0 } else { 4.0 };
                assert_relative_eq!(hitting[(x, y)], expected, max_relative = 1e-10);
            }
        }
        assert_relative_eq!(max_hitting_time(&hitting), 4.0, max_relative = 1e-12);
        assert_relative_eq!(
            stationary_hitting_time(&g, 0).unwrap(),
            8.0 / 3.0,
            max_relative = 1e-10
        );
        let greens = greens_function(&g, None).unwrap();
        assert_eq!(greens.horizon, 2);
        for x in 0..3 {
            let sum: f64 = greens.matrix.row(x).iter().sum();
            assert_relative_eq!(sum, 2.0, max_relative = 1e-12);
        }
        assert_relative_eq!(greens.value(0, 0), 0.875, max_relative = 1e-12);
        assert_relative_eq!(greens.value(0, 1), 0.5625, max_relative = 1e-12);
        let bounds = matthews_bounds(&g).unwrap();
        assert_relative_eq!(bounds.upper, 4.0 * (1.0 + 0.5 + 1.0 / 3.0), max_relative = 1e-12);
        assert_relative_eq!(bounds.lower, 6.0, max_relative = 1e-12);
    }

    #[test]
    fn cycle_hitting_matches_closed_form() {
        let g = cycle(6);
        let h = hitting_times_to_target(&g, 0).unwrap();
        // Lazy walk doubles the classical k(n−k) gambler's-ruin value.
        for (k, expected) in [(1usize, 10.0), (2, 16.0), (3, 18.0), (4, 16.0), (5, 10.0)] {
            assert_relative_eq!(h[k], expected, max_relative = 1e-9);
        }
        assert_relative_eq!(h[0], 6.0, max_relative = 1e-9);
    }

    #[test]
    fn transitive_fast_path_matches_full_scan() {
        // The same 5-cycle as an anonymous edge list loses the transitivity
        // flag, forcing the full-matrix scan; the results must agree.
        let fast = cycle(5);
        let edges: Vec<(u32, u32)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let slow = GraphTopology::from_edges(5, &edges).unwrap();
        assert!(fast.is_vertex_transitive());
        assert!(!slow.is_vertex_transitive());
        for eps in DEFAULT_EPS_GRID {
            assert_eq!(mixing_time(&fast, eps).unwrap(), mixing_time(&slow, eps).unwrap());
            assert_eq!(
                uniform_mixing_time(&fast, eps).unwrap(),
                uniform_mixing_time(&slow, eps).unwrap()
            );
        }
        for t in 0..8 {
            assert_relative_eq!(
                tv_at(&fast, t).unwrap(),
                tv_at(&slow, t).unwrap(),
                max_relative = 1e-12,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn tv_curve_is_nonincreasing() {
        for g in [complete(3), cycle(6)] {
            let curve = tv_curve(&g, 30).unwrap();
            for w in curve.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "tv curve increased: {w:?}");
            }
        }
    }

    #[test]
    fn transience_profile_on_edge_graph() {
        let g = complete(2);
        let profile = transience_profile(&g, 2, 1).unwrap();
        assert_relative_eq!(profile.rho(0, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(profile.rho(1, 1), 0.5, max_relative = 1e-12);
        assert_eq!(profile.rho(2, 1), 0.0);
        assert_relative_eq!(profile.rho(0, 0), 0.5, max_relative = 1e-12);
        for s in 0..=1u32 {
            for r in 0..2u32 {
                assert!(profile.rho(r + 1, s) <= profile.rho(r, s) + 1e-12);
            }
        }
    }

    #[test]
    fn decay_inequalities_hold_on_fixtures() {
        let pairs: Vec<(u64, u64)> = vec![(1, 1), (1, 2), (2, 3), (4, 4)];
        for g in [complete(2), complete(3), cycle(6)] {
            let report = mixing_decay_check(&g, &pairs).unwrap();
            assert!(report.all_hold, "decay failed on {:?}: {:?}", g.family(), report.samples);
        }
    }

    #[test]
    fn summary_verifies_and_round_trips() {
        let g = complete(3);
        let summary = SpectralSummary::compute(&g).unwrap();
        let failures = summary.verify(&g, &STANDARD_TOLERANCES);
        assert!(failures.is_empty(), "{failures:?}");
        assert_eq!(summary.t_mix_at(0.25), Some(1));
        assert_eq!(summary.t_mix_uniform_at(0.25), Some(2));

        let dir = tempfile::tempdir().unwrap();
        let stem = SpectralSummary::cache_stem(&g);
        summary.save(&g, dir.path(), &stem).unwrap();
        let loaded = SpectralSummary::load(dir.path(), &stem).unwrap();
        assert_eq!(loaded.t_mix, summary.t_mix);
        assert_eq!(loaded.greens.horizon, summary.greens.horizon);
        assert_eq!(loaded.t_hit.to_bits(), summary.t_hit.to_bits());
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(
                    loaded.hitting[(x, y)].to_bits(),
                    summary.hitting[(x, y)].to_bits(),
                    "hitting entry ({x},{y}) drifted through the text round-trip"
                );
            }
        }
        // cached() must hit the stored copy, not recompute.
        let cached = SpectralSummary::cached(&g, dir.path()).unwrap();
        assert_eq!(cached.t_mix, summary.t_mix);
    }

    #[test]
    fn oversized_graph_is_refused() {
        // A cycle just above the cap: generation is cheap, matrices are not.
        let g = cycle(DENSE_CAP + 1);
        match transition_matrix(&g) {
            Err(OracleError::CapExceeded { vertices, cap }) => {
                assert_eq!(vertices, DENSE_CAP + 1);
                assert_eq!(cap, DENSE_CAP);
            }
            other => panic!("expected CapExceeded, got {other:?}"),
        }
    }
}
