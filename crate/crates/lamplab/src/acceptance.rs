//! Release acceptance suite.
//!
//! Eleven end-to-end checks covering every layer: Monte Carlo estimators
//! against the exact oracle, closed-form fixtures, cover-time bracketing,
//! late-set geometry, the marking distinguisher, excursion renewal
//! identities, the rate partition, lamplighter chains, the cutoff probe,
//! and record replay.  Each check runs with pinned seeds, so outcomes are
//! reproducible; each returns a [`CriterionOutcome`] with a one-line
//! verdict.  The CLI `--check` flag and the acceptance integration test
//! both drive [`run_all`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::excursions::{self, ExcursionParams};
use crate::experiment::{self, ExperimentConfig, ExperimentKind};
use crate::graphs::{FamilySpec, GraphTopology};
use crate::lamplighter::{self, CutoffConfig};
use crate::latepoints::{self, DistinguisherConfig};
use crate::oracle::{self, SpectralSummary};
use crate::rng::{derive_seed, replica_rng};
use crate::stats::Estimate;
use crate::walker::{self, StartPoint};

/// Replicas behind every shared cover-time reference.
const REF_COVER_REPLICAS: usize = 200;
/// Seed lane for shared cover-time references, common to all criteria so
/// the same graph always gets the same reference.
const REF_COVER_SEED: u64 = 0x7C0F_AB1E;

/// Verdict of one acceptance check.
#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    /// Stable display name, prefixed with the check's position.
    pub name: &'static str,
    pub passed: bool,
    /// Measured values on success, the failed comparisons otherwise.
    pub details: String,
}

impl CriterionOutcome {
    /// The one-line pass/fail form printed by the CLI and the test suite.
    pub fn line(&self) -> String {
        format!(
            "{} {} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

/// Collects sub-check results and formats the final verdict.
struct Verdict {
    name: &'static str,
    problems: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn new(name: &'static str) -> Self {
        Self { name, problems: Vec::new(), notes: Vec::new() }
    }

    /// Record one comparison: keep the summary either way, remember it as
    /// a failure when the condition does not hold.
    fn check(&mut self, ok: bool, summary: String) {
        if ok {
            self.notes.push(summary);
        } else {
            self.problems.push(summary);
        }
    }

    fn finish(self) -> CriterionOutcome {
        let passed = self.problems.is_empty();
        let details = if passed {
            self.notes.join("; ")
        } else if self.notes.is_empty() {
            self.problems.join("; ")
        } else {
            // Keep the passing measurements visible so a failure line
            // still tells the whole story.
            format!("{} [ok: {}]", self.problems.join("; "), self.notes.join("; "))
        };
        CriterionOutcome { name: self.name, passed, details }
    }
}

fn generate(spec: &FamilySpec) -> GraphTopology {
    GraphTopology::generate(spec).expect("acceptance graph families are valid")
}

/// Shared cover-time reference for a graph, identical across criteria.
fn cover_reference(g: &GraphTopology) -> Estimate {
    walker::estimate_cover_time(g, REF_COVER_REPLICAS, REF_COVER_SEED)
        .expect("cover reference walks stay within the safety horizon")
}

/// Six deterministic ordered vertex pairs spread over a graph of `n`
/// vertices (fewer when collisions collapse them).
fn representative_pairs(n: usize) -> Vec<(u32, u32)> {
    let m = n as u32;
    let raw = [
        (0, 1),
        (0, m / 2),
        (1, m - 1),
        (2 % m, 2 * m / 3),
        (m - 1, 0),
        (m / 3, m - 2),
    ];
    let mut out = Vec::new();
    for (x, y) in raw {
        let pair = (x % m, y % m);
        if pair.0 != pair.1 && !out.contains(&pair) {
            out.push(pair);
        }
    }
    out
}

/// Monte Carlo occupation of `y` during steps `1..=horizon` of walks from
/// `x`: the sampled counterpart of the truncated Green's function.
fn occupation_estimate(
    g: &GraphTopology,
    x: u32,
    y: u32,
    horizon: u64,
    replicas: usize,
    seed: u64,
) -> Estimate {
    let samples: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(seed, rep);
            let mut v = x;
            let mut count = 0u64;
            for _ in 0..horizon {
                v = walker::step(g, v, &mut rng);
                if v == y {
                    count += 1;
                }
            }
            count as f64
        })
        .collect();
    Estimate::from_values(&samples)
}

/// Check 1: sampled hitting times and occupation counts agree with the
/// exact oracle within three standard errors on three small graphs.
pub fn oracle_agreement() -> CriterionOutcome {
    let mut v = Verdict::new("01 monte carlo matches the exact oracle");
    let seed = 0xACCE_0001u64;
    let specs = [
        FamilySpec::Complete { n: 5 },
        FamilySpec::Cycle { n: 6 },
        FamilySpec::Torus { dim: 2, side: 4 },
    ];
    for (gi, spec) in specs.iter().enumerate() {
        let g = generate(spec);
        let summary = SpectralSummary::compute(&g).expect("oracle fits these graphs");
        let pairs = representative_pairs(g.vertex_count());
        let mut worst_hit = 0.0f64;
        let mut worst_occ = 0.0f64;
        for (pi, &(x, y)) in pairs.iter().enumerate() {
            let lane = derive_seed(seed, (gi * 100 + pi) as u64);
            let mc = walker::estimate_hitting_time(
                &g,
                StartPoint::Vertex(x),
                y,
                10_000,
                derive_seed(lane, 0),
            )
            .expect("hitting walks stay within the safety horizon");
            let exact = summary.hitting[(x as usize, y as usize)];
            worst_hit = worst_hit.max(mc.sigma_distance(exact));

            let occ = occupation_estimate(
                &g,
                x,
                y,
                summary.greens.horizon,
                10_000,
                derive_seed(lane, 1),
            );
            let exact_occ = summary.greens.matrix[(x as usize, y as usize)];
            worst_occ = worst_occ.max(occ.sigma_distance(exact_occ));
        }
        v.check(
            worst_hit <= 3.0,
            format!("{spec} hitting worst {worst_hit:.2}σ"),
        );
        v.check(
            worst_occ <= 3.0,
            format!("{spec} occupation worst {worst_occ:.2}σ"),
        );
    }
    v.finish()
}

/// Check 2: closed-form fixtures — triangle hitting time 4 (exact and
/// within 2% by sampling), edge cover time 2 within 2%, and one-step
/// quarter-mixing on the edge and the triangle.
pub fn closed_form_fixtures() -> CriterionOutcome {
    let mut v = Verdict::new("02 closed-form fixtures");
    let seed = 0xACCE_0002u64;
    let k3 = generate(&FamilySpec::Complete { n: 3 });
    let k2 = generate(&FamilySpec::Complete { n: 2 });

    let hitting = oracle::expected_hitting_times(&k3).expect("triangle is tiny");
    let exact = hitting[(0, 1)];
    v.check((exact - 4.0).abs() <= 1e-9, format!("triangle exact hit {exact:.12}"));

    let mc = walker::estimate_hitting_time(&k3, StartPoint::Vertex(0), 1, 100_000, seed)
        .expect("triangle walks finish");
    let rel = (mc.mean - 4.0).abs() / 4.0;
    v.check(rel <= 0.02, format!("triangle sampled hit {:.4} ({:+.2}%)", mc.mean, rel * 100.0));

    let cover = walker::estimate_cover_time(&k2, 100_000, derive_seed(seed, 1))
        .expect("edge walks finish");
    let rel = (cover.mean - 2.0).abs() / 2.0;
    v.check(rel <= 0.02, format!("edge cover {:.4} ({:+.2}%)", cover.mean, rel * 100.0));

    let t_k2 = oracle::mixing_time(&k2, 0.25).expect("edge mixing scan");
    v.check(t_k2 == 1, format!("edge quarter-mixing {t_k2}"));
    let t_k3 = oracle::mixing_time(&k3, 0.25).expect("triangle mixing scan");
    v.check(t_k3 == 1, format!("triangle quarter-mixing {t_k3}"));
    v.finish()
}

/// Check 3: sampled cover times are consistent with the exact
/// lower/upper bracket on six families (three-sigma interval overlap, so
/// the tight equality case on the complete graph is judged fairly).
pub fn cover_bracketing() -> CriterionOutcome {
    let mut v = Verdict::new("03 cover times sit in the exact bracket");
    let seed = 0xACCE_0003u64;
    let specs = [
        FamilySpec::Complete { n: 5 },
        FamilySpec::Cycle { n: 20 },
        FamilySpec::Torus { dim: 2, side: 6 },
        FamilySpec::Torus { dim: 3, side: 6 },
        FamilySpec::Hypercube { dim: 6 },
        FamilySpec::RandomRegular { degree: 3, n: 50, seed: 1 },
    ];
    for (gi, spec) in specs.iter().enumerate() {
        let g = generate(spec);
        let bounds = oracle::matthews_bounds(&g).expect("bounds fit these graphs");
        let mc = walker::estimate_cover_time(&g, 1_500, derive_seed(seed, gi as u64))
            .expect("cover walks finish");
        let lo = mc.mean - 3.0 * mc.stderr;
        let hi = mc.mean + 3.0 * mc.stderr;
        let ok = hi >= bounds.lower && lo <= bounds.upper;
        v.check(
            ok,
            format!(
                "{spec} cover {:.1}±{:.1} vs [{:.1}, {:.1}]",
                mc.mean, mc.stderr, bounds.lower, bounds.upper
            ),
        );
    }
    v.finish()
}

/// Check 4: on the 8³ torus the late-set size exponent tracks `1 − α`
/// within 0.15 at three time fractions.
pub fn late_set_exponents() -> CriterionOutcome {
    let mut v = Verdict::new("04 late-set size exponents");
    let seed = 0xACCE_0004u64;
    let g = generate(&FamilySpec::Torus { dim: 3, side: 8 });
    let t_cov = cover_reference(&g).mean;
    let log_n = (g.vertex_count() as f64).ln();
    for (i, alpha) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let size = latepoints::mean_late_size(&g, alpha, t_cov, 500, derive_seed(seed, i as u64));
        let exponent = size.mean.ln() / log_n;
        let gap = (exponent - (1.0 - alpha)).abs();
        v.check(
            gap <= 0.15,
            format!("α={alpha} size {:.1} exponent {exponent:.3} (target {:.2})", size.mean, 1.0 - alpha),
        );
    }
    v.finish()
}

/// Check 5: on the 8³ torus the zero-count test rejects early range
/// markings at rate ≥ 0.9, the pair moment bounds late markings below
/// total variation 0.3, and uniform markings are essentially never
/// rejected.
pub fn distinguisher_power() -> CriterionOutcome {
    let mut v = Verdict::new("05 marking distinguisher power");
    let seed = 0xACCE_0005u64;
    let g = generate(&FamilySpec::Torus { dim: 3, side: 8 });
    let t_cov = cover_reference(&g).mean;
    let config = DistinguisherConfig {
        replicas: 1_000,
        pairs: 2_000,
        seed,
        ..DistinguisherConfig::default()
    };

    let power = latepoints::power_grid(&g, &[0.3], t_cov, &config);
    let rejection = power.rows[0].1.mean;
    v.check(
        rejection >= 0.9,
        format!("rejection@0.3 {:.3} (mean z {:.2})", rejection, power.mean_z[0].mean),
    );

    let moment = latepoints::exp_moment_estimate(&g, 0.9, t_cov, &config);
    v.check(
        moment.tv_upper <= 0.3 && moment.overflow_count == 0,
        format!("tv_upper@0.9 {:.3} (m̂ {:.3})", moment.tv_upper, moment.m_hat.mean),
    );

    let false_rejection = latepoints::uniform_false_rejection(&g, &config);
    v.check(
        false_rejection.mean <= 0.01,
        format!("uniform false rejection {:.4}", false_rejection.mean),
    );
    v.finish()
}

/// Check 6: on the 10³ torus, lateness of an antipodal vertex pair is
/// within a factor two of independent, and each marginal matches the
/// `|V|^{−α}` scale within `e^{±0.7}`.
pub fn late_pair_correlation() -> CriterionOutcome {
    let mut v = Verdict::new("06 distant late pairs decorrelate");
    let seed = 0xACCE_0006u64;
    let g = generate(&FamilySpec::Torus { dim: 3, side: 10 });
    let alpha = 0.5;
    let t_cov = cover_reference(&g).mean;

    let dist = g.distances_from(0);
    let far = dist
        .iter()
        .enumerate()
        .max_by_key(|&(_, d)| *d)
        .map(|(i, _)| i as u32)
        .expect("nonempty graph");
    let separation = dist[far as usize];
    assert!(separation >= 5, "antipodal pair must be well separated");

    let report = latepoints::correlation_ratio(&g, alpha, t_cov, &[0, far], 30_000, seed);
    match report.ratio {
        Some(ratio) => v.check(
            (0.5..=2.0).contains(&ratio),
            format!(
                "pair (0, {far}) at distance {separation}: ratio {ratio:.3} ({} joint events)",
                report.joint_count
            ),
        ),
        None => v.check(
            false,
            format!("only {} joint late events; ratio withheld", report.joint_count),
        ),
    }
    let n_alpha = (g.vertex_count() as f64).powf(alpha);
    for (i, &p) in report.p_singles.iter().enumerate() {
        let log_scaled = (p * n_alpha).ln();
        v.check(
            log_scaled.abs() <= 0.7,
            format!("marginal {i} log-scale {log_scaled:+.3}"),
        );
    }
    v.finish()
}

/// Check 7: on the 10³ torus the excursion decomposition reproduces
/// stationary occupation, predicts the exact stationary hitting time, and
/// counts excursions at the renewal rate.
pub fn excursion_identities() -> CriterionOutcome {
    let mut v = Verdict::new("07 excursion renewal identities");
    let seed = 0xACCE_0007u64;
    let g = generate(&FamilySpec::Torus { dim: 3, side: 10 });
    let params = ExcursionParams::default();
    let resolved = params.resolve(&g).expect("default radii fit this torus");
    let pinned = params.with_mixing_time(resolved.t_mix_uniform);

    let prediction = excursions::hitting_prediction(&g, 0, &pinned, 20_000, seed)
        .expect("excursion sampling succeeds");
    let ratio = prediction.ratio.expect("graph is small enough for the exact answer");
    v.check(
        (0.8..=1.2).contains(&ratio),
        format!(
            "hitting prediction {:.1} vs exact {:.1} (ratio {ratio:.3})",
            prediction.predicted,
            prediction.exact.unwrap(),
        ),
    );

    let cycle = prediction.cycle_length.mean;
    let occupation_steps = (1_000.0 * cycle).ceil() as u64;
    let occupation = excursions::occupation_ratio(&g, 0, &pinned, occupation_steps, seed)
        .expect("occupation run completes");
    v.check(
        (0.85..=1.15).contains(&occupation.ratio),
        format!(
            "occupation ratio {:.3} over {} excursions",
            occupation.ratio, occupation.excursions
        ),
    );

    let count_steps = (400.0 * cycle).ceil() as u64;
    let count = excursions::excursion_count(&g, &[0], &pinned, count_steps, seed)
        .expect("count run completes");
    let renewal = count as f64 * cycle / count_steps as f64;
    v.check(
        (0.75..=1.25).contains(&renewal),
        format!("{count} excursions in {count_steps} steps: renewal ratio {renewal:.3}"),
    );
    v.finish()
}

/// Check 8: the rate partition of the 8³ torus has exactly one class (the
/// graph is vertex-transitive) and its cover bound lands within a factor
/// two of the sampled cover time.
pub fn partition_cover_bound() -> CriterionOutcome {
    let mut v = Verdict::new("08 rate-partition cover bound");
    let seed = 0xACCE_0008u64;
    let g = generate(&FamilySpec::Torus { dim: 3, side: 8 });
    let params = ExcursionParams::default();
    let resolved = params.resolve(&g).expect("default radii fit this torus");
    let pinned = params.with_mixing_time(resolved.t_mix_uniform);

    let report = excursions::cover_time_partition(&g, 0.01, &pinned, 4_000, seed)
        .expect("partition sampling succeeds");
    v.check(
        report.members.len() == 1 && !report.degenerate_zero_class,
        format!("{} nonempty class(es)", report.members.len()),
    );
    let total: usize = report.class_sizes.values().sum();
    v.check(
        total == g.vertex_count(),
        format!("class sizes cover {total} of {} vertices", g.vertex_count()),
    );

    let t_cov = cover_reference(&g).mean;
    let ratio = report.cover_bound / t_cov;
    v.check(
        (0.5..=2.0).contains(&ratio),
        format!("bound {:.0} vs cover {:.0} (ratio {ratio:.3})", report.cover_bound, t_cov),
    );
    v.finish()
}

/// Two-sample sigma distance between proportions measured with `m`
/// replicas each.
fn proportion_sigma(p1: f64, p2: f64, m: f64) -> f64 {
    let var = (p1 * (1.0 - p1) + p2 * (1.0 - p2)) / m;
    if var == 0.0 {
        if p1 == p2 { 0.0 } else { f64::INFINITY }
    } else {
        (p1 - p2).abs() / var.sqrt()
    }
}

/// Per-vertex and per-pair hit frequencies of a boolean-vector sampler.
fn bit_frequencies(
    replicas: u64,
    n: usize,
    pairs: &[(usize, usize)],
    sample: impl Fn(u64) -> Vec<bool> + Sync,
) -> (Vec<f64>, Vec<f64>) {
    let zero = || (vec![0u64; n], vec![0u64; pairs.len()]);
    let (vertex_counts, pair_counts) = (0..replicas)
        .into_par_iter()
        .fold(zero, |mut acc, rep| {
            let bits = sample(rep);
            for (i, &b) in bits.iter().enumerate() {
                if b {
                    acc.0[i] += 1;
                }
            }
            for (j, &(a, b)) in pairs.iter().enumerate() {
                if bits[a] && bits[b] {
                    acc.1[j] += 1;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.0.iter_mut().zip(b.0) {
                *x += y;
            }
            for (x, y) in a.1.iter_mut().zip(b.1) {
                *x += y;
            }
            a
        });
    let m = replicas as f64;
    (
        vertex_counts.into_iter().map(|c| c as f64 / m).collect(),
        pair_counts.into_iter().map(|c| c as f64 / m).collect(),
    )
}

/// Check 9: the lamp chain's exact 24-state distance curve on the
/// triangle is nonincreasing, sampling tracks it within 0.05 everywhere
/// up to step 20, and on a 5×5 torus the sampled lamp pattern agrees with
/// the coin-marked walk range bitwise and pairwise within three sigma.
pub fn lamplighter_exactness() -> CriterionOutcome {
    let mut v = Verdict::new("09 lamp chain exact and sampled laws");
    let seed = 0xACCE_0009u64;
    let k3 = generate(&FamilySpec::Complete { n: 3 });
    let horizon = 20u64;

    let exact = lamplighter::exact_tv_curve(&k3, horizon).expect("24 states fit exactly");
    let monotone = exact.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    v.check(
        monotone,
        format!("exact curve {:.3} → {:.4}, nonincreasing {monotone}", exact[0], exact[horizon as usize]),
    );

    let empirical = lamplighter::empirical_tv_curve(&k3, 0, horizon, 100_000, seed)
        .expect("24 states fit exactly");
    let worst_gap = exact
        .iter()
        .zip(&empirical)
        .map(|(e, s)| (e - s).abs())
        .fold(0.0f64, f64::max);
    v.check(worst_gap <= 0.05, format!("sampled curve worst gap {worst_gap:.4}"));

    let g = generate(&FamilySpec::Torus { dim: 2, side: 5 });
    let n = g.vertex_count();
    let t_cov = cover_reference(&g).mean;
    let steps = latepoints::steps_for_fraction(0.5, t_cov);
    let pairs = [(0, 1), (0, 12), (3, 17), (5, 20), (8, 24), (10, 15)];
    let replicas = 60_000u64;

    let chain_lane = derive_seed(seed, 1);
    let (chain_bits, chain_pairs) = bit_frequencies(replicas, n, &pairs, |rep| {
        let mut rng = replica_rng(chain_lane, rep);
        lamplighter::sample_lamp_marginal(&g, steps, &mut rng)
    });
    let marking_lane = derive_seed(seed, 2);
    let (marking_bits, marking_pairs) = bit_frequencies(replicas, n, &pairs, |rep| {
        let mut rng = replica_rng(marking_lane, rep);
        latepoints::sample_marking_mu(&g, 0.5, t_cov, &mut rng).bits
    });

    let m = replicas as f64;
    let worst_bit = (0..n)
        .map(|x| proportion_sigma(chain_bits[x], marking_bits[x], m))
        .fold(0.0f64, f64::max);
    v.check(worst_bit <= 3.0, format!("lamp marginal worst vertex {worst_bit:.2}σ"));
    let worst_pair = (0..pairs.len())
        .map(|j| proportion_sigma(chain_pairs[j], marking_pairs[j], m))
        .fold(0.0f64, f64::max);
    v.check(worst_pair <= 3.0, format!("lamp pair worst {worst_pair:.2}σ"));
    v.finish()
}

/// Check 10: the cutoff probe on the 8³ torus separates the two sides —
/// lower bound ≥ 0.9 early, upper bound ≤ 0.3 late, with the bracketed
/// crossing inside the expected window.
pub fn lamp_cutoff_probe() -> CriterionOutcome {
    let mut v = Verdict::new("10 lamp marginal cutoff bracket");
    let seed = 0xACCE_000Au64;
    let g = generate(&FamilySpec::Torus { dim: 3, side: 8 });
    let t_cov = cover_reference(&g).mean;
    let alphas = [0.2, 0.35, 0.5, 0.65, 0.75, 0.9, 1.1];
    let config = CutoffConfig { seed, ..CutoffConfig::default() };
    let report = lamplighter::cutoff_probe(&g, &alphas, t_cov, &config)
        .expect("probe grid is valid");

    let row_at = |alpha: f64| {
        report
            .rows
            .iter()
            .find(|r| (r.alpha - alpha).abs() < 1e-12)
            .expect("grid contains the probe point")
    };
    let early = row_at(0.35);
    v.check(early.tv_lower >= 0.9, format!("tv_lower@0.35 {:.3}", early.tv_lower));
    let late = row_at(0.9);
    v.check(late.tv_upper <= 0.3, format!("tv_upper@0.9 {:.3}", late.tv_upper));
    match report.crossing {
        Some(c) => v.check(
            (0.35..=0.75).contains(&c),
            format!(
                "crossing {c:.3} (lower {:.3}, upper {:.3})",
                report.lower_crossing.unwrap_or(f64::NAN),
                report.upper_crossing.unwrap_or(f64::NAN)
            ),
        ),
        None => v.check(false, "no crossing bracketed on the grid".to_string()),
    }
    v.finish()
}

/// Small experiment configs covering every subcommand, used by the replay
/// check.
fn replay_configs() -> Vec<ExperimentConfig> {
    let p = |entries: &[(&str, &str)]| -> BTreeMap<String, String> {
        entries.iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect()
    };
    vec![
        ExperimentConfig {
            experiment: ExperimentKind::Gen,
            seed: 41,
            out: None,
            threads: 0,
            graph: FamilySpec::Cycle { n: 9 },
            params: BTreeMap::new(),
        },
        ExperimentConfig {
            experiment: ExperimentKind::Cover,
            seed: 42,
            out: None,
            threads: 0,
            graph: FamilySpec::Complete { n: 4 },
            params: p(&[("replicas", "64")]),
        },
        ExperimentConfig {
            experiment: ExperimentKind::Late,
            seed: 43,
            out: None,
            threads: 0,
            graph: FamilySpec::Complete { n: 8 },
            params: p(&[("alphas", "0.4,0.9"), ("replicas", "128"), ("cover_replicas", "64")]),
        },
        ExperimentConfig {
            experiment: ExperimentKind::Distinguish,
            seed: 44,
            out: None,
            threads: 0,
            graph: FamilySpec::Complete { n: 8 },
            params: p(&[
                ("alphas", "0.5"),
                ("replicas", "128"),
                ("pairs", "64"),
                ("cover_replicas", "64"),
            ]),
        },
        ExperimentConfig {
            experiment: ExperimentKind::Excursion,
            seed: 45,
            out: None,
            threads: 0,
            graph: FamilySpec::Torus { dim: 2, side: 5 },
            params: p(&[("replicas", "512")]),
        },
        ExperimentConfig {
            experiment: ExperimentKind::Lamplighter,
            seed: 46,
            out: None,
            threads: 0,
            graph: FamilySpec::Complete { n: 8 },
            params: p(&[
                ("alphas", "0.4,0.8,1.2,1.8,2.6"),
                ("replicas_per_side", "256"),
                ("pairs", "64"),
                ("cover_replicas", "64"),
            ]),
        },
        ExperimentConfig {
            experiment: ExperimentKind::Oracle,
            seed: 47,
            out: None,
            threads: 0,
            graph: FamilySpec::Complete { n: 5 },
            params: BTreeMap::new(),
        },
    ]
}

/// Check 11: every experiment's record replays bit-exactly — fresh runs
/// reproduce identical values, and records round-tripped through disk
/// still verify.
pub fn record_replay() -> CriterionOutcome {
    let mut v = Verdict::new("11 record replay is bit-exact");
    let scratch = std::env::temp_dir().join(format!(
        "lamplab-acceptance-{}-{:x}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));

    for base in replay_configs() {
        let name = base.experiment.name();
        let out_dir: PathBuf = scratch.join(name);
        let config = ExperimentConfig { out: Some(out_dir.clone()), ..base.clone() };
        let record = match experiment::run(&config) {
            Ok(r) => r,
            Err(e) => {
                v.check(false, format!("{name}: run failed: {e}"));
                continue;
            }
        };

        let rerun = experiment::run(&base).expect("dry rerun of a completed experiment");
        let identical = record.values.len() == rerun.values.len()
            && record
                .values
                .iter()
                .zip(&rerun.values)
                .all(|(a, b)| a.name == b.name && a.value.to_bits() == b.value.to_bits());
        v.check(identical, format!("{name}: rerun identical {identical}"));

        match experiment::replay_path(&out_dir.join("record.json")) {
            Ok(_) => v.check(true, format!("{name}: replay ok ({} values)", record.values.len())),
            Err(e) => v.check(false, format!("{name}: replay failed: {e}")),
        }
    }
    let _ = std::fs::remove_dir_all(&scratch);
    v.finish()
}

/// Every acceptance check, in suite order.
pub const CRITERIA: [fn() -> CriterionOutcome; 11] = [
    oracle_agreement,
    closed_form_fixtures,
    cover_bracketing,
    late_set_exponents,
    distinguisher_power,
    late_pair_correlation,
    excursion_identities,
    partition_cover_bound,
    lamplighter_exactness,
    lamp_cutoff_probe,
    record_replay,
];

/// Run the full suite in order and return every verdict.
pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|check| check()).collect()
}

/// Render the suite report: one line per check plus a final tally.
pub fn report(outcomes: &[CriterionOutcome]) -> String {
    let mut text = String::new();
    for outcome in outcomes {
        let _ = writeln!(text, "{}", outcome.line());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(text, "{passed}/{} checks passed", outcomes.len());
    text
}
