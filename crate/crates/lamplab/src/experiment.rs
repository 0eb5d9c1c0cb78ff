//! Reproducible experiment harness.
//!
//! A TOML config names one experiment (`gen`, `cover`, `late`,
//! `distinguish`, `excursion`, `lamplighter`, or `oracle`), the graph it
//! runs on, a master seed, and per-experiment parameters.  Running an
//! experiment produces an [`ExperimentRecord`] — a JSON snapshot of the
//! config, every estimate, and the artifact files written — and replaying
//! a record recomputes every estimate and verifies bit-for-bit equality
//! within one build.  All replayed numbers are written with 17 significant
//! digits so the text artifacts themselves are replay-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::excursions::{self, ExcursionError, ExcursionParams};
use crate::graphs::{FamilySpec, GraphError, GraphTopology};
use crate::lamplighter::{self, CutoffConfig, LamplighterError};
use crate::latepoints::{self, DistinguisherConfig};
use crate::oracle::{self, OracleError, SpectralSummary};
use crate::rng::derive_seed;
use crate::stats::Estimate;
use crate::walker::{self, WalkConfig, WalkError};

/// Version tag stamped into every record; replay requires an exact match.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed lane for the cover-time reference estimate shared by experiments
/// that need one.
const SALT_COVER_REF: u64 = 0x434F_5652;
/// Seed lane for per-alpha late-set size estimates.
const SALT_LATE_SIZE: u64 = 0x4C53_495A;

/// Errors from configuration, execution, and replay.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    /// The config (or a record used as one) is malformed; the message
    /// names the offending field.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Excursion(#[from] ExcursionError),
    #[error(transparent)]
    Lamplighter(#[from] LamplighterError),
    /// The exact oracle's internal cross-checks failed.
    #[error("oracle self-check failed: {0}")]
    SelfCheck(String),
    /// Replay recomputed a value that differs from the record.
    #[error("replay drift at `{field}`: {detail}")]
    DriftDetected { field: String, detail: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("record serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// The experiments the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Gen,
    Cover,
    Late,
    Distinguish,
    Excursion,
    Lamplighter,
    Oracle,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Gen,
        ExperimentKind::Cover,
        ExperimentKind::Late,
        ExperimentKind::Distinguish,
        ExperimentKind::Excursion,
        ExperimentKind::Lamplighter,
        ExperimentKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Gen => "gen",
            ExperimentKind::Cover => "cover",
            ExperimentKind::Late => "late",
            ExperimentKind::Distinguish => "distinguish",
            ExperimentKind::Excursion => "excursion",
            ExperimentKind::Lamplighter => "lamplighter",
            ExperimentKind::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Option<ExperimentKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// A parsed, validated experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Output directory for artifacts and the record; `None` runs dry.
    pub out: Option<PathBuf>,
    /// Worker threads; `0` leaves the global pool at its default.
    pub threads: usize,
    pub graph: FamilySpec,
    /// Experiment-specific parameters as canonical strings.
    pub params: BTreeMap<String, String>,
}

fn bad(field: &str, message: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::ConfigInvalid(format!("{field}: {message}"))
}

/// Render a TOML value as the canonical parameter string: scalars via
/// their natural text form, arrays as comma-joined scalars.
fn value_to_param(field: &str, value: &toml::Value) -> Result<String, ExperimentError> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(format!("{f}")),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => {
            let parts: Result<Vec<String>, _> = items
                .iter()
                .map(|item| match item {
                    toml::Value::Array(_) | toml::Value::Table(_) => {
                        Err(bad(field, "arrays must hold scalars"))
                    }
                    other => value_to_param(field, other),
                })
                .collect();
            Ok(parts?.join(","))
        }
        toml::Value::Table(_) => Err(bad(field, "nested tables are not allowed here")),
        toml::Value::Datetime(_) => Err(bad(field, "datetimes are not supported")),
    }
}

fn table_to_params(
    section: &str,
    table: &toml::Table,
) -> Result<BTreeMap<String, String>, ExperimentError> {
    let mut out = BTreeMap::new();
    for (k, v) in table {
        let field = format!("[{section}].{k}");
        out.insert(k.clone(), value_to_param(&field, v)?);
    }
    Ok(out)
}

/// Parse a TOML experiment config.
///
/// Expected shape: top-level `experiment`, optional `seed` / `out` /
/// `threads`, a `[graph]` section understood by the graph family codec,
/// and at most one parameter section named after the experiment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExperimentError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| ExperimentError::ConfigInvalid(format!("TOML parse error: {e}")))?;

    let experiment_name = table
        .get("experiment")
        .ok_or_else(|| bad("experiment", "missing required key"))?
        .as_str()
        .ok_or_else(|| bad("experiment", "must be a string"))?;
    let experiment = ExperimentKind::parse(experiment_name).ok_or_else(|| {
        bad(
            "experiment",
            format!(
                "unknown experiment `{experiment_name}` (expected one of {})",
                ExperimentKind::ALL.map(|k| k.name()).join(", ")
            ),
        )
    })?;

    let seed = match table.get("seed") {
        None => 0,
        Some(v) => {
            let i = v.as_integer().ok_or_else(|| bad("seed", "must be an integer"))?;
            u64::try_from(i).map_err(|_| bad("seed", "must be nonnegative"))?
        }
    };
    let out = match table.get("out") {
        None => None,
        Some(v) => Some(PathBuf::from(
            v.as_str().ok_or_else(|| bad("out", "must be a path string"))?,
        )),
    };
    let threads = match table.get("threads") {
        None => 0,
        Some(v) => {
            let i = v.as_integer().ok_or_else(|| bad("threads", "must be an integer"))?;
            usize::try_from(i).map_err(|_| bad("threads", "must be nonnegative"))?
        }
    };

    let graph_table = table
        .get("graph")
        .ok_or_else(|| bad("[graph]", "missing required section"))?
        .as_table()
        .ok_or_else(|| bad("[graph]", "must be a table"))?;
    let graph_kv = table_to_params("graph", graph_table)?;
    let graph = FamilySpec::from_kv(&graph_kv, "")
        .map_err(|e| bad("[graph]", e))?;

    let params = match table.get(experiment.name()) {
        None => BTreeMap::new(),
        Some(v) => {
            let section = v
                .as_table()
                .ok_or_else(|| bad(experiment.name(), "must be a table"))?;
            table_to_params(experiment.name(), section)?
        }
    };

    for key in table.keys() {
        let known = matches!(key.as_str(), "experiment" | "seed" | "out" | "threads" | "graph")
            || key == experiment.name();
        if !known {
            return Err(bad(key, "unknown top-level key or section"));
        }
    }

    Ok(ExperimentConfig {
        experiment,
        seed,
        out,
        threads,
        graph,
        params,
    })
}

/// Serialize a config back to TOML.  Parameter values are emitted as
/// strings, which [`parse_config`] accepts, so parse ∘ serialize ∘ parse
/// is the identity on configs.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "experiment = \"{}\"", config.experiment.name());
    let _ = writeln!(text, "seed = {}", config.seed);
    let _ = writeln!(text, "threads = {}", config.threads);
    if let Some(out) = &config.out {
        let _ = writeln!(text, "out = \"{}\"", out.display());
    }
    let _ = writeln!(text, "\n[graph]");
    for (k, v) in config.graph.to_kv("") {
        let _ = writeln!(text, "{k} = \"{v}\"");
    }
    if !config.params.is_empty() {
        let _ = writeln!(text, "\n[{}]", config.experiment.name());
        for (k, v) in &config.params {
            let _ = writeln!(text, "{k} = \"{v}\"");
        }
    }
    text
}

/// One named estimate in a record.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValueEntry {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
}

impl ValueEntry {
    fn exact(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, stderr: None }
    }

    fn estimate(name: impl Into<String>, e: &Estimate) -> Self {
        Self { name: name.into(), value: e.mean, stderr: Some(e.stderr) }
    }
}

/// Snapshot of one experiment run: config, estimates, artifacts, timing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub tool_version: String,
    pub experiment: String,
    pub seed: u64,
    pub threads: usize,
    /// Graph family as flat key-value pairs.
    pub graph: BTreeMap<String, String>,
    /// Experiment parameters as canonical strings.
    pub params: BTreeMap<String, String>,
    /// Cover-time reference used to convert time fractions to steps, when
    /// the experiment needed one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_cov_ref: Option<ValueEntry>,
    pub values: Vec<ValueEntry>,
    /// File names written next to the record, relative to its directory.
    pub artifacts: Vec<String>,
    pub wall_ms: u64,
}

impl ExperimentRecord {
    pub fn save(&self, path: &Path) -> Result<(), ExperimentError> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// One plain-text line per estimate, for terminal summaries.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        if let Some(t) = &self.t_cov_ref {
            lines.push(format_value_line(t));
        }
        lines.extend(self.values.iter().map(format_value_line));
        lines
    }
}

fn format_value_line(v: &ValueEntry) -> String {
    match v.stderr {
        Some(se) => format!("{} = {:.6} ± {:.6}", v.name, v.value, se),
        None => format!("{} = {:.6}", v.name, v.value),
    }
}

/// Fixed-format float for CSV artifacts: 17 significant digits, enough to
/// round-trip any f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Outcome {
    t_cov_ref: Option<ValueEntry>,
    values: Vec<ValueEntry>,
    artifacts: Vec<String>,
}

fn write_artifact(
    out: Option<&Path>,
    artifacts: &mut Vec<String>,
    name: &str,
    contents: &str,
) -> Result<(), ExperimentError> {
    if let Some(dir) = out {
        fs::write(dir.join(name), contents)?;
        artifacts.push(name.to_string());
    }
    Ok(())
}

// ---- typed parameter access -------------------------------------------------

fn param_u64(
    params: &BTreeMap<String, String>,
    section: &str,
    key: &str,
    default: u64,
) -> Result<u64, ExperimentError> {
    match params.get(key) {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| bad(&format!("[{section}].{key}"), format!("`{s}` is not an integer"))),
    }
}

fn param_usize(
    params: &BTreeMap<String, String>,
    section: &str,
    key: &str,
    default: usize,
) -> Result<usize, ExperimentError> {
    Ok(param_u64(params, section, key, default as u64)? as usize)
}

fn param_u32(
    params: &BTreeMap<String, String>,
    section: &str,
    key: &str,
    default: u32,
) -> Result<u32, ExperimentError> {
    param_u64(params, section, key, default as u64)?
        .try_into()
        .map_err(|_| bad(&format!("[{section}].{key}"), "out of range"))
}

fn param_f64(
    params: &BTreeMap<String, String>,
    section: &str,
    key: &str,
    default: f64,
) -> Result<f64, ExperimentError> {
    match params.get(key) {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| bad(&format!("[{section}].{key}"), format!("`{s}` is not a number"))),
    }
}

fn param_bool(
    params: &BTreeMap<String, String>,
    section: &str,
    key: &str,
    default: bool,
) -> Result<bool, ExperimentError> {
    match params.get(key) {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| bad(&format!("[{section}].{key}"), format!("`{s}` is not a boolean"))),
    }
}

fn param_f64_list(
    params: &BTreeMap<String, String>,
    section: &str,
    key: &str,
    default: &[f64],
) -> Result<Vec<f64>, ExperimentError> {
    match params.get(key) {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|part| {
                part.trim().parse().map_err(|_| {
                    bad(
                        &format!("[{section}].{key}"),
                        format!("`{part}` is not a number"),
                    )
                })
            })
            .collect(),
    }
}

/// The cover-time reference: an explicit `t_cov_ref` parameter if present,
/// otherwise a seeded Monte Carlo estimate with `cover_replicas` walks.
fn resolve_t_cov_ref(
    g: &GraphTopology,
    config: &ExperimentConfig,
    section: &str,
) -> Result<(f64, ValueEntry), ExperimentError> {
    if config.params.contains_key("t_cov_ref") {
        let value = param_f64(&config.params, section, "t_cov_ref", 0.0)?;
        if !(value > 0.0) {
            return Err(bad(&format!("[{section}].t_cov_ref"), "must be positive"));
        }
        return Ok((value, ValueEntry::exact("t_cov_ref", value)));
    }
    let replicas = param_usize(&config.params, section, "cover_replicas", 200)?;
    let est = walker::estimate_cover_time(g, replicas, derive_seed(config.seed, SALT_COVER_REF))?;
    Ok((est.mean, ValueEntry::estimate("t_cov_ref", &est)))
}

// ---- experiment bodies ------------------------------------------------------

fn compute_gen(
    g: &GraphTopology,
    _config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let stats = g.degree_stats();
    let values = vec![
        ValueEntry::exact("vertices", g.vertex_count() as f64),
        ValueEntry::exact("edges", g.edge_count() as f64),
        ValueEntry::exact("min_degree", stats.min as f64),
        ValueEntry::exact("max_degree", stats.max as f64),
        ValueEntry::exact("mean_degree", stats.mean),
        ValueEntry::exact("diameter", g.diameter() as f64),
    ];
    let mut artifacts = Vec::new();
    write_artifact(out, &mut artifacts, "graph.edges", &g.edge_text())?;
    write_artifact(out, &mut artifacts, "graph.meta", &g.meta_text())?;
    Ok(Outcome { t_cov_ref: None, values, artifacts })
}

fn compute_cover(
    g: &GraphTopology,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let replicas = param_usize(&config.params, "cover", "replicas", 200)?;
    if replicas < 2 {
        return Err(bad("[cover].replicas", "need at least 2 replicas"));
    }
    let samples: Result<Vec<f64>, WalkError> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let walk = WalkConfig::stationary(config.seed, replica);
            walker::run_until_cover(g, &walk, None)
                .map(|r| r.cover_time.expect("covered walk has a cover time") as f64)
        })
        .collect();
    let samples = samples?;
    let est = Estimate::from_values(&samples);
    let mut csv = String::from("replica,cover_time\n");
    for (i, s) in samples.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", fmt_f64(*s));
    }
    let mut artifacts = Vec::new();
    write_artifact(out, &mut artifacts, "cover.csv", &csv)?;
    Ok(Outcome {
        t_cov_ref: None,
        values: vec![
            ValueEntry::estimate("t_cov", &est),
            ValueEntry::exact("replicas", replicas as f64),
        ],
        artifacts,
    })
}

fn compute_late(
    g: &GraphTopology,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let alphas = param_f64_list(&config.params, "late", "alphas", &[0.25, 0.5, 0.75])?;
    let replicas = param_usize(&config.params, "late", "replicas", 500)?;
    let (t_cov, t_cov_entry) = resolve_t_cov_ref(g, config, "late")?;
    let dconfig = DistinguisherConfig {
        replicas,
        seed: config.seed,
        ..DistinguisherConfig::default()
    };
    let curve = latepoints::power_grid(g, &alphas, t_cov, &dconfig);
    let size_lane = derive_seed(config.seed, SALT_LATE_SIZE);
    let n = g.vertex_count() as f64;

    let mut values = Vec::new();
    let mut csv = String::from(
        "alpha,mean_z,z_stderr,rejection,rejection_stderr,late_size,late_size_stderr,late_exponent\n",
    );
    for (i, &alpha) in alphas.iter().enumerate() {
        let z = &curve.mean_z[i];
        let rej = &curve.rows[i].1;
        let size = latepoints::mean_late_size(g, alpha, t_cov, replicas, derive_seed(size_lane, i as u64));
        let exponent = if size.mean > 0.0 { size.mean.ln() / n.ln() } else { f64::NEG_INFINITY };
        values.push(ValueEntry::estimate(format!("z@{alpha}"), z));
        values.push(ValueEntry::estimate(format!("rejection@{alpha}"), rej));
        values.push(ValueEntry::estimate(format!("late_size@{alpha}"), &size));
        if exponent.is_finite() {
            values.push(ValueEntry::exact(format!("late_exponent@{alpha}"), exponent));
        }
        let _ = writeln!(
            csv,
            "{alpha},{},{},{},{},{},{},{}",
            fmt_f64(z.mean),
            fmt_f64(z.stderr),
            fmt_f64(rej.mean),
            fmt_f64(rej.stderr),
            fmt_f64(size.mean),
            fmt_f64(size.stderr),
            fmt_f64(exponent),
        );
    }
    let mut artifacts = Vec::new();
    write_artifact(out, &mut artifacts, "late.csv", &csv)?;
    Ok(Outcome { t_cov_ref: Some(t_cov_entry), values, artifacts })
}

fn compute_distinguish(
    g: &GraphTopology,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let alphas = param_f64_list(&config.params, "distinguish", "alphas", &[0.3, 0.5, 0.7, 0.9])?;
    let replicas = param_usize(&config.params, "distinguish", "replicas", 1000)?;
    let pairs = param_usize(&config.params, "distinguish", "pairs", 2000)?;
    let z_threshold = param_f64(&config.params, "distinguish", "z_threshold", 3.0)?;
    let (t_cov, t_cov_entry) = resolve_t_cov_ref(g, config, "distinguish")?;
    let dconfig = DistinguisherConfig {
        replicas,
        pairs,
        z_threshold,
        seed: config.seed,
        ..DistinguisherConfig::default()
    };
    let curve = latepoints::power_grid(g, &alphas, t_cov, &dconfig);
    let false_rejection = latepoints::uniform_false_rejection(g, &dconfig);

    let mut values = Vec::new();
    let mut csv =
        String::from("alpha,rejection,rejection_stderr,m_hat,m_hat_stderr,tv_upper,overflow_pairs\n");
    for (i, &alpha) in alphas.iter().enumerate() {
        let rej = &curve.rows[i].1;
        let moment = latepoints::exp_moment_estimate(g, alpha, t_cov, &dconfig);
        values.push(ValueEntry::estimate(format!("rejection@{alpha}"), rej));
        values.push(ValueEntry::estimate(format!("m_hat@{alpha}"), &moment.m_hat));
        values.push(ValueEntry::exact(format!("tv_upper@{alpha}"), moment.tv_upper));
        values.push(ValueEntry::exact(
            format!("overflow_pairs@{alpha}"),
            moment.overflow_count as f64,
        ));
        let _ = writeln!(
            csv,
            "{alpha},{},{},{},{},{},{}",
            fmt_f64(rej.mean),
            fmt_f64(rej.stderr),
            fmt_f64(moment.m_hat.mean),
            fmt_f64(moment.m_hat.stderr),
            fmt_f64(moment.tv_upper),
            moment.overflow_count,
        );
    }
    values.push(ValueEntry::estimate("false_rejection", &false_rejection));
    let mut artifacts = Vec::new();
    write_artifact(out, &mut artifacts, "distinguish.csv", &csv)?;
    Ok(Outcome { t_cov_ref: Some(t_cov_entry), values, artifacts })
}

fn compute_excursion(
    g: &GraphTopology,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let section = "excursion";
    let params = ExcursionParams {
        r: param_u32(&config.params, section, "r", 1)?,
        big_r: param_u32(&config.params, section, "big_r", 3)?,
        gap: param_f64(&config.params, section, "gap", 2.0)?,
        window: param_f64(&config.params, section, "window", 1.0)?,
        t_mix_uniform: match config.params.get("t_mix_uniform") {
            None => None,
            Some(_) => Some(param_u64(&config.params, section, "t_mix_uniform", 0)?),
        },
    };
    let vertex = param_u32(&config.params, section, "vertex", 0)?;
    let replicas = param_u64(&config.params, section, "replicas", 20_000)?;
    let resolved = params.resolve(g)?;
    let pinned = params.with_mixing_time(resolved.t_mix_uniform);

    let prediction = excursions::hitting_prediction(g, vertex, &pinned, replicas, config.seed)?;
    let cycle_mean = prediction.cycle_length.mean;

    let count_multiple = param_f64(&config.params, section, "count_multiple", 50.0)?;
    let count_steps = ((count_multiple * cycle_mean).ceil() as u64).max(1);
    let count = excursions::excursion_count(g, &[vertex], &pinned, count_steps, config.seed)?;
    let count_consistency = count as f64 * cycle_mean / count_steps as f64;

    let occupation_steps = match param_u64(&config.params, section, "occupation_steps", 0)? {
        0 => ((1000.0 * cycle_mean).ceil() as u64).max(1),
        explicit => explicit,
    };
    let occupation =
        excursions::occupation_ratio(g, vertex, &pinned, occupation_steps, config.seed)?;

    let mut values = vec![
        ValueEntry::exact("t_mix_uniform", resolved.t_mix_uniform as f64),
        ValueEntry::estimate("success_prob", &prediction.success_prob),
        ValueEntry::estimate("cycle_length", &prediction.cycle_length),
        ValueEntry {
            name: "predicted_hitting".into(),
            value: prediction.predicted,
            stderr: Some(prediction.stderr),
        },
        ValueEntry::exact("excursion_count", count as f64),
        ValueEntry::exact("count_steps", count_steps as f64),
        ValueEntry::exact("count_consistency", count_consistency),
        ValueEntry::estimate("occupation_per_excursion", &occupation.occupation_per_excursion),
        ValueEntry::exact("occupation_ratio", occupation.ratio),
        ValueEntry::exact("occupation_excursions", occupation.excursions as f64),
    ];
    if let Some(exact) = prediction.exact {
        values.push(ValueEntry::exact("exact_hitting", exact));
        values.push(ValueEntry::exact(
            "prediction_ratio",
            prediction.ratio.expect("ratio accompanies the exact value"),
        ));
    }

    let mut artifacts = Vec::new();
    let mut t_cov_entry = None;
    if param_bool(&config.params, section, "partition", false)? {
        let epsilon = param_f64(&config.params, section, "epsilon", 0.01)?;
        let partition_replicas =
            param_u64(&config.params, section, "partition_replicas", replicas)?;
        let report = excursions::cover_time_partition(
            g,
            epsilon,
            &pinned,
            partition_replicas,
            config.seed,
        )?;
        values.push(ValueEntry::exact(
            "partition_classes",
            report.class_sizes.len() as f64,
        ));
        values.push(ValueEntry::exact(
            "partition_degenerate",
            if report.degenerate_zero_class { 1.0 } else { 0.0 },
        ));
        if report.cover_bound.is_finite() {
            values.push(ValueEntry::exact("partition_bound", report.cover_bound));
            if let Ok((t_cov, entry)) = resolve_t_cov_ref(g, config, section) {
                values.push(ValueEntry::exact(
                    "partition_vs_cover",
                    report.cover_bound / t_cov,
                ));
                t_cov_entry = Some(entry);
            }
        }
        let mut csv = String::from("class,size,dimension,contribution\n");
        for (&k, &size) in &report.class_sizes {
            let _ = writeln!(
                csv,
                "{k},{size},{},{}",
                fmt_f64(report.dimension[&k]),
                fmt_f64(report.contribution[&k]),
            );
        }
        write_artifact(out, &mut artifacts, "partition.csv", &csv)?;
    }

    let mut csv = String::from("name,value,stderr\n");
    for v in &values {
        let _ = writeln!(
            csv,
            "{},{},{}",
            v.name,
            fmt_f64(v.value),
            v.stderr.map(fmt_f64).unwrap_or_default(),
        );
    }
    write_artifact(out, &mut artifacts, "excursion.csv", &csv)?;
    Ok(Outcome { t_cov_ref: t_cov_entry, values, artifacts })
}

fn compute_lamplighter(
    g: &GraphTopology,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let section = "lamplighter";
    let alphas = param_f64_list(
        &config.params,
        section,
        "alphas",
        &[0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.1],
    )?;
    let probe_config = CutoffConfig {
        replicas_per_side: param_u64(&config.params, section, "replicas_per_side", 2000)?,
        pairs: param_u64(&config.params, section, "pairs", 2000)?,
        bins: param_usize(&config.params, section, "bins", 49)?,
        residual_alpha: param_f64(&config.params, section, "residual_alpha", 0.05)?,
        seed: config.seed,
    };
    let (t_cov, t_cov_entry) = resolve_t_cov_ref(g, config, section)?;
    let report = lamplighter::cutoff_probe(g, &alphas, t_cov, &probe_config)?;

    let mut values = Vec::new();
    let mut csv =
        String::from("alpha,tv_lower,tv_upper,m_hat,overflow_pairs,position_residual\n");
    for row in &report.rows {
        values.push(ValueEntry::exact(format!("tv_lower@{}", row.alpha), row.tv_lower));
        values.push(ValueEntry::exact(format!("tv_upper@{}", row.alpha), row.tv_upper));
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.alpha,
            fmt_f64(row.tv_lower),
            fmt_f64(row.tv_upper),
            fmt_f64(row.m_hat),
            row.overflow_pairs,
            fmt_f64(row.position_residual),
        );
    }
    if let Some(c) = report.lower_crossing {
        values.push(ValueEntry::exact("lower_crossing", c));
    }
    if let Some(c) = report.upper_crossing {
        values.push(ValueEntry::exact("upper_crossing", c));
    }
    if let Some(c) = report.crossing {
        values.push(ValueEntry::exact("crossing", c));
    }
    let mut artifacts = Vec::new();
    write_artifact(out, &mut artifacts, "cutoff.csv", &csv)?;

    let exact_horizon = param_u64(&config.params, section, "exact_horizon", 0)?;
    if exact_horizon > 0 {
        let curve = lamplighter::exact_tv_curve(g, exact_horizon)?;
        let mut curve_csv = String::from("t,tv\n");
        for (t, tv) in curve.iter().enumerate() {
            let _ = writeln!(curve_csv, "{t},{}", fmt_f64(*tv));
        }
        write_artifact(out, &mut artifacts, "exact_tv.csv", &curve_csv)?;
        values.push(ValueEntry::exact(
            "exact_tv_final",
            *curve.last().expect("curve has an entry for t = 0"),
        ));
    }
    Ok(Outcome { t_cov_ref: Some(t_cov_entry), values, artifacts })
}

fn compute_oracle(
    g: &GraphTopology,
    _config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    let summary = match out {
        Some(dir) => SpectralSummary::cached(g, dir)?,
        None => SpectralSummary::compute(g)?,
    };
    let failures = summary.verify(g, &oracle::STANDARD_TOLERANCES);
    if !failures.is_empty() {
        return Err(ExperimentError::SelfCheck(failures.join("; ")));
    }
    let mut values = vec![ValueEntry::exact("t_hit", summary.t_hit)];
    for &(eps, t) in &summary.t_mix {
        values.push(ValueEntry::exact(format!("t_mix@{eps}"), t as f64));
    }
    for &(eps, t) in &summary.t_mix_uniform {
        values.push(ValueEntry::exact(format!("t_mix_uniform@{eps}"), t as f64));
    }
    let artifacts = if out.is_some() {
        let stem = SpectralSummary::cache_stem(g);
        vec![
            format!("{stem}.summary"),
            format!("{stem}.stationary.csv"),
            format!("{stem}.greens.csv"),
            format!("{stem}.hitting.csv"),
        ]
    } else {
        Vec::new()
    };
    Ok(Outcome { t_cov_ref: None, values, artifacts })
}

fn dispatch(
    g: &GraphTopology,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, ExperimentError> {
    match config.experiment {
        ExperimentKind::Gen => compute_gen(g, config, out),
        ExperimentKind::Cover => compute_cover(g, config, out),
        ExperimentKind::Late => compute_late(g, config, out),
        ExperimentKind::Distinguish => compute_distinguish(g, config, out),
        ExperimentKind::Excursion => compute_excursion(g, config, out),
        ExperimentKind::Lamplighter => compute_lamplighter(g, config, out),
        ExperimentKind::Oracle => compute_oracle(g, config, out),
    }
}

/// Run an experiment: generate the graph, execute the named computation,
/// write artifacts and `record.json` when an output directory is set, and
/// return the record.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentRecord, ExperimentError> {
    let start = Instant::now();
    if config.threads > 0 {
        // The global pool can only be sized once per process; later calls
        // keep the existing pool, which never affects results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global();
    }
    let g = GraphTopology::generate(&config.graph)?;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
    }
    let outcome = dispatch(&g, config, config.out.as_deref())?;
    let record = ExperimentRecord {
        tool_version: TOOL_VERSION.to_string(),
        experiment: config.experiment.name().to_string(),
        seed: config.seed,
        threads: config.threads,
        graph: config.graph.to_kv("").into_iter().collect(),
        params: config.params.clone(),
        t_cov_ref: outcome.t_cov_ref,
        values: outcome.values,
        artifacts: outcome.artifacts,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    if let Some(dir) = &config.out {
        record.save(&dir.join("record.json"))?;
    }
    Ok(record)
}

/// Rebuild the config a record was produced from.  Records carry no output
/// directory: replay never writes artifacts.
pub fn config_from_record(record: &ExperimentRecord) -> Result<ExperimentConfig, ExperimentError> {
    let experiment = ExperimentKind::parse(&record.experiment)
        .ok_or_else(|| bad("experiment", format!("unknown experiment `{}`", record.experiment)))?;
    let graph = FamilySpec::from_kv(&record.graph, "").map_err(|e| bad("graph", e))?;
    Ok(ExperimentConfig {
        experiment,
        seed: record.seed,
        out: None,
        threads: 0,
        graph,
        params: record.params.clone(),
    })
}

fn drift(field: impl Into<String>, expected: f64, actual: f64) -> ExperimentError {
    ExperimentError::DriftDetected {
        field: field.into(),
        detail: format!(
            "recorded {} (bits {:016x}), recomputed {} (bits {:016x})",
            fmt_f64(expected),
            expected.to_bits(),
            fmt_f64(actual),
            actual.to_bits(),
        ),
    }
}

fn compare_entry(field: &str, expected: &ValueEntry, actual: &ValueEntry) -> Result<(), ExperimentError> {
    if expected.name != actual.name {
        return Err(ExperimentError::DriftDetected {
            field: field.to_string(),
            detail: format!("recorded name `{}`, recomputed `{}`", expected.name, actual.name),
        });
    }
    if expected.value.to_bits() != actual.value.to_bits() {
        return Err(drift(format!("{field}.value"), expected.value, actual.value));
    }
    match (expected.stderr, actual.stderr) {
        (None, None) => Ok(()),
        (Some(e), Some(a)) if e.to_bits() == a.to_bits() => Ok(()),
        (e, a) => Err(drift(
            format!("{field}.stderr"),
            e.unwrap_or(f64::NAN),
            a.unwrap_or(f64::NAN),
        )),
    }
}

/// Recompute every estimate in a record and verify bitwise equality.
///
/// Records are immutable replay inputs: the config is taken wholly from
/// the record, and any tampering (a changed seed, replica count, or value)
/// surfaces as [`ExperimentError::DriftDetected`] naming the first
/// divergent field.
pub fn replay(record: &ExperimentRecord) -> Result<(), ExperimentError> {
    if record.tool_version != TOOL_VERSION {
        return Err(ExperimentError::ConfigInvalid(format!(
            "record was produced by tool version {}, this build is {}",
            record.tool_version, TOOL_VERSION
        )));
    }
    let config = config_from_record(record)?;
    let g = GraphTopology::generate(&config.graph)?;
    let outcome = dispatch(&g, &config, None)?;

    match (&record.t_cov_ref, &outcome.t_cov_ref) {
        (None, None) => {}
        (Some(e), Some(a)) => compare_entry("t_cov_ref", e, a)?,
        (e, a) => {
            return Err(ExperimentError::DriftDetected {
                field: "t_cov_ref".into(),
                detail: format!(
                    "recorded {}, recomputed {}",
                    if e.is_some() { "present" } else { "absent" },
                    if a.is_some() { "present" } else { "absent" },
                ),
            })
        }
    }
    if record.values.len() != outcome.values.len() {
        return Err(ExperimentError::DriftDetected {
            field: "values".into(),
            detail: format!(
                "recorded {} entries, recomputed {}",
                record.values.len(),
                outcome.values.len()
            ),
        });
    }
    for (i, (e, a)) in record.values.iter().zip(&outcome.values).enumerate() {
        compare_entry(&format!("values[{i}] ({})", e.name), e, a)?;
    }
    Ok(())
}

/// Load a record from disk and replay it.
pub fn replay_path(path: &Path) -> Result<ExperimentRecord, ExperimentError> {
    let record = ExperimentRecord::load(path)?;
    replay(&record)?;
    Ok(record)
}
