//! End-to-end tests for the `lamplab` binary: config handling, artifact
//! output, the run/replay contract, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lamplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lamplab"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn exit(output: &Output) -> i32 {
    output.status.code().expect("process should exit normally")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const COVER_CONFIG: &str = "\
experiment = \"cover\"
seed = 41

[graph]
family = \"complete\"
n = 4

[cover]
replicas = 32
";

#[test]
fn no_arguments_is_a_usage_error() {
    let output = lamplab(&[]);
    assert_eq!(exit(&output), 2);
    assert!(stderr(&output).contains("Usage"));
}

#[test]
fn gen_writes_edge_list_and_metadata_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("artifacts");
    let config = write_config(
        dir.path(),
        "gen.toml",
        &format!(
            "experiment = \"gen\"\nout = \"{}\"\n\n[graph]\nfamily = \"cycle\"\nn = 6\n",
            out.display()
        ),
    );
    let output = lamplab(&["gen", "--config", &config]);
    assert_eq!(exit(&output), 0, "stderr: {}", stderr(&output));

    let edges = std::fs::read_to_string(out.join("graph.edges")).unwrap();
    let mut lines = edges.lines();
    assert_eq!(lines.next(), Some("v 6"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 6, "C_6 has six edges");
    assert!(body.iter().all(|line| {
        let mut parts = line.split_whitespace();
        let u: u32 = parts.next().unwrap().parse().unwrap();
        let v: u32 = parts.next().unwrap().parse().unwrap();
        parts.next().is_none() && u < v && v < 6
    }));
    let meta = std::fs::read_to_string(out.join("graph.meta")).unwrap();
    assert!(meta.contains("family = cycle"));
    assert!(meta.contains("n = 6"));
    assert!(out.join("record.json").exists());
}

#[test]
fn cover_run_reports_an_estimate_and_writes_a_replayable_record() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let config = write_config(dir.path(), "cover.toml", COVER_CONFIG);
    let output = lamplab(&["cover", "--config", &config, "--out", &out.to_string_lossy()]);
    assert_eq!(exit(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("experiment: cover (seed 41)"));
    assert!(text.contains("t_cov"));

    let record_path = out.join("record.json");
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&record_path).unwrap()).unwrap();
    assert_eq!(record["experiment"], "cover");
    assert_eq!(record["seed"], 41);
    assert_eq!(record["graph"]["family"], "complete");
    assert_eq!(record["params"]["replicas"], "32");
    let values = record["values"].as_array().unwrap();
    assert!(values.iter().any(|v| v["name"] == "t_cov"));
    assert!(record["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .any(|a| a == "cover.csv"));

    let replay = lamplab(&["replay", &record_path.to_string_lossy()]);
    assert_eq!(exit(&replay), 0, "stderr: {}", stderr(&replay));
    assert!(stdout(&replay).contains("bit-exact"));
}

#[test]
fn replay_rejects_overrides_because_records_are_immutable() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let config = write_config(dir.path(), "cover.toml", COVER_CONFIG);
    let output = lamplab(&["cover", "--config", &config, "--out", &out.to_string_lossy()]);
    assert_eq!(exit(&output), 0);
    let record = out.join("record.json");

    let replay = lamplab(&["replay", &record.to_string_lossy(), "--seed", "7"]);
    assert_eq!(exit(&replay), 2);
    assert!(stderr(&replay).contains("immutable"));
}

#[test]
fn replay_detects_a_tampered_record_as_drift() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let config = write_config(dir.path(), "cover.toml", COVER_CONFIG);
    let output = lamplab(&["cover", "--config", &config, "--out", &out.to_string_lossy()]);
    assert_eq!(exit(&output), 0);

    let record = out.join("record.json");
    let text = std::fs::read_to_string(&record).unwrap();
    assert!(text.contains("\"seed\": 41"));
    std::fs::write(&record, text.replace("\"seed\": 41", "\"seed\": 42")).unwrap();

    let replay = lamplab(&["replay", &record.to_string_lossy()]);
    assert_eq!(exit(&replay), 3);
    assert!(stderr(&replay).contains("drift"));
}

#[test]
fn subcommand_must_match_the_config_experiment() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "cover.toml", COVER_CONFIG);
    let output = lamplab(&["late", "--config", &config]);
    assert_eq!(exit(&output), 2);
    assert!(stderr(&output).contains("`cover`"));
}

#[test]
fn unknown_config_sections_are_rejected() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "typo.toml",
        "experiment = \"cover\"\n\n[graph]\nfamily = \"complete\"\nn = 4\n\n[covr]\nreplicas = 8\n",
    );
    let output = lamplab(&["cover", "--config", &config]);
    assert_eq!(exit(&output), 2);
    assert!(stderr(&output).contains("covr"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let output = lamplab(&["cover", "--config", "/nonexistent/lamplab.toml"]);
    assert_eq!(exit(&output), 2);
    assert!(stderr(&output).contains("cannot read"));
}

#[test]
fn seed_override_changes_the_recorded_seed() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let config = write_config(dir.path(), "cover.toml", COVER_CONFIG);
    let output = lamplab(&[
        "cover",
        "--config",
        &config,
        "--seed",
        "99",
        "--out",
        &out.to_string_lossy(),
    ]);
    assert_eq!(exit(&output), 0, "stderr: {}", stderr(&output));
    assert!(stdout(&output).contains("seed 99"));
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
    assert_eq!(record["seed"], 99);
}
