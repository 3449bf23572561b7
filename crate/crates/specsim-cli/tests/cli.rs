//! Integration tests driving the `specsim` binary and the preset/file
//! plumbing end to end.

use std::path::Path;
use std::process::Command;

use specsim_cli::output::METRICS_HEADER;
use specsim_cli::preset::{run_preset, Preset};

fn specsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specsim"))
}

fn list_files(dir: &Path) -> Vec<String> {
    let mut names = Vec::new();
    for entry in walk(dir) {
        names.push(entry.strip_prefix(dir).unwrap().display().to_string());
    }
    names.sort();
    names
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files.extend(walk(&path));
        } else {
            files.push(path);
        }
    }
    files
}

#[test]
fn run_preset_emits_expected_files_only() {
    let dir = tempfile::tempdir().unwrap();
    run_preset(Preset::Static, None, dir.path(), false).unwrap();
    assert_eq!(
        list_files(dir.path()),
        ["bs.csv", "manifest.json", "metrics.csv"]
    );

    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next().unwrap(), METRICS_HEADER);
    assert_eq!(lines.count(), 16, "one data row per UE");
    assert!(metrics.ends_with('\n'));
    assert!(!metrics.contains('\r'));
}

#[test]
fn eta_sweep_emits_per_point_directories_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_preset(Preset::EtaSweep, None, dir.path(), false).unwrap();
    assert_eq!(outcome.results.len(), 3);
    let files = list_files(dir.path());
    for expected in [
        "eta_0.375/metrics.csv",
        "eta_0.375/bs.csv",
        "eta_0.750/metrics.csv",
        "eta_1.500/metrics.csv",
        "summary.csv",
        "manifest.json",
    ] {
        assert!(
            files.contains(&expected.to_string()),
            "missing {expected} in {files:?}"
        );
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let abundant = summary
        .lines()
        .find(|l| l.starts_with("eta_1.500"))
        .expect("abundant row present");
    // all payments at the reserve: min == max == 1.2 up to one ulp
    let fields: Vec<&str> = abundant.split(',').collect();
    let min_clear: f64 = fields[7].parse().unwrap();
    let max_clear: f64 = fields[8].parse().unwrap();
    assert!((min_clear - 1.2).abs() < 1e-9);
    assert_eq!(min_clear, max_clear);
}

#[test]
fn binary_runs_a_preset_and_reports_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let output = specsim()
        .args(["run", "--preset", "refill", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("refill: 20 episodes"));
    assert!(out.join("metrics.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn binary_seed_override_changes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let status = specsim()
            .args(["run", "--preset", "static", "--seed", seed, "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let read = |p: &Path| std::fs::read(p.join("metrics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn binary_runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scenario.toml");
    std::fs::write(
        &config_path,
        "episode_count = 4\nue_count = 6\n\n[budget]\nmode = \"static\"\namount = 20.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = specsim()
        .args(["run", "--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 7, "header plus six UEs");
}

#[test]
fn binary_rejects_bad_configs_with_field_names() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, "frobnicate = true\n").unwrap();
    let output = specsim()
        .args(["run", "--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("frobnicate"), "stderr: {stderr}");
}

#[test]
fn binary_requires_endpoint_env_for_live_llm() {
    let dir = tempfile::tempdir().unwrap();
    let output = specsim()
        .args(["run", "--preset", "refill", "--live-llm", "--out"])
        .arg(dir.path().join("out"))
        .env_remove("SPECSIM_LLM_BASE_URL")
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("SPECSIM_LLM_BASE_URL"),
        "error must name the missing variable, got: {stderr}"
    );
}

#[test]
fn binary_help_documents_env_vars() {
    let output = specsim().arg("--help").output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("SPECSIM_LLM_BASE_URL"));
    assert!(stdout.contains("SPECSIM_LLM_API_KEY"));
}

#[test]
fn print_config_round_trips() {
    let output = specsim().arg("print-config").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    let parsed = specsim_cli::config::parse_config(&text).unwrap();
    assert_eq!(parsed, specsim::sim::ScenarioConfig::default());
}
