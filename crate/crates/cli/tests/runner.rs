use std::path::Path;
use std::process::{Command, Output};

use freewalk_cli::{run_experiment, ExperimentConfig, Stage};

const TREE_STAGES: [Stage; 5] = [Stage::Pressure, Stage::Gibbs, Stage::AuditSpikes, Stage::Decompose, Stage::Walk];

fn quick(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        "seed = 11\npreset = \"uniform-f2\"\n{extra}\n[audits]\nhitting_paths = 20000\nrn_instances = 200\nh2_samples = 100\n"
    ))
    .unwrap()
}

fn freewalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freewalk")).args(args).current_dir(dir).output().unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn uniform_pipeline_passes_and_reports_log3() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&quick(""), &TREE_STAGES, dir.path()).unwrap();
    assert!(summary.failed_stages().is_empty(), "{}", summary.to_text(""));
    let text = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(text.contains(&format!("λ₀ = {:.12}", 3f64.ln())), "{text}");
    assert!(text.ends_with("all stages passed\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = quick("");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, &TREE_STAGES, a.path()).unwrap();
    run_experiment(&cfg, &TREE_STAGES, b.path()).unwrap();
    assert_eq!(files(a.path()), files(b.path()));
    for f in files(a.path()) {
        assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap(), "{f} differs");
    }
}

#[test]
fn every_row_carries_hash_and_version() {
    let cfg = quick("");
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, &[Stage::Pressure, Stage::Gibbs], dir.path()).unwrap();
    let hash = cfg.hash();
    for f in files(dir.path()) {
        let text = std::fs::read_to_string(dir.path().join(&f)).unwrap();
        if f.ends_with(".csv") {
            let mut lines = text.lines();
            assert!(lines.next().unwrap().starts_with("config_hash,version,"));
            for line in lines {
                assert!(line.starts_with(&format!("{hash},{},", env!("CARGO_PKG_VERSION"))), "{f}: {line}");
            }
        } else if f.ends_with(".json") {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config_hash"], hash.as_str());
            assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        } else {
            assert!(text.contains(&hash));
        }
    }
}

#[test]
fn audits_only_run_writes_no_decomposition() {
    let cfg = quick("stages = [\"pressure\", \"gibbs\", \"audit-spikes\"]");
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, &cfg.stages, dir.path()).unwrap();
    assert!(summary.failed_stages().is_empty());
    let written = files(dir.path());
    assert!(written.iter().all(|f| !f.starts_with("decomposition") && !f.starts_with("walk")), "{written:?}");
    assert!(written.contains(&"spikes.csv".to_string()));
}

#[test]
fn seed_changes_the_hash() {
    let mut cfg = quick("");
    let before = cfg.hash();
    cfg.seed = 12;
    assert_ne!(before, cfg.hash());
}

#[test]
fn binary_names_the_failing_stage() {
    // the common-basepoint estimate with the e^{−c₊} factor is false, so this stage fails
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("h.toml"), "seed = 1\npreset = \"uniform-f2\"\n[audits]\nh2_samples = 100\n").unwrap();
    let out = freewalk(&["validate-h2", "--config", "h.toml", "--out", "r"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("validate-h2"), "{err}");
    let summary = std::fs::read_to_string(dir.path().join("r/summary.txt")).unwrap();
    assert!(summary.contains("FAIL validate-h2 common-base-cosh:"), "{summary}");
    assert!(summary.contains("PASS validate-h2 common-base-cosh-corrected:"), "{summary}");
}

#[test]
fn binary_seed_flag_and_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.toml"), "seed = 1\npreset = \"skewed-f2\"\n").unwrap();
    let out = freewalk(&["pressure", "--config", "p.toml", "--out", "a", "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("setup skewed-f2 seed 9 "), "{stdout}");

    std::fs::write(dir.path().join("bad.toml"), "seed = 1\npreset = \"nowhere\"\n").unwrap();
    let out = freewalk(&["all", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    std::fs::write(dir.path().join("noseed.toml"), "preset = \"uniform-f2\"\n").unwrap();
    let out = freewalk(&["all", "--config", "noseed.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn custom_potential_runs_through_the_walk() {
    let cfg = ExperimentConfig::from_toml(
        "seed = 5\n[potential]\nkind = \"table\"\ndepth = 1\nvalues = [0.3, 0.0, 0.6, 0.2]\n[target]\ndefault = 1.0\nsteps = [[\"a\", 1.5]]\n[audits]\nhitting_paths = 20000\nrn_instances = 100\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, &TREE_STAGES, dir.path()).unwrap();
    assert_eq!(summary.setup, "custom");
    let failed = summary.failed_stages();
    assert!(failed.is_empty(), "{}", summary.to_text(""));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 3);
}
