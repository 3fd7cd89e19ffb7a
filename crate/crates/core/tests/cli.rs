use std::path::Path;
use std::process::{Command, Output};

use uavchan::sim::analyze::AnalysisReport;
use uavchan::sim::config::RunConfig;
use uavchan::sim::format::{read_channel_path, ChannelFile};

const CONFIG: &str = r#"
seed = 77
scenario = "office-buildings"
snapshots_per_position = 20

[pathloss]
ple = 1.75
pl0_db = 40.0
sigma_db = 3.0
d_corr_m = 4.5

[[trajectory.legs]]
start = [10.0, 0.0, 5.0]
end = [10.0, 0.0, 80.0]
step_m = 5.0
kind = "vertical"
"#;

fn uavchan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavchan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn scenarios_lists_builtins_and_merges_a_file() {
    let dir = setup();
    let out = uavchan(&["scenarios"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[office-buildings]") && text.contains("[grass-lawn]"));

    std::fs::write(
        dir.path().join("extra.toml"),
        "[pier]\nk_f_db = 9.0\ngamma_f_ns = 200.0\nlambda_f_per_ns = 0.01\nn_f_mean = 2.0\n\
         k_b_db = 3.0\ngamma_b_ns = 400.0\nlambda_b_per_ns = 0.008\nn_b_mean = 4.0\noffset_ns = 50.0\n",
    )
    .unwrap();
    let out = uavchan(&["scenarios", "--file", "extra.toml"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("[pier]"));
}

#[test]
fn run_writes_every_artifact() {
    let dir = setup();
    let out = uavchan(&["run", "--config", "run.toml", "--out", "o"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "snapshots.jsonl",
        "pathloss.csv",
        "k_factor_cdf.csv",
        "rms_ds_cdf.csv",
        "shadow_autocorr.csv",
        "summary.json",
    ] {
        assert!(dir.path().join("o").join(f).is_file(), "{f} missing");
    }
    match read_channel_path(&dir.path().join("o/snapshots.jsonl")).unwrap() {
        ChannelFile::Snapshots { header, records } => {
            assert_eq!(header.seed, Some(77));
            assert_eq!(records.len(), 16 * 20);
        }
        ChannelFile::Sampled { .. } => panic!("expected snapshots"),
    }
}

#[test]
fn seed_and_scenario_overrides_change_the_output() {
    let dir = setup();
    let run = |args: &[&str]| {
        let out = uavchan(args, dir.path());
        assert!(out.status.success());
    };
    run(&["run", "--config", "run.toml", "--out", "a"]);
    run(&["run", "--config", "run.toml", "--out", "b", "--seed", "78"]);
    run(&[
        "run",
        "--config",
        "run.toml",
        "--out",
        "c",
        "--scenario",
        "grass-lawn",
    ]);
    let read = |d: &str| std::fs::read(dir.path().join(d).join("snapshots.jsonl")).unwrap();
    assert_ne!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn analyze_and_discretize_round_trip() {
    let dir = setup();
    assert!(
        uavchan(&["run", "--config", "run.toml", "--out", "o"], dir.path())
            .status
            .success()
    );

    let out = uavchan(
        &[
            "analyze",
            "o/snapshots.jsonl",
            "--out",
            "rep.json",
            "--plots",
            "plots",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep: AnalysisReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rep.json")).unwrap())
            .unwrap();
    assert_eq!(rep.input_kind, "snapshots");
    assert_eq!(rep.records, 320);
    assert!(rep.pathloss_fit.is_some());
    for f in [
        "normalized_power.csv",
        "interarrival_cdf_pre.csv",
        "interarrival_cdf_post.csv",
    ] {
        assert!(dir.path().join("plots").join(f).is_file(), "{f} missing");
    }

    let out = uavchan(
        &[
            "discretize",
            "o/snapshots.jsonl",
            "--out",
            "cir.jsonl",
            "--delay-ns",
            "123.4",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = uavchan(&["analyze", "cir.jsonl"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sampled: AnalysisReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(sampled.input_kind, "sampled");
    let ex = sampled.extraction.expect("extraction summary");
    assert!(
        ex.mean_residual_fraction < 0.01,
        "{}",
        ex.mean_residual_fraction
    );
    // the strongest extracted ray is the central one, so path loss survives sampling
    let (a, b) = (rep.pathloss_fit.unwrap(), sampled.pathloss_fit.unwrap());
    assert!((a.ple - b.ple).abs() < 0.05, "{} vs {}", a.ple, b.ple);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = setup();
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = uavchan(&["analyze", "empty.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty.jsonl:1"));

    let out = uavchan(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = uavchan(
        &["run", "--config", "run.toml", "--scenario", "atlantis"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("atlantis"));

    std::fs::write(dir.path().join("bad.toml"), CONFIG.replace("seed = 77", "")).unwrap();
    let out = uavchan(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        cfg.generator_config().unwrap();
        cfg.trajectory.validate().unwrap();
    }
}
