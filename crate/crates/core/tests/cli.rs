use std::path::Path;
use std::process::{Command, Output};

use birdsong::synth::{generate_corpus, SynthConfig};

fn birdsong(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_birdsong")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = birdsong(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn corpus(dir: &Path) -> String {
    let synth = SynthConfig { classes: 3, clips_per_class: 6, clip_seconds: 2.0, ..SynthConfig::default() };
    generate_corpus(dir, &synth).unwrap();
    dir.join("manifest.csv").display().to_string()
}

#[test]
fn staged_commands_chain_into_an_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(&dir.path().join("data"));
    let p = |name: &str| dir.path().join(name).display().to_string();
    let common = ["--seed", "3", "--workers", "1", "--cache-dir", &p("cache")];

    let model = p("model.bin");
    let mut args = vec!["learn-features", "--manifest", &manifest, "--feature", "melspec-kfl2-ms", "--k", "20"];
    args.extend(["--fold", "0", "--out", &model]);
    args.extend(common);
    ok(&args);

    for split in ["train", "test"] {
        let out = p(&format!("feat_{split}"));
        let mut args = vec!["extract", "--manifest", &manifest, "--feature", "melspec-kfl2-ms", "--model"];
        args.extend([model.as_str(), "--fold", "0", "--split", split, "--window", "1", "--out", &out]);
        args.extend(common);
        ok(&args);
    }
    ok(&["train", "--manifest", &manifest, "--features", &p("feat_train"), "--n-trees", "20", "--out", &p("forest.bin")]);
    ok(&["predict", "--model", &p("forest.bin"), "--features", &p("feat_test"), "--out", &p("pred.csv")]);
    let stdout = ok(&[
        "evaluate", "--manifest", &manifest, "--predictions", &p("pred.csv"), "--fold", "0", "--pool", "max", "--out", &p("report.json"),
    ]);
    assert!(stdout.contains("auc"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("report.json")).unwrap()).unwrap();
    assert_eq!(report[0]["clips"], 9);

    ok(&["export-bases", "--model", &p("model.bin"), "--count", "3", "--images", "--out", &p("bases")]);
    assert!(dir.path().join("bases/base_002.csv").exists());
    assert!(dir.path().join("bases/base_002.png").exists());
}

#[test]
fn grid_reports_size_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path());
    for (preset, n) in [("full", 384), ("short-windows", 192), ("whole-clip", 96)] {
        let out = ok(&["grid", "--manifest", &manifest, "--preset", preset, "--dry-run"]);
        assert!(out.contains(&format!("grid: {n} runs")), "{out}");
    }
}

#[test]
fn grid_from_config_file_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir.path().join("data"));
    let cfg = dir.path().join("grid.toml");
    std::fs::write(
        &cfg,
        "manifest = \"data/manifest.csv\"\nfeature = [\"mfcc-ms\", \"melspec-maxp\"]\nwindow = [1, \"whole\"]\nn_trees = 20\noutput = \"results.csv\"\n",
    )
    .unwrap();
    let cfg = cfg.display().to_string();
    let audit = dir.path().join("audit.json").display().to_string();
    let out = ok(&["--config", &cfg, "grid", "--audit", &audit]);
    assert!(out.contains("grid: 4 runs"));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    assert!(dir.path().join("results.json").exists());
    assert!(std::fs::read_to_string(&audit).unwrap().contains("\"testing\""));
}

#[test]
fn augment_cross_condition() {
    let dir = tempfile::tempdir().unwrap();
    let primary = corpus(&dir.path().join("a"));
    let aux_cfg = SynthConfig { classes: 3, clips_per_class: 4, clip_seconds: 2.0, seed: 5, ..SynthConfig::default() };
    generate_corpus(&dir.path().join("b"), &aux_cfg).unwrap();
    let aux = dir.path().join("b/manifest.csv").display().to_string();
    let out = ok(&["augment", "--manifest", &primary, "--auxiliary", &aux, "--mode", "cross-condition", "--feature", "mfcc-ms"]);
    assert!(out.starts_with("cross-condition: auc"), "{out}");
}

#[test]
fn failures_exit_nonzero_with_stage_tag() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path());
    let missing = dir.path().join("nope.csv").display().to_string();
    let out = birdsong(&["grid", "--manifest", &missing, "--dry-run"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[manifest]"));

    let out = birdsong(&["extract", "--manifest", &manifest, "--feature", "melspec-kfl4-ms", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));

    std::fs::write(dir.path().join("audio").read_dir().unwrap().next().unwrap().unwrap().path(), b"junk").unwrap();
    let out = birdsong(&["extract", "--manifest", &manifest, "--feature", "mfcc-ms", "--out", &dir.path().join("f").display().to_string()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[decode:"), "{}", String::from_utf8_lossy(&out.stderr));
}
