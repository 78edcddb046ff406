//! End-to-end checks of the radseg binary: every subcommand runs
//! against a miniature dataset and the documented exit codes hold.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_radseg")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("RADSEG_THREADS")
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Miniature run config: short examples, narrow parameter ranges, a
/// two-level encoder so everything finishes in seconds.
fn write_config(dir: &Path) -> PathBuf {
    let config = serde_json::json!({
        "generation": {
            "n_samples": 1024,
            "pw_min_us": 10.0, "pw_max_us": 30.0,
            "pri_min_us": 60.0, "pri_max_us": 150.0,
            "toa_min_us": 0.0, "toa_max_us": 100.0,
            "snr_min_db": 5.0, "snr_max_db": 10.0,
            "global_seed": 11
        },
        "data": {
            "dir": dir.join("data"),
            "train_count": 12, "val_count": 4, "test_count": 6
        },
        "model": {
            "kind": "unet",
            "config": {"base_channels": 2, "depth": 2},
            "stages": 1
        },
        "train": {
            "epochs": 2, "batch_size": 4, "window": 256,
            "windows_per_example": 1, "seed": 3
        },
        "eval": {"window": 256, "threshold": 0.5}
    });
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = write_config(dir.path());
    let config = config.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let out = run(&[
            "generate",
            "--config",
            config,
            "--out",
            out.to_str().unwrap(),
            "--split",
            "train",
        ]);
        assert_success(&out, "generate");
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("split train: 12 examples"));
        assert!(stdout.contains("class Cpt"), "per-class counts missing");
        assert!(stdout.contains("snr ["), "per-SNR counts missing");
    }
    let shard_a = std::fs::read(a.join("train.rsgd")).unwrap();
    let shard_b = std::fs::read(b.join("train.rsgd")).unwrap();
    assert_eq!(shard_a, shard_b, "shards differ between identical runs");
    let man_a = std::fs::read(a.join("train.manifest.json")).unwrap();
    let man_b = std::fs::read(b.join("train.manifest.json")).unwrap();
    assert_eq!(man_a, man_b, "manifests differ between identical runs");
    assert!(a.join("config.resolved.json").exists());
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::TempDir::new().unwrap();
    let config_path = write_config(dir.path());
    let config = config_path.to_str().unwrap();

    assert_success(&run(&["generate", "--config", config]), "generate");

    let train_dir = dir.path().join("train-out");
    let out = run(&[
        "train",
        "--config",
        config,
        "--out",
        train_dir.to_str().unwrap(),
    ]);
    assert_success(&out, "train");
    assert!(train_dir.join("final.ckpt").exists());
    assert!(train_dir.join("best.ckpt").exists());
    assert!(train_dir.join("config.resolved.json").exists());
    let history = std::fs::read_to_string(train_dir.join("history.csv")).unwrap();
    let rows: Vec<&str> = history.trim_end().lines().collect();
    assert_eq!(rows[0], "epoch,step,loss");
    // 12 examples, 1 window each, batch 4: 3 steps per epoch, 2 epochs.
    assert_eq!(rows.len(), 1 + 6, "history: {history}");
    assert!(rows[1].starts_with("0,0,"));
    assert!(rows[6].starts_with("1,5,"));

    let ckpt = train_dir.join("final.ckpt");
    let eval_dir = dir.path().join("eval-model");
    let out = run(&[
        "eval",
        "--config",
        config,
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--split",
        "test",
        "--name",
        "trained",
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert_success(&out, "eval");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("threshold 0.50"), "summary header: {stdout}");
    let report_path = eval_dir.join("report-trained.json");
    assert!(report_path.exists());
    let csv = std::fs::read_to_string(eval_dir.join("metrics-trained.csv")).unwrap();
    assert!(csv.starts_with("model,stages,metric,snr_db,mean,std,n\n"));

    let oracle_dir = dir.path().join("eval-oracle");
    let out = run(&[
        "eval",
        "--config",
        config,
        "--oracle",
        "--split",
        "test",
        "--out",
        oracle_dir.to_str().unwrap(),
    ]);
    assert_success(&out, "oracle eval");
    let oracle_csv = std::fs::read_to_string(oracle_dir.join("metrics-oracle.csv")).unwrap();
    for line in oracle_csv.trim_end().lines().skip(1) {
        let mean: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(mean, 1.0, "oracle should be perfect: {line}");
    }

    let merged = dir.path().join("merged");
    let out = run(&[
        "report",
        report_path.to_str().unwrap(),
        oracle_dir.join("report-oracle.json").to_str().unwrap(),
        "--out",
        merged.to_str().unwrap(),
    ]);
    assert_success(&out, "report");
    assert!(merged.join("combined.csv").exists());
    for svg in ["f1.svg", "dice.svg", "iou.svg"] {
        let body = std::fs::read_to_string(merged.join(svg)).unwrap();
        assert!(body.starts_with("<svg "), "{svg} is not an svg");
        assert_eq!(body.matches("<polyline").count(), 2);
    }
    let summary = std::fs::read_to_string(merged.join("summary.txt")).unwrap();
    assert!(summary.contains("trained"));
    assert!(summary.contains("oracle"));

    let inspect_dir = dir.path().join("inspect");
    let out = run(&[
        "inspect",
        "--config",
        config,
        "--split",
        "test",
        "--index",
        "1",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        inspect_dir.to_str().unwrap(),
    ]);
    assert_success(&out, "inspect");
    let dump = std::fs::read_to_string(inspect_dir.join("example-1.csv")).unwrap();
    let lines: Vec<&str> = dump.trim_end().lines().collect();
    assert_eq!(
        lines[0],
        "sample,i,q,gt0,gt1,gt2,gt3,gt4,pred0,pred1,pred2,pred3,pred4,label0,label1,label2,label3,label4"
    );
    assert_eq!(lines.len(), 1 + 1024);
    // Outcome labels must agree with the (pred, gt) bits on every
    // sample: the four classes partition each channel cell.
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        for c in 0..5 {
            let gt = fields[3 + c] == "1";
            let pred = fields[8 + c] == "1";
            let label = fields[13 + c];
            let expect = match (pred, gt) {
                (true, true) => "TP",
                (false, false) => "TN",
                (true, false) => "FP",
                (false, true) => "FN",
            };
            assert_eq!(label, expect, "channel {c} of {line}");
        }
    }
    assert!(inspect_dir.join("example-1.json").exists());
}

#[test]
fn resume_matches_uninterrupted_training() {
    let dir = tempfile::TempDir::new().unwrap();
    let config_path = write_config(dir.path());
    let config = config_path.to_str().unwrap();
    assert_success(
        &run(&["generate", "--config", config, "--split", "train"]),
        "generate",
    );

    let full = dir.path().join("full");
    assert_success(
        &run(&["train", "--config", config, "--out", full.to_str().unwrap()]),
        "uninterrupted train",
    );

    let half = dir.path().join("half");
    assert_success(
        &run(&[
            "train",
            "--config",
            config,
            "--epochs",
            "1",
            "--out",
            half.to_str().unwrap(),
        ]),
        "first half",
    );
    let resumed = dir.path().join("resumed");
    let out = run(&[
        "train",
        "--config",
        config,
        "--epochs",
        "2",
        "--resume",
        half.join("final.ckpt").to_str().unwrap(),
        "--out",
        resumed.to_str().unwrap(),
    ]);
    assert_success(&out, "resume");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("resumed"), "resume banner missing: {stdout}");
    assert!(
        stdout.contains("epoch    2/2"),
        "resume should continue numbering: {stdout}"
    );

    let a = std::fs::read(full.join("final.ckpt")).unwrap();
    let b = std::fs::read(resumed.join("final.ckpt")).unwrap();
    assert_eq!(a, b, "resumed checkpoint differs from uninterrupted run");
}

#[test]
fn exit_codes_are_stable() {
    let dir = tempfile::TempDir::new().unwrap();
    let config_path = write_config(dir.path());
    let config = config_path.to_str().unwrap();

    // Unknown config key: 2.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"trian": {}}"#).unwrap();
    let out = run(&["generate", "--config", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trian"));

    // Inconsistent config (window not a multiple of the model step): 2.
    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, r#"{"eval": {"window": 100}}"#).unwrap();
    let out = run(&["generate", "--config", invalid.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    // Dataset missing: 3.
    let out = run(&[
        "eval",
        "--config",
        config,
        "--oracle",
        "--out",
        dir.path().join("e").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);

    assert_success(
        &run(&["generate", "--config", config, "--split", "test"]),
        "generate",
    );

    // Missing checkpoint: 5.
    let out = run(&[
        "eval",
        "--config",
        config,
        "--checkpoint",
        dir.path().join("absent.ckpt").to_str().unwrap(),
        "--out",
        dir.path().join("e2").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checkpoint not found"));

    // Garbage checkpoint bytes: 5.
    let fake = dir.path().join("fake.ckpt");
    std::fs::write(&fake, b"not a checkpoint at all").unwrap();
    let out = run(&[
        "eval",
        "--config",
        config,
        "--checkpoint",
        fake.to_str().unwrap(),
        "--out",
        dir.path().join("e3").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 5);

    // Out-of-range inspect index: 2.
    let out = run(&[
        "inspect",
        "--config",
        config,
        "--split",
        "test",
        "--index",
        "999",
        "--out",
        dir.path().join("i").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);

    // Summary bin that no report has: 6.
    let eval_dir = dir.path().join("eval-ok");
    assert_success(
        &run(&[
            "eval",
            "--config",
            config,
            "--oracle",
            "--split",
            "test",
            "--out",
            eval_dir.to_str().unwrap(),
        ]),
        "oracle eval",
    );
    let out = run(&[
        "report",
        eval_dir.join("report-oracle.json").to_str().unwrap(),
        "--out",
        dir.path().join("m").to_str().unwrap(),
        "--summary-bins",
        "-100",
    ]);
    assert_eq!(exit_code(&out), 6);

    // Malformed report input: 3.
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{}").unwrap();
    let out = run(&[
        "report",
        junk.to_str().unwrap(),
        "--out",
        dir.path().join("m2").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);

    // Bad thread environment: 2.
    let out = Command::new(bin())
        .args(["gradcheck", "--seeds", "1"])
        .env("RADSEG_THREADS", "zebra")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn gradcheck_prints_every_case() {
    let out = run(&["gradcheck", "--seeds", "1", "--jobs", "1"]);
    assert_success(&out, "gradcheck");
    let stdout = String::from_utf8_lossy(&out.stdout);
    for case in [
        "conv1d_k3_d1",
        "conv1d_k3_d2",
        "conv1d_k3_d4",
        "conv1d_k1",
        "tconv1d",
        "maxpool1d",
        "batchnorm1d",
        "relu",
        "sigmoid",
        "loss_bce",
        "loss_dice",
        "loss_huber",
    ] {
        assert!(stdout.contains(case), "missing case {case}:\n{stdout}");
    }
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}
