//! End-to-end tests of the `nrs` binary: exit codes, file outputs, and the
//! documented command behaviors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nrs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nrs"))
}

fn run(args: &[&str]) -> Output {
    nrs().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Two well-separated classes; any sane model fits them exactly.
fn write_blobs(path: &Path, n: usize, d: usize) {
    let mut text = String::new();
    for i in 0..n {
        let class = i % 2;
        let center: f64 = if class == 0 { -2.0 } else { 2.0 };
        text.push_str(&format!("{class}"));
        for j in 0..d {
            // deterministic jitter, no RNG needed
            let v = center + 0.3 * (((i * d + j) % 7) as f64 / 7.0 - 0.5);
            text.push_str(&format!(" {}:{v}", j + 1));
        }
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn train_args<'a>(data: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train",
        "--train-path",
        data,
        "--dim",
        "4",
        "--n-mul",
        "2",
        "--n-h",
        "2",
        "--epochs",
        "30",
        "--batch-size",
        "8",
        "--lr",
        "0.01",
        "--val-fraction",
        "0",
        "--out-dir",
        out,
    ]
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("usage: nrs"));
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = run(&["explode"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["train", "--frobnicate", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dangling_flag_value_is_a_usage_error() {
    let out = run(&["train", "--epochs"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_data_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "train",
        "--train-path",
        "/no/such/file.svm",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_without_grid_is_a_usage_error() {
    let out = run(&["sweep", "--train-path", "whatever.svm"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "sweep",
        "--train-path",
        "whatever.svm",
        "--sweep-param",
        "nmul",
        "--sweep-values",
        "",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_writes_checkpoints_metrics_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.svm");
    write_blobs(&data, 32, 4);
    let out_dir = dir.path().join("run");
    let out = run(&train_args(data.to_str().unwrap(), out_dir.to_str().unwrap()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["final.ckpt", "best.ckpt", "metrics.jsonl", "config.resolved"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let metrics = fs::read_to_string(out_dir.join("metrics.jsonl")).unwrap();
    assert!(metrics.lines().count() >= 30);
    for line in metrics.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("epoch").is_some() && v.get("metric").is_some());
    }
}

#[test]
fn eval_of_an_overfit_tiny_dataset_reports_accuracy_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.svm");
    write_blobs(&data, 32, 4);
    let out_dir = dir.path().join("run");
    let data_str = data.to_str().unwrap();
    let out = run(&train_args(data_str, out_dir.to_str().unwrap()));
    assert!(out.status.success());

    let ckpt = out_dir.join("final.ckpt");
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--test-path",
        data_str,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let json_line = text.lines().find(|l| l.starts_with('{')).expect("json line");
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(v["metric"], "accuracy");
    assert_eq!(v["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn eval_with_mismatched_dimension_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.svm");
    write_blobs(&data, 24, 4);
    let out_dir = dir.path().join("run");
    let out = run(&train_args(data.to_str().unwrap(), out_dir.to_str().unwrap()));
    assert!(out.status.success());

    // a dataset whose max feature index exceeds the checkpoint's d
    let wide = dir.path().join("wide.svm");
    write_blobs(&wide, 8, 9);
    let out = run(&[
        "eval",
        "--checkpoint",
        out_dir.join("final.ckpt").to_str().unwrap(),
        "--test-path",
        wide.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_without_checkpoint_is_a_usage_error() {
    let out = run(&["eval", "--test-path", "x.svm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gradcheck_default_toy_config_passes() {
    let out = run(&["gradcheck"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("gradient check: PASS"));
}

#[test]
fn count_matches_the_closed_form_for_the_satimage_shape() {
    let out = run(&[
        "count", "--dim", "36", "--n-mul", "20", "--n-h", "3", "--classes", "6",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let json_line = text.lines().find(|l| l.starts_with('{')).unwrap();
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    // conv params = nH^2 * C = 9 * 720
    assert_eq!(v["layers"][1]["params"].as_u64().unwrap(), 6480);
    assert_eq!(v["conv"]["param_reduction_vs_standard"].as_u64().unwrap(), 720);
    assert_eq!(
        v["conv"]["mac_reduction_vs_standard"].as_u64().unwrap(),
        720 * 9
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("base.conf");
    fs::write(&cfg_path, "n_mul = 4\nepochs = 7\n").unwrap();
    // count prints the resolved model: n_mul from the flag, not the file
    let out = run(&[
        "count",
        "--config",
        cfg_path.to_str().unwrap(),
        "--n-mul",
        "5",
        "--dim",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let json_line = text.lines().find(|l| l.starts_with('{')).unwrap();
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    // C = n_mul * d = 50, conv params = 9 * 50
    assert_eq!(v["layers"][1]["params"].as_u64().unwrap(), 450);
}

#[test]
fn sweep_of_size_one_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.svm");
    write_blobs(&data, 40, 4);
    let out_dir = dir.path().join("sweep");
    let out = run(&[
        "sweep",
        "--train-path",
        data.to_str().unwrap(),
        "--dim",
        "4",
        "--n-h",
        "2",
        "--epochs",
        "2",
        "--batch-size",
        "8",
        "--val-fraction",
        "0.2",
        "--sweep-param",
        "nmul",
        "--sweep-values",
        "2",
        "--repeats",
        "1",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("sweep.csv").exists());
    assert!(out_dir.join("sweep.jsonl").exists());
    assert!(out_dir.join("sweep.summary.json").exists());
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("config,seed,epoch,split,metric,value"));
}

#[test]
fn ablate_writes_four_modes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.svm");
    write_blobs(&data, 40, 4);
    let out_dir = dir.path().join("ablate");
    let out = run(&[
        "ablate",
        "--train-path",
        data.to_str().unwrap(),
        "--dim",
        "4",
        "--n-mul",
        "2",
        "--n-h",
        "2",
        "--epochs",
        "2",
        "--batch-size",
        "8",
        "--val-fraction",
        "0.2",
        "--repeats",
        "1",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for mode in [
        "expansion=dense_trainable",
        "expansion=sparse_trainable",
        "expansion=dense_frozen",
        "expansion=sparse_frozen",
    ] {
        assert!(text.contains(mode), "missing row {mode} in:\n{text}");
    }
}

#[test]
fn out_dir_env_var_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.svm");
    write_blobs(&data, 24, 4);
    let out_dir: PathBuf = dir.path().join("from_env");
    let out = nrs()
        .env("NRS_OUT_DIR", out_dir.to_str().unwrap())
        .args([
            "train",
            "--train-path",
            data.to_str().unwrap(),
            "--dim",
            "4",
            "--n-mul",
            "2",
            "--n-h",
            "2",
            "--epochs",
            "1",
            "--batch-size",
            "8",
            "--val-fraction",
            "0",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("final.ckpt").exists());
}
