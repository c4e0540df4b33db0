//! End-to-end tests of the `aqt` binary: artifacts, formats, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn aqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqt"))
        .args(args)
        .output()
        .expect("failed to launch aqt")
}

fn assert_ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

#[test]
fn sample_train_eval_reconstruct_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();

    let stdout = assert_ok(&aqt(&[
        "sample",
        "--state",
        "ghz:2",
        "--n",
        "1500",
        "--seed",
        "1",
        "--run-dir",
        &d("s"),
    ]));
    assert!(stdout.contains("wrote 1500 outcomes"));
    assert!(stdout.contains("exact probabilities"));
    assert!(Path::new(&d("s")).join("manifest.json").exists());
    let dataset = std::fs::read_to_string(Path::new(&d("s")).join("dataset.txt")).unwrap();
    assert!(dataset.starts_with("# aqt-dataset v1 n_qubits=2 povm=pauli4 seed=1 source="));

    let stdout = assert_ok(&aqt(&[
        "train",
        "--dataset",
        &d("s/dataset.txt"),
        "--run-dir",
        &d("t"),
        "--epochs",
        "10",
        "--batch-size",
        "64",
        "--heldout-frac",
        "0",
        "--patience",
        "100000",
        "--train-seed",
        "1",
    ]));
    assert!(stdout.contains("trained 10 epochs"));
    let trace = std::fs::read_to_string(Path::new(&d("t")).join("trace.csv")).unwrap();
    assert!(trace.starts_with("# aqt-csv v1 train-trace\nepoch,train_nll,heldout_nll\n"));
    assert_eq!(trace.lines().count(), 2 + 10);

    let stdout = assert_ok(&aqt(&[
        "eval",
        "--checkpoint",
        &d("t/model.ckpt"),
        "--state",
        "ghz:2",
        "--which",
        "fc-sampled",
        "--n-samples",
        "20000",
        "--seed",
        "2",
        "--run-dir",
        &d("e"),
    ]));
    assert!(stdout.contains("fc_sampled value="), "{stdout}");
    let fc: f64 = stdout
        .split("value=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(fc > 0.9, "fc = {fc}");

    let stdout = assert_ok(&aqt(&[
        "eval",
        "--checkpoint",
        &d("t/model.ckpt"),
        "--state",
        "ghz:2",
        "--which",
        "fq",
        "--run-dir",
        &d("q"),
    ]));
    assert!(stdout.contains("fq value="), "{stdout}");
    assert!(stdout.contains("projection_distance="));
    let dm = std::fs::read_to_string(Path::new(&d("q")).join("reconstruction.json")).unwrap();
    assert!(dm.contains("\"format\": \"aqt-dm v1\""));

    let stdout = assert_ok(&aqt(&[
        "reconstruct",
        "--dataset",
        &d("s/dataset.txt"),
        "--method",
        "mle",
        "--state",
        "ghz:2",
        "--run-dir",
        &d("r"),
    ]));
    assert!(stdout.contains("mle iterations="));
    assert!(stdout.contains("off_corner_fraction="));
    let bars = std::fs::read_to_string(Path::new(&d("r")).join("bars.csv")).unwrap();
    assert!(bars.starts_with("# aqt-csv v1 dm-bars\nrow,col,abs\n"));
    assert_eq!(bars.lines().count(), 2 + 16);
}

#[test]
fn sampling_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    for run in ["a", "b"] {
        assert_ok(&aqt(&[
            "sample",
            "--state",
            "faulty:0.25",
            "--n",
            "500",
            "--seed",
            "9",
            "--run-dir",
            &d(run),
        ]));
    }
    let a = std::fs::read(dir.path().join("a/dataset.txt")).unwrap();
    let b = std::fs::read(dir.path().join("b/dataset.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn large_system_sampling_works() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("g90").display().to_string();
    assert_ok(&aqt(&[
        "sample", "--state", "ghz:90", "--n", "200", "--seed", "3", "--run-dir", &run,
    ]));
    let text = std::fs::read_to_string(dir.path().join("g90/dataset.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201);
    assert!(lines[1..].iter().all(|l| l.len() == 90));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();

    let out = aqt(&["sample", "--state", "faulty:0.3", "--n", "0", "--run-dir", &d("x")]);
    assert_eq!(exit_code(&out), 2);

    let out = aqt(&["sample", "--state", "faulty:1.5", "--n", "10", "--run-dir", &d("y")]);
    assert_eq!(exit_code(&out), 2);

    let out = aqt(&["sample", "--state", "bell:2", "--n", "10", "--run-dir", &d("z")]);
    assert_eq!(exit_code(&out), 2);

    // corrupt dataset line is reported with its line number
    let bad = dir.path().join("bad.txt");
    std::fs::write(
        &bad,
        "# aqt-dataset v1 n_qubits=2 povm=pauli4 seed=0 source=x\n01\n07\n",
    )
    .unwrap();
    let out = aqt(&[
        "train",
        "--dataset",
        &bad.display().to_string(),
        "--run-dir",
        &d("w"),
    ]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn capacity_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    // a 10-qubit checkpoint: tiny model, one epoch of a tiny dataset
    assert_ok(&aqt(&[
        "sample", "--state", "ghz:10", "--n", "32", "--seed", "1", "--run-dir", &d("s"),
    ]));
    assert_ok(&aqt(&[
        "train",
        "--dataset",
        &d("s/dataset.txt"),
        "--run-dir",
        &d("t"),
        "--layers",
        "1",
        "--embed-dim",
        "8",
        "--heads",
        "2",
        "--ff-dim",
        "16",
        "--epochs",
        "1",
        "--heldout-frac",
        "0",
    ]));
    let out = aqt(&[
        "eval",
        "--checkpoint",
        &d("t/model.ckpt"),
        "--state",
        "ghz:10",
        "--which",
        "fq",
        "--run-dir",
        &d("e"),
    ]);
    assert_eq!(exit_code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_sets_defaults_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    assert_ok(&aqt(&[
        "sample", "--state", "ghz:2", "--n", "200", "--seed", "4", "--run-dir", &d("s"),
    ]));
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[train]\nepochs = 3\nheldout_frac = 0.0\n").unwrap();
    assert_ok(&aqt(&[
        "train",
        "--dataset",
        &d("s/dataset.txt"),
        "--config",
        &cfg.display().to_string(),
        "--run-dir",
        &d("t"),
        "--patience",
        "100000",
    ]));
    let trace = std::fs::read_to_string(dir.path().join("t/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + 3, "config epochs respected");
    // manifest echoes the resolved value
    let manifest = std::fs::read_to_string(dir.path().join("t/manifest.json")).unwrap();
    assert!(manifest.contains("\"epochs\": 3"));
    assert!(manifest.contains("\"version\""));
}

#[test]
fn eval_rejects_mismatched_state() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    assert_ok(&aqt(&[
        "sample", "--state", "ghz:2", "--n", "100", "--seed", "5", "--run-dir", &d("s"),
    ]));
    assert_ok(&aqt(&[
        "train",
        "--dataset",
        &d("s/dataset.txt"),
        "--run-dir",
        &d("t"),
        "--layers",
        "1",
        "--embed-dim",
        "8",
        "--heads",
        "2",
        "--ff-dim",
        "16",
        "--epochs",
        "1",
        "--heldout-frac",
        "0",
    ]));
    let out = aqt(&[
        "eval",
        "--checkpoint",
        &d("t/model.ckpt"),
        "--state",
        "ghz:3",
        "--which",
        "fc-sampled",
        "--run-dir",
        &d("e"),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn reconstruct_linear_on_external_dataset() {
    // ingestion path: a hand-written dataset file in the normative format
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();
    let mut text = String::from("# aqt-dataset v1 n_qubits=2 povm=pauli4 seed=0 source=external\n");
    // every outcome once: the uniform distribution
    for i in 0..16 {
        text.push(char::from(b'0' + (i / 4) as u8));
        text.push(char::from(b'0' + (i % 4) as u8));
        text.push('\n');
    }
    let data_path = dir.path().join("ext.txt");
    std::fs::write(&data_path, text).unwrap();
    let stdout = assert_ok(&aqt(&[
        "reconstruct",
        "--dataset",
        &data_path.display().to_string(),
        "--method",
        "linear",
        "--run-dir",
        &d("r"),
    ]));
    assert!(stdout.contains("projection_distance="));
    assert!(dir.path().join("r/dm.json").exists());
    assert!(dir.path().join("r/dm_raw.json").exists());
}

#[test]
fn tiny_sweep_scaling_writes_deterministic_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let run_a = dir.path().join("a").display().to_string();
    let run_b = dir.path().join("b").display().to_string();
    let args = |run: &str| {
        vec![
            "sweep-scaling".to_string(),
            "--qubits".into(),
            "2".into(),
            "--ladder".into(),
            "40,80".into(),
            "--threshold".into(),
            "0.9".into(),
            "--seeds".into(),
            "1".into(),
            "--fc-samples".into(),
            "4000".into(),
            "--epochs".into(),
            "4".into(),
            "--batch-size".into(),
            "32".into(),
            "--heldout-frac".into(),
            "0".into(),
            "--patience".into(),
            "100000".into(),
            "--run-dir".into(),
            run.to_string(),
        ]
    };
    for run in [&run_a, &run_b] {
        let out = Command::new(env!("CARGO_BIN_EXE_aqt"))
            .args(args(run))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let results_a = std::fs::read(Path::new(&run_a).join("results.csv")).unwrap();
    let results_b = std::fs::read(Path::new(&run_b).join("results.csv")).unwrap();
    assert_eq!(results_a, results_b, "results.csv must be byte-identical");
    let ns_a = std::fs::read(Path::new(&run_a).join("ns_star.csv")).unwrap();
    let ns_b = std::fs::read(Path::new(&run_b).join("ns_star.csv")).unwrap();
    assert_eq!(ns_a, ns_b);
    let text = String::from_utf8(results_a).unwrap();
    assert!(text.starts_with("# aqt-csv v1 sweep-scaling-results\nn_qubits,n_samples,fc_value,fc_std_error,seed\n"));
    assert!(Path::new(&run_a).join("timings.csv").exists());
    assert!(Path::new(&run_a).join("manifest.json").exists());
}

#[test]
fn sweep_rejects_bad_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("x").display().to_string();
    let out = aqt(&[
        "sweep-scaling",
        "--qubits",
        "2",
        "--ladder",
        "100,50",
        "--run-dir",
        &run,
    ]);
    assert_eq!(exit_code(&out), 2);
}
