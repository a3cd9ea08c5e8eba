//! Acceptance criterion 11: the synth -> estimate -> evaluate pipeline is
//! byte-identical across runs under a fixed seed, and malformed files fail
//! with exit code 3 and line-numbered messages. The `elapsed_ms` field of
//! the estimate report is wall time and is normalized before comparison;
//! every other byte is compared raw.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oodot(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oodot"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OODOT_THREADS")
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) {
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn normalized_estimate_json(output: &Output) -> String {
    let mut value: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("estimate JSON");
    value["elapsed_ms"] = 0.into();
    value.to_string()
}

/// Synth target bytes, val bytes, normalized estimate JSON, evaluate CSV,
/// evaluate summary, and sweep CSV for one pipeline run.
type PipelineOutputs = (Vec<u8>, Vec<u8>, String, Vec<u8>, Vec<u8>, Vec<u8>);

fn run_pipeline(dir: &Path) -> PipelineOutputs {
    for (name, n, seed) in [("t0.csv", 400, 0), ("t1.csv", 400, 1)] {
        assert_ok(&oodot(
            &[
                "synth",
                "classifier",
                "--k",
                "4",
                "--n",
                &n.to_string(),
                "--error",
                "0.25",
                "--confidence",
                "0.85",
                "--seed",
                &seed.to_string(),
                "--out",
                name,
            ],
            dir,
        ));
    }
    assert_ok(&oodot(
        &[
            "synth", "classifier", "--k", "4", "--n", "400", "--error", "0.1",
            "--confidence", "0.85", "--seed", "9", "--out", "val.csv",
        ],
        dir,
    ));
    let t0 = fs::read(dir.join("t0.csv")).unwrap();
    let val = fs::read(dir.join("val.csv")).unwrap();

    let estimate = oodot(
        &[
            "estimate",
            "--method",
            "cott",
            "--target",
            "t0.csv",
            "--probs",
            "--val",
            "val.csv",
            "--seed",
            "0",
        ],
        dir,
    );
    assert_ok(&estimate);
    let estimate_json = normalized_estimate_json(&estimate);

    let evaluate = oodot(
        &[
            "evaluate",
            "--method",
            "cot",
            "--targets",
            "t*.csv",
            "--probs",
            "--labels-required",
            "--val",
            "val.csv",
            "--seed",
            "0",
            "--csv",
            "report.csv",
        ],
        dir,
    );
    assert_ok(&evaluate);
    let report = fs::read(dir.join("report.csv")).unwrap();
    let summary = evaluate.stdout.clone();

    let sweep = oodot(
        &[
            "synth", "sweep", "--k", "3", "--n", "200", "--errors", "0.1,0.4",
            "--confidences", "0.9", "--shifts", "0.0,0.6", "--seed", "0", "--out",
            "sweep.csv",
        ],
        dir,
    );
    assert_ok(&sweep);
    let sweep_csv = fs::read(dir.join("sweep.csv")).unwrap();

    (t0, val, estimate_json, report, summary, sweep_csv)
}

#[test]
fn criterion_11_cli_round_trip() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let first = run_pipeline(dir_a.path());
    let second = run_pipeline(dir_b.path());
    assert_eq!(first.0, second.0, "synth target bytes differ");
    assert_eq!(first.1, second.1, "synth val bytes differ");
    assert_eq!(first.2, second.2, "estimate reports differ");
    assert_eq!(first.3, second.3, "evaluate CSV bytes differ");
    assert_eq!(first.4, second.4, "evaluate summary bytes differ");
    assert_eq!(first.5, second.5, "sweep CSV bytes differ");

    // Malformed fixtures: exit code 3, line-numbered messages.
    let dir = tempfile::tempdir().unwrap();
    let fixtures = [
        ("badsum.csv", "s_0,s_1\n0.6,0.6\n", ":2:"),
        ("ragged.csv", "s_0,s_1\n0.5,0.5\n0.1,0.2,0.7\n", ":3:"),
        ("inf.csv", "s_0,s_1\ninf,0.5\n", ":2:"),
    ];
    for (name, content, needle) in fixtures {
        fs::write(dir.path().join(name), content).unwrap();
        let out = oodot(
            &["estimate", "--method", "ac", "--target", name, "--probs"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(3), "{name}");
        let msg = String::from_utf8_lossy(&out.stderr).to_string();
        assert!(msg.contains(needle), "{name}: {msg}");
    }

    println!(
        "criterion 11 CLI round-trip: PASS (byte-identical pipeline, exit-3 line-numbered parse errors)"
    );
}
