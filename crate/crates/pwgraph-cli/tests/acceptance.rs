//! Acceptance gate for the command-line driver: rerunning the same
//! reconstruction invocation must produce byte-identical artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pwgraph"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name))
        .unwrap_or_else(|e| panic!("expected artifact {name}: {e}"))
}

fn run_reconstruction(out_dir: &Path) -> Output {
    let output = binary()
        .args([
            "reconstruct",
            "--graph",
            "cycle:64",
            "--remove",
            "segments:4x3",
            "--omega",
            "0.25",
            "--eps",
            "auto",
            "--lmax",
            "5",
            "--seed",
            "7001",
            "--out",
        ])
        .arg(out_dir)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "reconstruction failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn criterion_9_repeated_runs_are_byte_identical() {
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let outputs: Vec<Output> = dirs.iter().map(|d| run_reconstruction(d.path())).collect();

    assert_eq!(
        outputs[0].stdout, outputs[1].stdout,
        "stdout differs between identical runs"
    );
    for name in ["spectrum.csv", "lambda.json", "trace.csv", "summary.json"] {
        let first = read(dirs[0].path(), name);
        let second = read(dirs[1].path(), name);
        assert_eq!(first, second, "{name} differs between identical runs");
    }

    // The comparison only means something if the run did real work: a full
    // trace with measured errors inside their geometric bounds.
    let trace = String::from_utf8(read(dirs[0].path(), "trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("l,k,error,bound,gram_condition"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 3, "expected at least 3 iterates:\n{trace}");
    for row in &rows {
        let error_field = row.split(',').nth(2).unwrap();
        assert!(
            !error_field.is_empty(),
            "ground truth was synthesized, so errors must be measured: {row}"
        );
    }
    let summary = String::from_utf8(read(dirs[0].path(), "summary.json")).unwrap();
    assert!(summary.contains("\"bound_satisfied\": true"), "{summary}");
    assert!(summary.contains("\"stop_reason\": \"ill_conditioned\""));

    println!(
        "ACCEPTANCE 9 (deterministic CLI reruns): PASS, {} artifacts byte-identical, {} iterates",
        4,
        rows.len()
    );
}
