use std::fs;
use std::process::Command;

fn dobac(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dobac")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SHORT: [&str; 4] = ["--set", "sim.horizon=1.0", "--set", "analysis.window=[0.5, 1.0]"];

#[test]
fn run_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", "--preset", "msd-cubic-paper", "--out", out, "--decimate", "5"];
    args.extend(SHORT);
    let (code, stdout, _) = dobac(&args);
    assert_eq!(code, 0);
    assert!(stdout.contains("rms_e = "));
    let csv = dir.path().join("msd-cubic-paper.csv");
    let svg = dir.path().join("eta.svg");
    let (code, _, stderr) =
        dobac(&["plot", "--spec", "eta", "--log", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(fs::metadata(&svg).unwrap().len() > 0);
}

#[test]
fn validate_prints_derived_quantities() {
    let (code, stdout, _) = dobac(&["validate", "--preset", "msd-cubic-paper"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("k_r* = 0.8333333333333334"));
    assert!(stdout.contains("lambda_min(Q) = 1"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let (code, _, stderr) = dobac(&["run", "--preset", "msd-cubic-paper", "--set", "rejection.mode=bogus"]);
    assert_eq!(code, 2, "{stderr}");

    let mut args = vec!["run", "--preset", "msd-cubic-paper", "--out", out, "--set", "sim.guard=0.5"];
    args.extend(SHORT);
    assert_eq!(dobac(&args).0, 3);

    assert_eq!(dobac(&["plot", "--spec", "eta", "--log", "/nonexistent/x.csv", "--out", "x.svg"]).0, 4);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "#schema=something-else\nt\n0\n").unwrap();
    assert_eq!(dobac(&["plot", "--spec", "eta", "--log", bad.to_str().unwrap(), "--out", "x.svg"]).0, 2);

    let mut args = vec!["sweep", "--preset", "msd-cubic-paper", "--param", "rejection.k_eta", "--values", ",", "--out", out];
    args.extend(SHORT);
    assert_eq!(dobac(&args).0, 2);
}

#[test]
fn sweep_partial_failure_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args =
        vec!["sweep", "--preset", "msd-cubic-paper", "--param", "rejection.k_eta", "--values", "1,-1", "--out", out];
    args.extend(SHORT);
    let (code, stdout, stderr) = dobac(&args);
    assert_eq!(code, 0);
    assert!(stdout.contains("ok"));
    assert!(stderr.contains("1 of 2 runs failed"));
}
