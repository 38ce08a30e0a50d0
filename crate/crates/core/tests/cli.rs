use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn hinf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hinf")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

#[test]
fn solve_gare_scalar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hinf(&["solve-gare", "--config", &cfg("scalar.toml"), "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("gare.csv")).unwrap();
    assert!(csv.starts_with("matrix,row,col,value\n"));
    assert!((entry(&csv, "P") - (6f64.sqrt() - 2.0)).abs() < 1e-12);

    let o = hinf(&["solve-gare", "--config", &cfg("scalar.toml"), "--out", out, "--kalman"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("gare.csv")).unwrap();
    assert!((entry(&csv, "K") - (2f64.sqrt() - 1.0)).abs() < 1e-12);
}

fn entry(csv: &str, matrix: &str) -> f64 {
    let prefix = format!("{matrix},0,0,");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn zero_iterations_write_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hinf(&["train", "--config", &cfg("default.toml"), "--out", out, "--iterations", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("train.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("iter,"));
    assert!(dir.path().join("checkpoint.txt").exists());
}

#[test]
fn short_training_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hinf(&["train", "--config", &cfg("default.toml"), "--out", out, "--iterations", "20", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("train.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);

    let ckpt = dir.path().join("checkpoint.txt");
    let o = hinf(&[
        "compare",
        "--config",
        &cfg("default.toml"),
        "--out",
        out,
        "--trials",
        "2",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    // header + 4 distributions x 3 filters
    assert_eq!(csv.lines().count(), 13);

    let o = hinf(&["simulate", "--config", &cfg("default.toml"), "--out", out]);
    assert_eq!(code(&o), 0);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,steer,x1,x2,hinf_x1,hinf_x2,kalman_x1,kalman_x2\n"));
    assert_eq!(traj.lines().count(), 5001);
}

#[test]
fn missing_config_is_a_validation_error() {
    let o = hinf(&["solve-gare", "--config", "/nonexistent/x.toml"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
}

#[test]
fn malformed_configs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "[plant\na = 1"),
        ("nogamma.toml", "[plant]\na = -1.0\nc = 1.0\n[weights.quadratic]\nq = 1.0\nr = 1.0\ns = 1.0\n"),
        ("unknown.toml", "[plant]\na = -1.0\nc = 1.0\nbogus = 2\n[weights.quadratic]\nq = 1.0\nr = 1.0\ns = 1.0\ngamma = 2.0\n"),
        ("negq.toml", "[plant]\na = -1.0\nc = 1.0\n[weights.quadratic]\nq = -1.0\nr = 1.0\ns = 1.0\ngamma = 2.0\n"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let o = hinf(&["solve-gare", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let path = dir.path().join("nogamma.toml");
    let o = hinf(&["solve-gare", "--config", path.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn bad_flags_are_validation_errors() {
    assert_eq!(code(&hinf(&["train", "--config", &cfg("default.toml"), "--mode", "cubic"])), 1);
    assert_eq!(code(&hinf(&["frobnicate"])), 1);
    assert_eq!(code(&hinf(&["compare", "--config", &cfg("default.toml"), "--trials", "0"])), 1);
    assert_eq!(code(&hinf(&["--help"])), 0);
}

#[test]
fn infeasible_gamma_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.toml");
    std::fs::write(
        &path,
        "[plant]\na = 1.0\nc = 1.0\n[weights.quadratic]\nq = 1.0\nr = 1.0\ns = 1.0\ngamma = 0.1\n",
    )
    .unwrap();
    let o = hinf(&["solve-gare", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hint:"));
}

#[test]
fn unstable_checkpoint_gain_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("bad.txt");
    std::fs::write(
        &ckpt,
        "hinf-checkpoint v1\nvalue quadratic n=2\nparams 3 1 0 1\ngain 2x2\nparams 4 -100 0 0 -100\nnoise linear n=2\nparams 4 0 0 0 0\n",
    )
    .unwrap();
    let o = hinf(&[
        "compare",
        "--config",
        &cfg("default.toml"),
        "--out",
        dir.path().to_str().unwrap(),
        "--trials",
        "1",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("reinforcement"));
}
