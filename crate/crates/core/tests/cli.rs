//! End-to-end runs of the `matsense` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn matsense(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matsense"))
        .args(args)
        .current_dir(dir)
        .env_remove("MATSENSE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--help"][..],
        &["--version"],
        &["experiment", "--help"],
        &["check", "--help"],
    ] {
        ok(&matsense(args, dir.path()));
    }
    let help = matsense(&["experiment", "--help"], dir.path());
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("N,N_over_rdprime,prob_recovery,trials"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(matsense(&["nonsense"], dir.path()).status.code(), Some(1));
    assert_eq!(
        matsense(&["check", "rho", "--seed", "abc"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(matsense(&["solve"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = matsense(&["experiment", "phase", "--config", "no/such/config.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/config.json"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"trials": 3, "unknown_field": true}"#).unwrap();
    let out = matsense(&["experiment", "phase", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    ok(&matsense(
        &[
            "generate",
            "--out",
            "data",
            "--d1",
            "6",
            "--d2",
            "5",
            "--rank",
            "2",
            "--measurements",
            "60",
            "--batch-size",
            "10",
        ],
        dir.path(),
    ));
    fs::write(
        dir.path().join("solve.json"),
        r#"{"rank": 2, "eta": 1e6, "epochs": 20}"#,
    )
    .unwrap();
    let out = matsense(
        &["solve", "--data", "data", "--config", "solve.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epoch"));
}

#[test]
fn generate_and_solve_recover_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    ok(&matsense(
        &[
            "generate",
            "--out",
            "data",
            "--d1",
            "12",
            "--d2",
            "10",
            "--rank",
            "2",
            "--measurements",
            "480",
            "--batch-size",
            "48",
            "--seed",
            "3",
        ],
        dir.path(),
    ));
    for f in ["manifest.json", "matrices.lrmx", "y.lrmx", "xstar.lrmx"] {
        assert!(dir.path().join("data").join(f).exists(), "{f}");
    }
    fs::write(
        dir.path().join("solve.json"),
        r#"{"rank": 2, "epochs": 30, "inner_iters": 20}"#,
    )
    .unwrap();
    ok(&matsense(
        &["solve", "--data", "data", "--config", "solve.json", "--out", "run"],
        dir.path(),
    ));
    let trace = fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("epoch,data_passes,objective,rel_error,dist\n"));
    assert_eq!(trace.lines().count(), 32);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/summary.json")).unwrap()).unwrap();
    assert!(summary["rel_error"].as_f64().unwrap() < 1e-3, "{summary}");
}

#[test]
fn seed_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let generate = |out: &str, seed: Option<&str>, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_matsense"));
        cmd.args([
            "generate",
            "--d1",
            "4",
            "--d2",
            "3",
            "--rank",
            "1",
            "--measurements",
            "10",
            "--batch-size",
            "5",
        ])
        .args(["--out", out])
        .current_dir(dir.path())
        .env_remove("MATSENSE_SEED");
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        if let Some(v) = env {
            cmd.env("MATSENSE_SEED", v);
        }
        ok(&cmd.output().unwrap());
        fs::read(dir.path().join(out).join("y.lrmx")).unwrap()
    };
    let flag = generate("a", Some("5"), None);
    let env = generate("b", None, Some("5"));
    let both = generate("c", Some("6"), Some("5"));
    let default = generate("d", None, None);
    assert_eq!(flag, env);
    assert_ne!(flag, both);
    assert_ne!(flag, default);
}

fn assert_identical_dirs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn repeated_checks_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("rip.json"), r#"{"trials": 20}"#).unwrap();
    fs::write(dir.path().join("lemmas.json"), r#"{"instances": 30, "probes": null}"#).unwrap();
    for out in ["one", "two"] {
        ok(&matsense(
            &["check", "rip", "--config", "rip.json", "--seed", "8", "--out", out],
            dir.path(),
        ));
        ok(&matsense(
            &["check", "gradcheck", "--seed", "8", "--out", out],
            dir.path(),
        ));
        ok(&matsense(
            &[
                "check",
                "lemmas",
                "--config",
                "lemmas.json",
                "--seed",
                "8",
                "--out",
                out,
            ],
            dir.path(),
        ));
        ok(&matsense(&["check", "rho", "--out", out], dir.path()));
    }
    assert_identical_dirs(&dir.path().join("one"), &dir.path().join("two"));
    let rho: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("one/rho.json")).unwrap()).unwrap();
    assert_eq!(rho["check"], "rho");
    assert!((rho["margins"]["simplified_rho"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
}
