use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_branchtail"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{
    "name": "small",
    "law": {"model": "independent_iid", "params": {
        "q": {"kind": "exponential", "params": {"rate": 1}},
        "n": {"kind": "zeta_tail", "params": {"alpha": 2.5}},
        "c": {"kind": "uniform", "params": {"a": 0, "b": 0.5}}}},
    "alpha": 2.5,
    "dominant": "ZN",
    "pool_size": 5000,
    "depth": 6,
    "bootstrap_B": 200,
    "quantile_grid": [0.05],
    "min_exceedances": 20,
    "seed": 3
}"#;

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    std::fs::write(&path, SMALL).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn constants_prints_json() {
    let o = run(&["constants", scenario("zn-baseline").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["constants"]["h_limit"].as_f64().unwrap() > 3.0);
    assert_eq!(v["regime"]["regime"], "ZN_DOMINATES");
}

#[test]
fn kesten_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        scenario("kesten-critical").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("rho_alpha = 1 excluded"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn pool_against_itself_has_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let pool = dir.path().join("r.pool");
    let o = run(&["simulate", &cfg, "--out", pool.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = pool.to_str().unwrap();
    let o = run(&["ks", p, p]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.0");
}

#[test]
fn simulate_tail_and_ks_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let r = dir.path().join("r.csv");
    let w = dir.path().join("w.pool");
    let exact = dir.path().join("exact.pool");
    for (out, extra) in [
        (&r, vec!["--csv"]),
        (&w, vec!["--kind", "w", "--generation", "2"]),
        (&exact, vec!["--exact", "--generation", "3"]),
    ] {
        let mut args = vec!["simulate", &cfg, "--out", out.to_str().unwrap()];
        args.extend(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert!(std::fs::read_to_string(&r).unwrap().starts_with("value\n"));

    let o = run(&[
        "tail",
        "--num",
        r.to_str().unwrap(),
        "--den",
        w.to_str().unwrap(),
        "--grid",
        "0.1,0.05",
        "--min-exceedances",
        "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("p,x,ccdf_num,ccdf_den,ratio,ci_low,ci_high\n"));

    let o = run(&[
        "--format",
        "json",
        "tail",
        "--num",
        r.to_str().unwrap(),
        "--den",
        w.to_str().unwrap(),
        "--grid",
        "0.1",
        "--min-exceedances",
        "20",
        "--bootstrap",
        "200",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["hill_curve"].is_object());

    let o = run(&[
        "--format",
        "json",
        "ks",
        r.to_str().unwrap(),
        exact.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = v["distance"].as_f64().unwrap();
    assert!(d > 0.0 && d < 1.0);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.pool");
    let b = dir.path().join("b.pool");
    let c = dir.path().join("c.pool");
    run(&["simulate", &cfg, "--out", a.to_str().unwrap()]);
    run(&[
        "--seed",
        "3",
        "simulate",
        &cfg,
        "--out",
        b.to_str().unwrap(),
    ]);
    run(&[
        "--seed",
        "4",
        "simulate",
        &cfg,
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn verify_writes_a_report_and_exit_code_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("report");
    let o = run(&[
        "--threads",
        "2",
        "verify",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    for f in ["report.json", "tail.csv", "hill.csv", "decay.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let expected = if report["passed"].as_bool().unwrap() {
        0
    } else {
        2
    };
    assert_eq!(o.status.code(), Some(expected), "{}", stdout(&o));
    assert!(stdout(&o).contains("tail_band"));
}

#[test]
fn usage_errors_exit_nonzero() {
    let o = run(&["simulate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
    let o = run(&["ks", "/nonexistent/a.pool", "/nonexistent/b.pool"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}
