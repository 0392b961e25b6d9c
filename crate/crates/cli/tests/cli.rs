use std::path::Path;
use std::process::{Command, Output};

fn bhatt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhatt"))
        .args(args)
        .env_remove("BHATT_CONFIG")
        .output()
        .expect("spawn bhatt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn bound(table: &str, kind: &str) -> Option<f64> {
    table.lines().find_map(|l| {
        let f: Vec<&str> = l.split_whitespace().collect();
        (f.len() >= 3 && f[1] == kind).then(|| f[2].parse().unwrap())
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-5 * b.abs()
}

/// Two outcomes with p = (θ², 1 − θ²) at θ = 0.6.
fn quadratic_file(dir: &Path) -> String {
    let path = dir.join("quad2.tsv");
    std::fs::write(&path, "# theta0=0.6 order=2\nx0 0.36 1.2 2\nx1 0.64 -1.2 -2\n").unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn qubit_bounds_table() {
    let o = bhatt(&["bounds", "--scenario", "qubit", "--lambda", "0.25", "--theta0", "0.1", "--order", "2"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(close(bound(&out, "QCRB").unwrap(), 25.0), "{out}");
    assert!(close(bound(&out, "QBhB").unwrap(), 11743.75), "{out}");
}

#[test]
fn strict_divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = quadratic_file(dir.path());
    let relaxed = bhatt(&["bounds", "--model-file", &file, "--order", "2"]);
    assert_eq!(relaxed.status.code(), Some(0), "{relaxed:?}");
    assert!(stdout(&relaxed).contains("divergent"));
    let strict = bhatt(&["bounds", "--model-file", &file, "--order", "2", "--strict"]);
    assert_eq!(strict.status.code(), Some(2), "{strict:?}");
}

#[test]
fn exists_reports_unsolvable_order() {
    let dir = tempfile::tempdir().unwrap();
    let file = quadratic_file(dir.path());
    let o = bhatt(&["exists", "--model-file", &file, "--order", "2"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let row = out
        .lines()
        .find(|l| l.trim_start().starts_with('2'))
        .unwrap_or_else(|| panic!("no order-2 row in\n{out}"));
    assert!(row.contains("unsolvable"), "{row}");
}

#[test]
fn configuration_errors_exit_three() {
    assert_eq!(bhatt(&["bounds", "--scenario", "no-such-model"]).status.code(), Some(3));
    assert_eq!(bhatt(&["bounds", "--scenario", "qubit", "--colour", "red"]).status.code(), Some(3));
    assert_eq!(bhatt(&["bounds"]).status.code(), Some(3));
    assert_eq!(bhatt(&["bounds", "--scenario", "qubit", "--order", "0"]).status.code(), Some(3));
    assert_eq!(bhatt(&["bounds", "--model-file", "/nonexistent/model.tsv"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let file = quadratic_file(dir.path());
    assert_eq!(bhatt(&["scan", "--model-file", &file]).status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scenario = \"qubit\"\nlambda = 0.25\ntheta0 = 0.1\norder = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let one = stdout(&bhatt(&["bounds", "--config", cfg]));
    assert!(bound(&one, "QBhB").is_none(), "{one}");
    let two = bhatt(&["bounds", "--config", cfg, "--order", "2"]);
    assert!(two.status.success());
    assert!(close(bound(&stdout(&two), "QBhB").unwrap(), 11743.75));
    let env = Command::new(env!("CARGO_BIN_EXE_bhatt"))
        .args(["bounds"])
        .env("BHATT_CONFIG", cfg)
        .output()
        .unwrap();
    assert_eq!(stdout(&env), one);
}

#[test]
fn scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let o = bhatt(&[
        "scan", "--scenario", "bernoulli", "--grid", "0.4:0.6:5", "--out", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,estimator,bias,variance,mse,bound_cr,bound_bh"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10, "{text}");
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 7);
        let (bias, var, mse): (f64, f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap());
        assert!((mse - (var + bias * bias)).abs() <= 1e-12 * mse.max(1.0));
    }
}
