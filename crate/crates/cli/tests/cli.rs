use std::path::Path;
use std::process::{Command, Output};

fn billiard(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_billiard"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BILLIARD_THREADS")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const ROTATION_HEADER: &str = "seed,n,r,T,collisions,word_len,truncated_letters,speed,prefix";

#[test]
fn zero_samples_write_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = billiard(&["rotation-set", "--n", "3", "--samples", "0"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        read(&dir.path().join("rotation_set.csv")),
        format!("{ROTATION_HEADER}\n")
    );
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("speed_histogram.svg").exists());
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "rotation-set",
        "--n",
        "5",
        "--r",
        "0.04",
        "--T",
        "50",
        "--samples",
        "200",
        "--seed",
        "7",
    ];
    assert!(billiard(&args, a.path()).status.success());
    assert!(billiard(&args, b.path()).status.success());
    let csv = read(&a.path().join("rotation_set.csv"));
    assert_eq!(csv.lines().count(), 201);
    assert_eq!(csv, read(&b.path().join("rotation_set.csv")));
    assert_eq!(
        read(&a.path().join("speed_histogram.svg")),
        read(&b.path().join("speed_histogram.svg"))
    );

    let c = tempfile::tempdir().unwrap();
    let mut other = args;
    other[10] = "8";
    assert!(billiard(&other, c.path()).status.success());
    assert_ne!(csv, read(&c.path().join("rotation_set.csv")));
}

#[test]
fn thread_count_does_not_change_output() {
    let one = tempfile::tempdir().unwrap();
    let three = tempfile::tempdir().unwrap();
    let args = [
        "entropy",
        "--n",
        "4",
        "--T",
        "40",
        "--samples",
        "800",
        "--seed",
        "3",
    ];
    let a = billiard(&[&args[..], &["--threads", "1"]].concat(), one.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = Command::new(env!("CARGO_BIN_EXE_billiard"))
        .args(args)
        .arg("--out")
        .arg(three.path())
        .env("BILLIARD_THREADS", "3")
        .output()
        .unwrap();
    assert!(b.status.success());
    assert_eq!(
        read(&one.path().join("entropy.csv")),
        read(&three.path().join("entropy.csv"))
    );
    assert!(read(&three.path().join("manifest.json")).contains("\"threads\": 3"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"n": 3, "T": 20.0, "samples": 5, "seed": 11, "r_rule": "1/(4n)"}"#,
    )
    .unwrap();
    let out = billiard(
        &[
            "rotation-set",
            "--config",
            cfg.to_str().unwrap(),
            "--samples",
            "9",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&dir.path().join("rotation_set.csv"));
    assert_eq!(csv.lines().count(), 10);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "11");
    assert_eq!(row[1], "3");
    assert_eq!(row[2].parse::<f64>().unwrap(), 1.0 / 12.0);
    assert_eq!(row[3].parse::<f64>().unwrap(), 20.0);

    let explicit = billiard(
        &[
            "rotation-set",
            "--config",
            cfg.to_str().unwrap(),
            "--r",
            "0.05",
        ],
        dir.path(),
    );
    assert!(
        explicit.status.success(),
        "{}",
        String::from_utf8_lossy(&explicit.stderr)
    );
    let row = read(&dir.path().join("rotation_set.csv"));
    assert_eq!(
        row.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .parse::<f64>()
            .unwrap(),
        0.05
    );
}

fn rejected(args: &[&str], needle: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = billiard(args, dir.path());
    assert_eq!(out.status.code(), Some(2), "{args:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "{args:?}: {err}");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn invalid_configs_exit_with_code_two() {
    rejected(
        &["rotation-set", "--n", "5", "--r", "0.2"],
        "precondition violated",
    );
    rejected(
        &["rotation-set", "--r", "0.01", "--r-rule", "1/(4n)"],
        "cannot be used with",
    );
    rejected(&["entropy", "--n", "4", "--epsilon", "0.5"], "epsilon");
    rejected(
        &["orbit", "--n", "10", "--speed", "0.9"],
        "admissible bound",
    );
    rejected(&["rotation-set", "--T", "-1"], "T =");
    rejected(&["realize", "--word", "a x3"], "invalid word");
    rejected(&["realize", "--n", "2", "--word", "a b3"], "exceeds n");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"n": 3, "r_rule": "1/n"}"#).unwrap();
    rejected(
        &["rotation-set", "--config", cfg.to_str().unwrap()],
        "r_rule",
    );
    std::fs::write(&cfg, r#"{"n": 3, "radius": 0.1}"#).unwrap();
    rejected(
        &["rotation-set", "--config", cfg.to_str().unwrap()],
        "unknown field",
    );
}

#[test]
fn passages_table_has_four_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = billiard(&["passages", "--n", "16"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&dir.path().join("passages.csv"));
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        let max: f64 = row[3].parse().unwrap();
        let bound = if k < 2 { 5f64.sqrt() } else { 2f64.sqrt() };
        assert!(max <= bound + 1.0 / 16.0, "case {}: {max}", k + 1);
    }
    assert!(read(&dir.path().join("passages.svg")).starts_with("<svg"));
}

#[test]
fn realize_and_orbit_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = billiard(&["realize", "--n", "5", "--word", "a b2 B1 a"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let letters: Vec<String> = read(&dir.path().join("crossings.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect();
    assert_eq!(letters, ["a", "b2", "B1", "a"]);
    let path: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("path.json"))).unwrap();
    assert!(path["length"].as_f64().unwrap() > 0.0);

    let out = billiard(
        &[
            "orbit", "--n", "10", "--length", "20", "--speed", "0.2", "--seed", "4",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rot: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("rotation.json"))).unwrap();
    assert!((rot["speed"].as_f64().unwrap() - 0.2).abs() < 0.2 * 0.05);
}

#[test]
fn sweep_draws_scaling_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = billiard(
        &[
            "sweep",
            "--n-values",
            "3,6",
            "--T",
            "60",
            "--samples",
            "800",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&dir.path().join("sweep.csv"));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("n,r,epsilon0,T,samples,distinct,htop_lower_est,htop_upper_formula"));
    assert!(read(&dir.path().join("entropy_scaling.svg")).contains("polyline"));
}

#[test]
fn simulate_from_given_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = billiard(
        &[
            "simulate", "--n", "2", "--r", "0.1", "--x", "0.25", "--y", "0.5", "--angle", "-1.2",
            "--T", "10",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let seg: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("segment.json"))).unwrap();
    assert!((seg["duration"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert!(read(&dir.path().join("collisions.csv")).lines().count() > 1);
}
