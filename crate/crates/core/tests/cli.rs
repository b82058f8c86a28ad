use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperchoq"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("HYPERCHOQ_THREADS", "2").output().expect("spawn hyperchoq")
}

fn scratch_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hyperchoq-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

fn table(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(2)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn green_table_matches_closed_form() {
    let out = run(&["kernel", "--kind", "green", "--dim", "3", "--alpha", "2", "--points", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# hyperchoq "));
    assert_eq!(text.lines().nth(1), Some("rho,value"));
    let rows = table(&text);
    assert_eq!(rows.len(), 40);
    for (rho, v) in rows {
        let exact = (-rho).exp() / (4.0 * PI * rho.sinh());
        assert!((v / exact - 1.0).abs() < 1e-8, "rho {rho}: {v} vs {exact}");
    }
}

#[test]
fn heat_table_at_origin() {
    let out = run(&["kernel", "--kind", "heat", "--dim", "3", "--t", "1", "--rho-min", "0", "--points", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = table(&String::from_utf8(out.stdout).unwrap());
    let p0 = (4.0 * PI).powf(-1.5) * (-1f64).exp();
    assert!((rows[0].1 / p0 - 1.0).abs() < 1e-12);
}

#[test]
fn invalid_inputs_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["kernel", "--kind", "green", "--dim", "3", "--alpha", "5"],
        &["kernel", "--kind", "green", "--dim", "3"],
        &["kernel", "--kind", "heat", "--dim", "3", "--t", "-1"],
        &["kernel", "--kind", "heat", "--dim", "1", "--t", "1"],
        &["solve", "--lambda", "1.0", "--out", "unused.csv"],
        &["solve", "--p", "5", "--out", "unused.csv"],
        &["solve", "--p", "1.5", "--out", "unused.csv"],
        &["solve", "--alpha", "3", "--out", "unused.csv"],
        &["verify", "--suite", "nothing"],
        &["no-such-command"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    assert!(!PathBuf::from("unused.csv").exists());
}

#[test]
fn critical_exponent_is_named() {
    let out = run(&["solve", "--p", "5", "--out", "unused.csv"]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("critical"), "{msg}");
}

#[test]
fn unwritable_output_exits_with_one() {
    let out = run(&["kernel", "--kind", "heat", "--dim", "3", "--t", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn version_flag() {
    let out = run(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn solve_is_deterministic_and_reports() {
    let dir = scratch_dir("solve");
    let csv = dir.join("gs.csv");
    let csv_s = csv.to_str().unwrap();
    let args = ["solve", "--nodes", "300", "--rmax", "20", "--out", csv_s];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let a = fs::read(&csv).unwrap();
    let ja = fs::read(dir.join("gs.json")).unwrap();
    let second = bin().args(args).env("HYPERCHOQ_THREADS", "1").output().unwrap();
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(a, fs::read(&csv).unwrap());
    assert_eq!(ja, fs::read(dir.join("gs.json")).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    for key in ["zeta", "nehari_defect", "el_residual", "iterations", "version", "invocation"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!(report["invocation"].as_str().unwrap().starts_with("hyperchoq solve"));
    assert!(report["nehari_defect"].as_f64().unwrap() < 1e-10);
    assert!(report["monotone"].as_bool().unwrap());
    let rows = table(&String::from_utf8(a).unwrap());
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == 0.0));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn solve_from_seed_file() {
    let dir = scratch_dir("seed");
    let seed = dir.join("seed.csv");
    let mut text = String::from("# seed\nrho,value\n");
    for i in 0..50 {
        let r = 0.2 * i as f64;
        text.push_str(&format!("{r},{}\n", (-r * r).exp()));
    }
    fs::write(&seed, text).unwrap();
    let out_csv = dir.join("gs.csv");
    let out = run(&[
        "solve",
        "--nodes",
        "300",
        "--rmax",
        "20",
        "--seed-file",
        seed.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn exhausted_iterations_exit_with_four_and_keep_partial() {
    let dir = scratch_dir("partial");
    let csv = dir.join("gs.csv");
    let out = run(&["solve", "--nodes", "300", "--rmax", "20", "--max-iters", "2", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!csv.exists());
    assert!(dir.join("gs.csv.partial").exists());
    fs::remove_dir_all(dir).ok();
}

#[test]
fn verify_spectrum_writes_sorted_json() {
    let dir = scratch_dir("verify");
    let path = dir.join("spectrum.json");
    let out = run(&["verify", "--suite", "spectrum", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let checks = v.as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"].as_bool() == Some(true)));
    fs::remove_dir_all(dir).ok();
}
