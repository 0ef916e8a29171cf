//! End-to-end checks of the command-line front door: artifact shapes,
//! manifests, determinism and exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trifield"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn diameter_reports_floor_and_feasibility() {
    let out = bin()
        .args(["diameter", "--n", "4", "--s0", "2", "--s1", "2", "--s2", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,linf,lower_bound,feasible");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "4");
    let linf: f64 = row[1].parse().unwrap();
    let floor: f64 = row[2].parse().unwrap();
    assert_eq!(floor, 4.0);
    assert!(linf >= floor);
    assert_eq!(row[3], "true");
}

#[test]
fn zero_slack_diameter_is_zero() {
    let out = bin()
        .args(["diameter", "--n", "2", "--s0", "0", "--s1", "0", "--s2", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let linf: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(linf, 0.0);
}

#[test]
fn sample_run_is_reproducible_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "sample",
                "--n",
                "3",
                "--samples",
                "10",
                "--seed",
                "42",
                "--burn-in",
                "100",
                "--thin",
                "5",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = read(&out_a);
    assert_eq!(a, read(&out_b), "same config must give identical bytes");
    assert_eq!(a.lines().count(), 10);
    assert_eq!(a.lines().next().unwrap().split(',').count(), 9);

    let manifest = read(&dir.path().join("a.csv.manifest.json"));
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["config"]["seed"], 42);
    assert_eq!(parsed["config"]["command"], "sample");
    let hash_a = parsed["content_hash"].as_str().unwrap().to_string();
    let manifest_b: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("b.csv.manifest.json"))).unwrap();
    assert_eq!(hash_a, manifest_b["content_hash"].as_str().unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "n=3\nseed=7\nsamples=5\nburn_in=50\nthin=2\n").unwrap();
    let out_path = dir.path().join("s.csv");
    let status = bin()
        .args(["sample", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "9", "--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("s.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["config"]["n"], 3);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    // degenerate torus
    let out = bin().args(["diameter", "--n", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // zero sample count
    let out = bin()
        .args(["concentration", "--n", "3", "--samples", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // unknown config key
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "nope=1\n").unwrap();
    let out = bin().args(["sample", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // exact oracle beyond n = 2
    let out = bin().args(["volume", "--n", "3", "--exact"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_contains_quoted_eigenvalue() {
    let out = bin()
        .args(["spectrum", "--n", "4", "--w0", "1", "--w1", "1", "--w2", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("2,2,"))
        .expect("frequency (2,2) present");
    let lambda: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((lambda + 4.0).abs() < 1e-12);
    assert_eq!(text.lines().count(), 17); // header + 16 frequencies
}

#[test]
fn exact_volume_row_shape() {
    let out = bin()
        .args(["volume", "--n", "2", "--exact"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,s0,s1,s2,log_volume,stderr_log,f_n,w0,w1,w2\n"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let logv: f64 = row[4].parse().unwrap();
    assert!((logv - 8.0f64.ln()).abs() < 1e-9);
    let f: f64 = row[6].parse().unwrap();
    assert!((f - 2.0).abs() < 1e-9);
}

#[test]
fn oversized_eps0_gives_zero_tail() {
    // eps0 above (s1+s2)/4 puts the threshold beyond anything the
    // polytope reaches at n = 4; the tail fraction must be exactly zero.
    let out = bin()
        .args([
            "concentration",
            "--n",
            "4",
            "--eps0",
            "1.05",
            "--samples",
            "300",
            "--seed",
            "11",
            "--burn-in",
            "400",
            "--thin",
            "8",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let p: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(p, 0.0);
}

#[test]
fn concentration_writes_one_row_per_side() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("conc.csv");
    let status = bin()
        .args([
            "concentration",
            "--n-list",
            "2,3",
            "--samples",
            "200",
            "--eps0",
            "0.2",
            "--seed",
            "5",
            "--burn-in",
            "100",
            "--thin",
            "3",
            "--out",
        ])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = read(&out_path);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,eps0,p_hat,stderr");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,"));
    assert!(lines[2].starts_with("3,"));
}
