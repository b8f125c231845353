use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_escobar-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("ESCOBAR_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn result(path: &Path) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["artifact"], "escobar-lab");
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
    v["result"].clone()
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"L": 5, "seed": 9, "sweep": {"samples": 16}}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join("out");
        let o = Command::new(env!("CARGO_BIN_EXE_escobar-lab"))
            .args(["sweep", "--config", cfg, "--out"])
            .arg(&out)
            .env("ESCOBAR_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let text = String::from_utf8(tables.remove(0)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# escobar-lab 0.1.0 config="));
    assert_eq!(lines.next().unwrap(), "index,seed,eps,degree,shift,value,deficit,d_hhalf,d_h1,ratio");
    assert_eq!(lines.count(), 16);
}

#[test]
fn spectrum_reports_the_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--L", "4"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = result(&dir.path().join("spectrum.json"));
    assert_eq!(summary["kernel_dim"], 3);
    assert_eq!(summary["basis_size"], 25);
    let eig = std::fs::read_to_string(dir.path().join("hessian_eigenvalues.csv")).unwrap();
    let values: Vec<f64> = eig
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 24);
    assert!(values[..3].iter().all(|v| v.abs() < 1e-8));
    assert!((values[3] - 8.0).abs() < 1e-8);
    assert!((values[23] - 24.0).abs() < 1e-8);
}

#[test]
fn unsupported_dimension_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--n", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("{3, 4}"));
}

#[test]
fn missing_config_file_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn distance_of_a_bubble_file_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bubble.json");
    std::fs::write(&input, r#"{"amplitude": 1.3, "chart": [0.2, -0.1, 0.3]}"#).unwrap();
    let o = run(&["distance", input.to_str().unwrap(), "--L", "10"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = result(&dir.path().join("distance.json"));
    let d = report["value"].as_f64().unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn minimize_reaches_the_ball_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["minimize", "--L", "4", "--seed", "3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = result(&dir.path().join("minimize_summary.json"));
    assert_eq!(s["converged"], true);
    assert!(s["gap_to_ball_constant"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn verify_subset_succeeds_and_failures_exit_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--criteria", "1,2,4"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS [")).count(), 3);
    let o = run(&["verify", "--criteria", "9"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["verify", "--criteria", "12"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
