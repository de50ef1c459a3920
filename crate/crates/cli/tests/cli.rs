use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"{
  "rotations": 32,
  "sphere_pairs": 256,
  "functions": ["gaussian:d=2", "gaussian:d=4:a=4,1,1,1", "band:d=4:eps=0.5"],
  "p_values": [1.0],
  "parseval": {"grid_size": 12, "m_max": 2, "rotations": 2, "max_dim": 4},
  "mc_vs_shells": true,
  "sweeps": null,
  "kernel_dims": [],
  "rd": [[4, 200]]
}"#;

fn periodlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_periodlab"))
}

fn run_all(config: &Path, out: &Path) -> std::process::ExitStatus {
    periodlab()
        .args(["run-all", "--seed", "7", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
}

#[test]
fn run_all_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_all(&config, &a).success());
    assert!(run_all(&config, &b).success());
    for name in ["report.json", "records.csv", "checks.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn rd_table_csv_to_stdout() {
    let out = periodlab()
        .args(["rd-table", "--dim", "4", "--nmax", "8", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(2), Some("1,8"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn out_of_range_theorem_is_an_error() {
    let out = periodlab()
        .args(["theorem-check", "--function", "gaussian:d=4", "--variant", "T2'", "--p", "1.2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d >= 5"));
}

#[test]
fn periodize_writes_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let status = periodlab()
        .args(["periodize", "--function", "gaussian:d=2", "--grid", "4", "--binary", "--format", "csv", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("grid.bin").exists());
    let csv = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn failing_comparison_sets_exit_code() {
    let out = periodlab()
        .args(["mc-vs-shells", "--function", "gaussian:d=4:a=3,2,1,1", "--rotations", "16", "--pairs", "64"])
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let passes = v["z"].as_f64().unwrap().abs() <= 3.0;
    assert_eq!(out.status.code() == Some(0), passes);
}
