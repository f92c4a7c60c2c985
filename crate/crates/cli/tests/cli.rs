use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdi-decoy")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, methods: &str, sweep: &str) -> String {
    let path = dir.join("scenario.json");
    let text = format!(
        r#"{{
  "version": 1,
  "alice": {{"family": "coherent", "intensities": [0.01, 0.1, 0.5]}},
  "bob": {{"family": "coherent", "intensities": [0.01, 0.1, 0.5]}},
  "channel": {{"e_d": 0.015, "p_d": 3e-6, "e_0": 0.5}},
  "f_ec": 1.16,
  "sweep": {sweep},
  "methods": {methods}
}}"#
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const SHORT_SWEEP: &str = r#"{"loss_db_start": 0, "loss_db_end": 30, "loss_db_step": 10}"#;

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["y11_123", "y11_14"]"#, SHORT_SWEEP);
    let out = dir.path().join("out.csv");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "loss_db,true_y11,y11_123,rel_y11_123,e11_123,rate_123,y11_14,rel_y11_14,e11_14,rate_14");
    assert_eq!(lines.len(), 5);
    for row in &lines[1..] {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[3] >= v[7], "{row}");
        assert!(v[5] >= v[9], "{row}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["y11_123", "y11_234", "infinite"]"#, SHORT_SWEEP);
    for cmd in ["sweep", "optimize"] {
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "4"].iter().enumerate() {
            let out = dir.path().join(format!("{cmd}{i}.csv"));
            let o = run(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "7", "--threads", threads]);
            assert!(o.status.success());
            outputs.push(fs::read(out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
    }
}

#[test]
fn optimize_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), r#"["infinite"]"#, r#"{"loss_db_start": 20, "loss_db_end": 20, "loss_db_step": 1}"#);
    let o = run(&["optimize", "--config", &cfg]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "1.00000000e0");
}

#[test]
fn invalid_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[]", SHORT_SWEEP);
    let o = run(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("methods"));

    let cfg = write_config(dir.path(), r#"["y11_9"]"#, SHORT_SWEEP);
    let o = run(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 8"));

    let o = run(&["sweep", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["sweep", "--bogus"]).status.code(), Some(1));
}

#[test]
fn verify_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("margins.csv");
    let o = run(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("all checks passed"));
    let margins = fs::read_to_string(out).unwrap();
    assert!(margins.lines().count() > 1000);
}

#[test]
fn verify_with_lp() {
    let o = run(&["verify", "--instances", "50", "--n-max", "4", "--lp", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("lp_tightness"));
}

#[test]
fn verify_rejects_bad_flags() {
    assert_eq!(run(&["verify", "--n-max", "2"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "--instances", "0"]).status.code(), Some(1));
}

#[test]
fn shipped_config_is_the_default_scenario() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let with = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    let without = run(&["sweep"]);
    assert!(with.status.success());
    assert_eq!(with.stdout, without.stdout);
}
