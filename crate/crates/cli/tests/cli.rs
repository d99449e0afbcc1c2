use std::path::Path;
use std::process::{Command, Output};

fn irsap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irsap")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
seed = 7
trials = 2
N = [10, 10, 0, 0]
[ao]
Gamma = 10
Gamma_r = 100
[design]
D = 2
[sweep]
D = [1, 2]
"#;

fn config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn design_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = irsap(&["design", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("D=2 d=2 objective="));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let file: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries = file["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e["phases"].as_array().unwrap().len() == 20));
}

#[test]
fn eval_writes_csv_and_sidecar_using_a_saved_codebook() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let book = dir.path().join("book.json");
    assert!(irsap(&["design", "--config", &cfg, "--out", book.to_str().unwrap()]).status.success());
    let out = dir.path().join("out");
    let o = irsap(&[
        "eval",
        "--config",
        &cfg,
        "--experiment",
        "coverage-vs-D",
        "--codebook",
        book.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("coverage-vs-D.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "D,proposed,random,dft,unity,no-irs");
    assert_eq!(lines.count(), 2);
    let meta = std::fs::read_to_string(out.join("coverage-vs-D.json")).unwrap();
    assert!(meta.contains("\"config_hash\"") && meta.contains("\"seed\": 7"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);

    let o = irsap(&["eval", "--config", &cfg, "--experiment", "fig-99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig-99"));

    let zero = config(dir.path(), "zero.toml", "trials = 0");
    let o = irsap(&["eval", "--config", &zero, "--experiment", "rate-vs-D"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trials"));

    let book = dir.path().join("book.json");
    assert!(irsap(&["design", "--config", &cfg, "--out", book.to_str().unwrap()]).status.success());
    let moved = config(dir.path(), "moved.toml", &format!("{SMALL}\n[radome]\nH_AR = 4.0\n"));
    let o = irsap(&["eval", "--config", &moved, "--experiment", "rate-vs-D", "--codebook", book.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let starved = config(dir.path(), "starved.toml", &format!("{SMALL}\n[sdp]\nmax_iterations = 1\n"));
    let o = irsap(&["design", "--config", &starved, "--out", dir.path().join("x.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("sector"), "{}", stderr(&o));
}

#[test]
fn patterns_emit_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &format!("{SMALL}\n[patterns]\nelevation_points = 5\nazimuth_samples = 12\n"));
    let book = dir.path().join("book.json");
    assert!(irsap(&["design", "--config", &cfg, "--out", book.to_str().unwrap()]).status.success());
    let out = dir.path().join("p");
    let o = irsap(&["patterns", "--config", &cfg, "--codebook", book.to_str().unwrap(), "--index", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let az = std::fs::read_to_string(out.join("pattern_D2_d2_azimuth.csv")).unwrap();
    let rows: Vec<&str> = az.lines().collect();
    assert_eq!(rows[0], "phi,effective,reflection,direct");
    assert_eq!(rows.len(), 13);
    // the direct path does not depend on azimuth
    let direct: Vec<f64> = rows[1..].iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(direct.iter().all(|d| (d - direct[0]).abs() < 1e-12 * direct[0]));
    let el = std::fs::read_to_string(out.join("pattern_D2_d2_elevation.csv")).unwrap();
    assert!(el.lines().nth(1).unwrap().starts_with("0,"));

    let o = irsap(&["patterns", "--config", &cfg, "--codebook", book.to_str().unwrap(), "--index", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_check_passes_on_a_small_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", "N = [2, 0, 2, 1]\n[ao]\nL = 4\n[design]\nD = 4\n");
    let o = irsap(&["oracle-check", "--config", &cfg, "--cases", "20"]);
    assert!(o.status.success(), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("16-level optimum"));
}
