use std::path::Path;
use std::process::{Command, Output};

use tsid::tf::logspace;
use tsid::TransferFunction;

fn tsid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsid"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_system(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("system.toml");
    std::fs::write(
        &p,
        "sampling_time = 1.0\n\n[[process]]\nnum = [0.0, 0.4, 0.2]\nden = [1.0, -1.2, 0.5]\n",
    )
    .unwrap();
    p
}

fn write_signal(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("signal.toml");
    std::fs::write(
        &p,
        "switching_probability = 0.3\namplitude = 1.0\nlength = 1500\nsampling_time = 1.0\nseed = 4\n",
    )
    .unwrap();
    p
}

fn coeffs(v: &toml::Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_float().unwrap())
        .collect()
}

#[test]
fn gbn_writes_one_row_per_sample() {
    let o = tsid(&[
        "gbn",
        "--length",
        "50",
        "--sampling-time",
        "0.5",
        "--switching-probability",
        "0.2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,u1");
    assert_eq!(rows.len(), 51);
    assert!(rows[1..]
        .iter()
        .all(|r| r.ends_with(",1") || r.ends_with(",-1")));
}

#[test]
fn simulate_then_identify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let model = dir.path().join("model.toml");
    let residuals = dir.path().join("res.csv");
    let o = tsid(&[
        "simulate",
        "--system",
        path(&write_system(dir.path())),
        "--signal",
        path(&write_signal(dir.path())),
        "-o",
        path(&data),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tsid(&[
        "identify",
        "--data",
        path(&data),
        "--method",
        "oe",
        "--order",
        "2",
        "--model-out",
        path(&model),
        "--residuals-out",
        path(&residuals),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("relative_error=") && report.contains("converged=true"));

    let file: toml::Value = toml::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    let p = &file["process"][0];
    let est = TransferFunction::discrete(&coeffs(&p["num"]), &coeffs(&p["den"]), 1.0).unwrap();
    let truth = TransferFunction::discrete(&[0.0, 0.4, 0.2], &[1.0, -1.2, 0.5], 1.0).unwrap();
    for w in logspace(1e-3, std::f64::consts::PI, 40) {
        let t = truth.freq_response(w);
        assert!((est.freq_response(w) - t).norm() < 1e-4 * t.norm(), "w={w}");
    }
    let res = std::fs::read_to_string(&residuals).unwrap();
    assert_eq!(res.lines().next(), Some("k,residual"));
    assert_eq!(res.lines().count(), 1501);
}

#[test]
fn noisy_box_jenkins_and_filsub_fits_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let system = dir.path().join("two_scale.toml");
    std::fs::write(
        &system,
        "[[process]]\nnum = [1.5, 301.0]\nden = [1.0, 301.0, 300.0]\n",
    )
    .unwrap();
    let signal = dir.path().join("signal.toml");
    std::fs::write(
        &signal,
        "switching_probability = 0.02\namplitude = 1.0\nlength = 40000\nsampling_time = 0.1\nseed = 2\n",
    )
    .unwrap();
    let o = tsid(&[
        "simulate",
        "--system",
        path(&system),
        "--signal",
        path(&signal),
        "--noise-to-signal",
        "0.05",
        "--colored",
        "-o",
        path(&data),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tsid(&[
        "identify",
        "--data",
        path(&data),
        "--method",
        "bj",
        "--order",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = dir.path().join("fs.toml");
    let o = tsid(&[
        "identify",
        "--data",
        path(&data),
        "--method",
        "filsub",
        "--fast-cutoff",
        "1.0",
        "--slow-cutoff",
        "0.003333",
        "--fast-order",
        "1",
        "--slow-order",
        "1",
        "--model-out",
        path(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let file: toml::Value = toml::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(file["fast"].as_array().unwrap().len(), 1);
    assert_eq!(file["slow"].as_array().unwrap().len(), 1);
}

#[test]
fn order_scan_has_one_row_per_order() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let o = tsid(&[
        "simulate",
        "--system",
        path(&write_system(dir.path())),
        "--signal",
        path(&write_signal(dir.path())),
        "--noise-to-signal",
        "0.05",
        "-o",
        path(&data),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tsid(&[
        "order-scan",
        "--data",
        path(&data),
        "--min-order",
        "1",
        "--max-order",
        "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 5);
    assert!(stderr(&o).contains("selected order"));
}

#[test]
fn experiment_writes_report_and_step_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "scenario = \"example_2_1_c\"\nseeds = 3\nduration = 400.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tsid(&[
        "experiment",
        "--config",
        path(&cfg),
        "--out-dir",
        path(&out),
        "--sequential",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 6);
    for m in ["oe", "bj"] {
        let steps = std::fs::read_to_string(out.join(format!("steps_{m}.csv"))).unwrap();
        assert!(steps
            .lines()
            .next()
            .unwrap()
            .starts_with("time,true,seed_1"));
    }
    assert!(out.join("summary.csv").exists());
}

fn assert_error_line(o: &Output, kind: &str) -> String {
    assert!(!o.status.success());
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(
        lines[0].starts_with(&format!("error kind={kind} line=")),
        "{err}"
    );
    lines[0].to_string()
}

#[test]
fn malformed_csv_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "t,u1,y1\n0,1,0\n1,1,abc\n").unwrap();
    let o = tsid(&[
        "identify",
        "--data",
        path(&data),
        "--method",
        "oe",
        "--order",
        "1",
    ]);
    let line = assert_error_line(&o, "input");
    assert!(line.contains("line=3"), "{line}");
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "scenario = \"example_2_1_a\"\nseeds = 2\nsedes = 1\n").unwrap();
    let o = tsid(&[
        "experiment",
        "--config",
        path(&cfg),
        "--out-dir",
        path(dir.path()),
    ]);
    let line = assert_error_line(&o, "input");
    assert!(line.contains("line=3"), "{line}");
}

#[test]
fn usage_and_domain_errors_are_single_lines() {
    assert_error_line(&tsid(&["identify", "--method", "xyz"]), "usage");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flat.csv");
    let mut body = String::from("t,u1,y1\n");
    for k in 0..200 {
        body.push_str(&format!("{k},1,0\n"));
    }
    std::fs::write(&data, body).unwrap();
    let o = tsid(&[
        "identify",
        "--data",
        path(&data),
        "--method",
        "oe",
        "--order",
        "1",
    ]);
    assert_error_line(&o, "identifiability");
    let o = tsid(&["identify", "--data", path(&data), "--method", "oe"]);
    assert_error_line(&o, "argument");
}
