use std::process::Command;

use eraser_cli::{parse_config, render, run, Config, Format, Kind, ResultBundle};

fn interferometer(points: usize) -> Config {
    let mut cfg = parse_config(&format!("[experiment]\nkind = interferometer\npoints = {points}\n")).unwrap();
    cfg.make_noiseless();
    cfg
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn json_round_trips_exactly() {
    let bundle = run(&Config::default()).unwrap();
    let text = render(&bundle, Format::Json).unwrap();
    let back: ResultBundle = serde_json::from_str(&text).unwrap();
    assert_eq!(back, bundle);
    assert_eq!(render(&back, Format::Json).unwrap(), text);
}

#[test]
fn config_echo_closes() {
    let bundle = run(&parse_config("[experiment]\nkind = rate-sweep\n[idt]\nmodel = uniform\n").unwrap()).unwrap();
    assert_eq!(parse_config(&bundle.config_text).unwrap(), bundle.config);
    assert_eq!(bundle.kind, Kind::RateSweep);
}

#[test]
fn csv_has_one_header_and_one_row_per_point() {
    let bundle = run(&interferometer(8)).unwrap();
    let csv = render(&bundle, Format::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 8 + 1);
    assert!(lines[0].starts_with("phi,P_gg,P_ge,P_eg,P_ee,P_e1"));
    assert!(lines[1..].iter().all(|l| l.split(',').count() == bundle.table.columns.len()));
}

#[test]
fn output_ignores_thread_count() {
    let cfg = interferometer(8);
    let one = in_pool(1, || render(&run(&cfg).unwrap(), Format::Json).unwrap());
    let four = in_pool(4, || render(&run(&cfg).unwrap(), Format::Json).unwrap());
    let again = in_pool(4, || render(&run(&cfg).unwrap(), Format::Json).unwrap());
    assert_eq!(one, four);
    assert_eq!(four, again);
}

#[test]
fn unit_efficiency_marks_the_run_lossless() {
    let cfg = parse_config("[channel]\neta_a = 1.0\n[numerics]\ndt = 0.1 ns\n").unwrap();
    let bundle = run(&cfg).unwrap();
    assert!(bundle.lossless);
    assert!(!run(&Config { dt: 0.1e-9, ..Config::default() }).unwrap().lossless);
}

#[test]
fn binary_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[q1]\nT1 = 18\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phonon-eraser"))
        .args(["transfer", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let report: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(report["kind"], "config");
    assert_eq!(report["field"], "q1.T1");
    assert_eq!(report["line"], 2);
}

#[test]
fn binary_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(k.to_string());
        let run = Command::new(env!("CARGO_BIN_EXE_phonon-eraser"))
            .args(["rate-sweep", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(run.status.success());
        outputs.push(std::fs::read(out.join("rate-sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 161 + 1);
}
