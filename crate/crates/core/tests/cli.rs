use std::path::Path;
use std::process::{Command, Output};

use s2sl::datasets::{load_csv, CsvOptions};
use s2sl::evalharness::CSV_HEADER;
use s2sl::nnet::Network;

fn s2sl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s2sl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_bench_on_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let out = s2sl(&[
        "synth",
        "--d",
        "5",
        "--n1",
        "30",
        "--n2",
        "24",
        "--seed",
        "4",
        "--out",
        path(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("c1=30, c2=24"));
    let ds = load_csv(&csv, &CsvOptions::default()).unwrap();
    assert_eq!((ds.len(), ds.dim()), (54, 5));

    let report_dir = dir.path().join("report");
    let out = s2sl(&[
        "bench",
        "--data",
        path(&csv),
        "--folds",
        "3",
        "--proportions",
        "2,4",
        "--hidden",
        "4",
        "--epochs",
        "10",
        "--refs",
        "6",
        "--task",
        "tiny",
        "--out",
        path(&report_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(report_dir.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 2 * 2 * 3);
    assert!(report.lines().skip(1).all(|l| l.starts_with("tiny,")));
    let table = std::fs::read_to_string(report_dir.join("report.txt")).unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains(&table));
}

#[test]
fn train_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = s2sl(&[
        "train",
        "--n1",
        "20",
        "--n2",
        "20",
        "--d",
        "3",
        "--hidden",
        "5",
        "--epochs",
        "20",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("method=s2sl hidden=5 train=32 test=8"),
        "{stdout}"
    );
    let net = Network::load(dir.path().join("model.txt")).unwrap();
    assert_eq!((net.input_dim(), net.output_dim()), (6, 4));

    let out = s2sl(&[
        "train", "--method", "mlp", "--n1", "20", "--n2", "20", "--d", "3", "--hidden", "5",
        "--epochs", "20",
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("method=mlp"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(s2sl(&["gradcheck"]).status.code(), Some(0));
    assert_eq!(s2sl(&["gradcheck", "--corrupt"]).status.code(), Some(1));
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        s2sl(&["bench", "--data", path(&missing)]).status.code(),
        Some(2)
    );
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = s2sl(&["synth", "--out", path(&blocker.join("data.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(s2sl(&["bench", "--folds", "1"]).status.code(), Some(3));
    assert_eq!(s2sl(&["bench", "--hidden", "lots"]).status.code(), Some(3));
    assert_eq!(s2sl(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(
        s2sl(&["train", "--refs", "500", "--n1", "10", "--n2", "10", "--epochs", "1"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn synth_sizes_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = s2sl(&[
        "synth",
        "--d",
        "13",
        "--n1",
        "60",
        "--n2",
        "60",
        "--sep",
        "1.0",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success());
    let first = std::fs::read(dir.path().join("synthetic.csv")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 120);

    let imb = dir.path().join("imb.csv");
    assert!(s2sl(&[
        "synth",
        "--n1",
        "127",
        "--n2",
        "71",
        "--seed",
        "1",
        "--out",
        path(&imb)
    ])
    .status
    .success());
    assert_eq!(
        load_csv(&imb, &CsvOptions::default())
            .unwrap()
            .class_counts(),
        vec![127, 71]
    );

    assert!(s2sl(&[
        "synth",
        "--d",
        "13",
        "--n1",
        "60",
        "--n2",
        "60",
        "--sep",
        "1.0",
        "--seed",
        "1",
        "--out",
        path(dir.path())
    ])
    .status
    .success());
    assert_eq!(
        std::fs::read(dir.path().join("synthetic.csv")).unwrap(),
        first
    );
}

fn holdout_accuracy(stdout: &[u8]) -> f64 {
    let text = String::from_utf8_lossy(stdout);
    let field = text
        .split_whitespace()
        .find_map(|f| f.strip_prefix("accuracy="))
        .expect("accuracy printed");
    field.parse().unwrap()
}

#[test]
fn train_on_separable_data() {
    for method in ["s2sl", "mlp"] {
        let out = s2sl(&[
            "train",
            "--method",
            method,
            "--holdout",
            "0.2",
            "--seed",
            "3",
            "--sep",
            "3.0",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let acc = holdout_accuracy(&out.stdout);
        assert!(acc > 90.0, "{method}: {acc}");
    }
    assert_eq!(s2sl(&["train", "--holdout", "1.5"]).status.code(), Some(3));
}

#[test]
fn bench_proportion_filter() {
    let dir = tempfile::tempdir().unwrap();
    let out = s2sl(&[
        "bench",
        "--proportions",
        "1",
        "--hidden",
        "8",
        "--epochs",
        "10",
        "--out",
        path(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 5);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("1/4")));
}
