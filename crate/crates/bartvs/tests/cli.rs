use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const QUICK: &[&str] = &[
    "--trees", "5", "--burn", "20", "--post", "40", "--restarts", "2", "--seed", "7",
];

fn bartvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bartvs")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, scenario: &str, p: &str) -> PathBuf {
    let out = dir.join(format!("{scenario}.csv"));
    let o = bartvs(&[
        "generate", "--scenario", scenario, "--n", "60", "--p", p, "--p0", "2", "--sigma-sq", "1",
        "--seed", "3", "--out", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn select(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["select", "--data", path(data), "--out", path(out), "--permutations", "10"];
    args.extend_from_slice(QUICK);
    args.extend_from_slice(extra);
    bartvs(&args)
}

fn without_runtime(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("runtime");
    v
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn select_report_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "linear", "6");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let csv_out = dir.path().join("vars.csv");
    let o = select(&data, &a, &["--strategy", "global-max", "--workers", "1", "--csv-out", path(&csv_out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = select(&data, &b, &["--strategy", "global-max", "--workers", "2"]);
    assert!(o.status.success());

    let ra = read_json(&a);
    assert_eq!(ra["config"]["strategy"], "global-max");
    assert_eq!(ra["config"]["hyperparams"]["trees"], 5);
    assert_eq!(ra["config"]["alpha"], 0.05);
    assert_eq!(ra["seeds"]["master"], 7);
    assert_eq!(ra["variables"].as_array().unwrap().len(), 6);
    assert_eq!(ra["strategies"].as_array().unwrap().len(), 3);
    let total: f64 = ra["variables"].as_array().unwrap().iter().map(|v| v["proportion"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);
    assert!(ra["runtime"]["seconds"].as_f64().is_some());
    assert_eq!(without_runtime(ra), without_runtime(read_json(&b)));

    let table = fs::read_to_string(&csv_out).unwrap();
    assert!(table.starts_with("variable,proportion,selected,threshold_global_max"));
    assert_eq!(table.lines().count(), 7);
}

#[test]
fn cv_report_names_the_winner() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "friedman", "6");
    let prior = dir.path().join("prior.csv");
    fs::write(&prior, "name,prob\nx1,0.9\nx2,0.8\nx6,0.1\n").unwrap();
    let out = dir.path().join("cv.json");
    let o = select(&data, &out, &["--folds", "2", "--prior-file", path(&prior), "--c-grid", "0,1", "--clamp-prior"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    let winner = r["cv"]["winner"].as_str().unwrap();
    assert!(["local", "global-max", "global-se"].contains(&winner));
    assert_eq!(r["result"]["rule"], winner);
    assert_eq!(r["result"]["strategy"], "cv");
    assert_eq!(r["cv"]["errors"].as_array().unwrap().len(), 6);
    assert_eq!(r["variables"][0]["prior_probability"], 0.9);
    assert_eq!(r["variables"][5]["prior_probability"], 0.1);
    assert_eq!(r["variables"][2]["prior_probability"], 0.05);
}

#[test]
fn bad_input_exits_with_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,x2,y\n1,2,3\n4,oops,6\n7,8,9\n").unwrap();
    let out = dir.path().join("r.json");
    let o = select(&bad, &out, &["--strategy", "local"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oops"));
    assert!(!out.exists());

    let data = generate(dir.path(), "linear", "4");
    let prior = dir.path().join("prior.csv");
    fs::write(&prior, "x1,0.5\nnope,0.5\n").unwrap();
    assert_eq!(select(&data, &out, &["--prior-file", path(&prior)]).status.code(), Some(2));
    assert_eq!(select(&data, &out, &["--c-grid", "1"]).status.code(), Some(2));
    assert_eq!(select(&data, &out, &["--alpha", "1.5", "--strategy", "local"]).status.code(), Some(2));
    assert_eq!(select(&data, &out, &["--response-col", "zz"]).status.code(), Some(2));
    assert_eq!(bartvs(&["select", "--strategy", "median"]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn simulate_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let mut args = vec![
        "simulate", "--scenario", "null", "--n", "50", "--p", "5", "--replicates", "2",
        "--strategies", "local,global-max", "--permutations", "8", "--out", path(&out),
    ];
    args.extend_from_slice(QUICK);
    let o = bartvs(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let kinds: Vec<&str> = rows.iter().map(|r| &r[col("row_type")]).collect();
    assert_eq!(kinds, ["data", "data", "data", "data", "summary", "summary"]);
    for r in &rows {
        assert_eq!(&r[col("recall")], "0.0");
    }
    assert_eq!(&rows[4][col("replicate")], "");
    assert!(!rows[4][col("f1_se")].is_empty());
    let sidecar = read_json(&dir.path().join("sim.csv.json"));
    assert_eq!(sidecar["data_rows"], 4);
    assert_eq!(sidecar["config"]["replicates"], 2);
}

#[test]
fn diagnose_with_one_dataset_and_run_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diag.json");
    let o = bartvs(&[
        "diagnose", "--n", "40", "--p", "4", "--datasets", "1", "--restarts", "1", "--trees", "5",
        "--burn", "20", "--post", "40", "--out", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert!(r["across_datasets_sd"].as_array().unwrap().iter().all(|v| v == 0.0));
    assert!(r["within_dataset_sd"][0].as_array().unwrap().iter().all(|v| v == 0.0));
    assert_eq!(r["proportions"].as_array().unwrap().len(), 1);
    let again = dir.path().join("again.json");
    let o = bartvs(&[
        "diagnose", "--n", "40", "--p", "4", "--datasets", "1", "--restarts", "1", "--trees", "5",
        "--burn", "20", "--post", "40", "--out", path(&again),
    ]);
    assert!(o.status.success());
    assert_eq!(without_runtime(r), without_runtime(read_json(&again)));
}
