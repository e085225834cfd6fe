use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mep_core::circuit::Netlist;
use mep_core::knapsack::TruthTable;

fn mep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mep")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SOLUTION: &str = "inputs 4\n1: g0 x0, x3\n2: g0 x1, x2\n3: g6 1, 2\noutput 3\n";

#[test]
fn gen_table_outputs() {
    let o = mep(&["gen-table", "--n", "4", "--sum", "5"]);
    assert!(o.status.success());
    let t = TruthTable::parse(&stdout(&o)).unwrap();
    assert_eq!((t.inputs(), t.outputs.count_ones()), (4, 7));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t5.txt");
    assert!(mep(&["gen-table", "--n", "5", "--sum", "7", "--out", path(&file)]).status.success());
    let t = TruthTable::parse(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(t.outputs.to_bit_string().len(), 32);

    let t = TruthTable::parse(&stdout(&mep(&["gen-table", "--n", "1", "--sum", "1"]))).unwrap();
    assert_eq!(t.outputs.to_bit_string(), "01");

    let bad = mep(&["gen-table", "--n", "21", "--sum", "1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).starts_with("error:"));
}

#[test]
fn verify_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.txt");
    let good = dir.path().join("good.net");
    let bad = dir.path().join("bad.net");
    assert!(mep(&["gen-table", "--n", "4", "--sum", "5", "--out", path(&table)]).status.success());
    fs::write(&good, SOLUTION).unwrap();
    fs::write(&bad, SOLUTION.replace("g6 1, 2", "g0 1, 2")).unwrap();

    let o = mep(&["verify", "--netlist", path(&good), "--table", path(&table)]);
    assert_eq!((o.status.code(), stdout(&o)), (Some(0), "PASS\n".to_string()));

    let o = mep(&["verify", "--netlist", path(&bad), "--table", path(&table)]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.starts_with("FAIL: 6 mismatching cases:"), "{out}");
}

#[test]
fn malformed_inputs_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.txt");
    let net = dir.path().join("n.net");
    fs::write(&table, "inputs 2\ntable 01x1\n").unwrap();
    fs::write(&net, SOLUTION).unwrap();
    let o = mep(&["verify", "--netlist", path(&net), "--table", path(&table)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    fs::write(&net, "inputs 4\n1: g0 x0, x9\noutput 1\n").unwrap();
    let o = mep(&["export", "--netlist", path(&net)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("n.net");
    fs::write(&net, SOLUTION).unwrap();

    let text = stdout(&mep(&["export", "--netlist", path(&net), "--format", "text"]));
    assert_eq!(Netlist::parse(&text).unwrap(), Netlist::parse(SOLUTION).unwrap());

    let dot = stdout(&mep(&["export", "--netlist", path(&net)]));
    assert!(dot.starts_with("digraph"));
    let node_lines = dot.lines().filter(|l| l.contains("[shape=")).count();
    assert_eq!(node_lines, 3 + 4 + 1, "{dot}");
    assert!(dot.contains("n3 -> out;"));
}

#[test]
fn evolve_constant_table_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("zero.txt");
    let out = dir.path().join("runs.csv");
    fs::write(&table, "inputs 3\ntable 00000000\n").unwrap();
    let o = mep(&[
        "evolve",
        "--table",
        path(&table),
        "--runs",
        "5",
        "--pop",
        "10",
        "--genes",
        "8",
        "--generations",
        "20",
        "--seed",
        "3",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# mep evolve, generated at unix time "));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("runs.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["successes"], 5);
    assert!(stdout(&o).contains("successful runs: 5 out of 5"));
}

#[test]
fn evolve_csv_agrees_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.csv");
    let o = mep(&[
        "evolve",
        "--n",
        "4",
        "--sum",
        "5",
        "--runs",
        "30",
        "--pop",
        "40",
        "--genes",
        "20",
        "--generations",
        "100",
        "--seed",
        "11",
        "--no-timestamp",
        "--out",
        path(&out),
    ]);
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let headers = reader.headers().unwrap().clone();
    let success = headers.iter().position(|h| h == "success").unwrap();
    let run = headers.iter().position(|h| h == "run").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 30);
    let ids: Vec<usize> = rows.iter().map(|r| r[run].parse().unwrap()).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    let successes = rows.iter().filter(|r| &r[success] == "true").count();

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("runs.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["successes"], successes);
    assert_eq!(o.status.code(), Some(if successes > 0 { 0 } else { 2 }));
}

#[test]
fn evolve_without_problem_is_an_error() {
    let o = mep(&["evolve", "--runs", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no problem given"));
}
