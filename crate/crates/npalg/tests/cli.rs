use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use npalg::corpus::{self, fixtures_dir};
use npalg::io::RunReport;

fn fx(rel: &str) -> PathBuf {
    fixtures_dir().join(rel)
}

fn npalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npalg"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> RunReport {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}\nstderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn coloring_listing_solves_exactly() {
    let spec = fx("consql/graph_coloring.consql");
    let data = fx("data/sample-coloring");
    let out = npalg(&["solve", path(&spec), "--data", path(&data), "--solver", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r.answer);
    assert_eq!(r.schema, 1);
    assert_eq!(r.objective, None);
    assert_eq!(r.returns["SOLUTION"].len(), 4);
    assert_eq!(r.returns["ANSWER"], vec![vec![serde_json::json!(1)]]);
    assert_eq!(r.stats.solver, "exact");
    assert!(r.stats.wall_time_ms.is_none());
}

#[test]
fn triangle_with_two_colors_exits_one() {
    let spec = fx("consql/graph_coloring.consql");
    let data = fx("data/triangle-2-colors");
    let out = npalg(&["solve", path(&spec), "--data", path(&data)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(!r.answer);
    assert!(r.returns.is_empty());
    assert_eq!(r.objective, None);
}

#[test]
fn seeded_tabu_runs_are_byte_identical() {
    let spec = fx("consql/timetabling.consql");
    let data = fx("data/timetabling-toy");
    let args = ["solve", path(&spec), "--data", path(&data), "--solver", "tabu", "--seed", "0"];
    let a = npalg(&args);
    let b = npalg(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(report(&a).objective, Some(14));
}

#[test]
fn json_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let spec = fx("consql/aircraft_landing.consql");
    let data = fx("data/aircraft-single");
    let out = npalg(&["solve", path(&spec), "--data", path(&data), "--json", target.to_str().unwrap(), "--timing"]);
    assert_eq!(out.status.code(), Some(0));
    let written = fs::read(&target).unwrap();
    assert_eq!(written, out.stdout);
    let r = report(&out);
    assert_eq!(r.objective, Some(0));
    assert!(r.stats.wall_time_ms.is_some());
}

#[test]
fn post_solve_selects_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("coloring.consql");
    let listing = fs::read_to_string(fx("consql/graph_coloring.consql")).unwrap();
    fs::write(&script, format!("{listing}\nSELECT name FROM Graph_Coloring.SOLUTION WHERE n = 1;\n")).unwrap();
    let data = fx("data/sample-coloring");
    let out = npalg(&["solve", script.to_str().unwrap(), "--data", path(&data)]);
    let r = report(&out);
    assert_eq!(r.returns["QUERY1"].len(), 1);
}

#[test]
fn every_solver_answers_the_corpus() {
    for f in corpus::fixtures().unwrap() {
        let input = match (&f.query, &f.spec) {
            (Some(q), _) => fixtures_dir().join(q),
            (_, Some(s)) => fixtures_dir().join(s),
            _ => unreachable!(),
        };
        let data = fixtures_dir().join(&f.data);
        let exact = npalg(&["solve", path(&input), "--data", path(&data)]);
        let code = if f.expected { 0 } else { 1 };
        assert_eq!(exact.status.code(), Some(code), "{}: {}", f.name, String::from_utf8_lossy(&exact.stderr));
        if f.expected {
            let tabu = npalg(&["solve", path(&input), "--data", path(&data), "--solver", "tabu", "--restarts", "4"]);
            assert!(matches!(tabu.status.code(), Some(0) | Some(1)), "{}", f.name);
        }
    }
}

#[test]
fn check_validates_stored_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("Q1.csv"), "a:int\n2\n4\n").unwrap();
    fs::write(dir.path().join("Q2.csv"), "a:int\n1\n").unwrap();
    fs::write(dir.path().join("Q3.csv"), "a:int\n3\n").unwrap();
    let query = fx("queries/coloring-3.npalg");
    let data = fx("data/sample-graph");
    let args = ["check", path(&query), "--data", path(&data), "--witness", dir.path().to_str().unwrap()];
    let ok = npalg(&args);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(report(&ok).returns["Q1"].len(), 2);
    fs::write(dir.path().join("Q3.csv"), "a:int\n").unwrap();
    assert_eq!(npalg(&args).status.code(), Some(1));
    fs::write(dir.path().join("X.csv"), "a:int\n").unwrap();
    assert_eq!(npalg(&args).status.code(), Some(2));
}

#[test]
fn classify_reports_fragments() {
    let cases = [
        ("queries/two-coloring.npalg", "Eaa"),
        ("queries/coloring-3.npalg", "General"),
        ("queries/disconnectivity.npalg", "E1eStarAa"),
        ("eso/two_coloring.eso", "Eaa"),
    ];
    for (file, tag) in cases {
        let out = npalg(&["classify", path(&fx(file))]);
        assert_eq!(out.status.code(), Some(0), "{file}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some(tag), "{file}");
    }
}

#[test]
fn translate_circuit_and_eso() {
    let out = npalg(&["translate", path(&fx("circuits/and_n1.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let q = npalg::text::parse_query(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(q.guesses.len(), 6);
    assert_eq!(q.guesses.iter().filter(|g| g.name.starts_with("COL")).count(), 3);

    let bad = npalg(&["translate", path(&fx("circuits/forward_reference.json"))]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));

    let out = npalg(&["translate", path(&fx("eso/two_coloring.eso"))]);
    let q = npalg::text::parse_query(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(npalg::polyfrag::classify(&q).tag(), "Eaa");
}

#[test]
fn gen_succinct_writes_a_solvable_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = npalg(&["gen-succinct", path(&fx("circuits/and_n1.json")), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["query.npalg", "data/BITS.csv", "gates/G3.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let solved = npalg(&["solve", path(&fx("circuits/and_n1.json"))]);
    assert_eq!(solved.status.code(), Some(0));
    assert!(report(&solved).returns.keys().all(|k| k.starts_with("COL")));
}

#[test]
fn errors_exit_two_with_locations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.consql");
    fs::write(&bad, "CREATE SPECIFICATION P (\n  GUESS TABLE T AS SELECT * FROM SUBSET OF NODES\n  CHECK (1 = )\n)").unwrap();
    let out = npalg(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.consql") && err.contains("3:"), "{err}");
    let out = npalg(&["solve", "input.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = npalg(&["solve", path(&fx("consql/graph_coloring.consql")), "--solver", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}
