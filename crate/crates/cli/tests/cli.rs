use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LINE3: &str = "name: line3\nkind: metric\npoints: 0 1 2\nmatrix:\n0 1 2\n1 0 1\n2 1 0\n";
const LINE4: &str = "name: line4\nkind: metric\npoints: o a b c\nmatrix:\n0 1 2 4\n1 0 1 3\n2 1 0 2\n4 3 2 0\n";

fn qmobius(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmobius"))
        .args(args)
        .env_remove("QMOBIUS_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = qmobius(&["validate", "--input", s(&write(&dir, "l.txt", LINE3))]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(report(&ok)["results"]["valid"], true);

    let bad = write(&dir, "bad.txt", "kind: metric\npoints: a b c\nmatrix:\n0 1 3\n1 0 1\n3 1 0\n");
    let out = qmobius(&["validate", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let violations = &report(&out)["witnesses"]["violations"];
    assert_eq!(violations[0]["kind"], "triangle");

    let ragged = write(&dir, "r.txt", "kind: metric\npoints: a b c\nmatrix:\n0 1 2\n1 0\n2 1 0\n");
    assert_eq!(qmobius(&["validate", "--input", s(&ragged)]).status.code(), Some(2));
}

#[test]
fn invert_line() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "l.txt", LINE4);
    let out_doc = dir.path().join("inv.txt");
    let out = qmobius(&["invert", "--input", s(&input), "--point", "o", "--output", s(&out_doc)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["sandwich"]["upper_failures"], 0);
    // d_p(a, c) = 3/4 on the line {0, 1, 2, 4}.
    let text = std::fs::read_to_string(&out_doc).unwrap();
    let validated = qmobius(&["validate", "--input", s(&out_doc)]);
    assert_eq!(validated.status.code(), Some(0));
    let rows: Vec<&str> = text.lines().skip_while(|l| *l != "matrix:").skip(1).collect();
    let v: f64 = rows[0].split_whitespace().nth(2).unwrap().parse().unwrap();
    assert_eq!(v, 0.75);
}

#[test]
fn invert_completed_and_sphericalized() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "l.txt", LINE4);
    let out = qmobius(&["invert", "--input", s(&input), "--point", "a", "--complete"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    let points = rep["results"]["points"].as_array().unwrap();
    assert!(points.contains(&Value::from("∞")));
    assert!(!rep["results"]["document"].as_str().unwrap().contains("inf"));

    let out = qmobius(&["invert", "--input", s(&input), "--point", "a", "--sphericalize"]);
    let doc = report(&out)["results"]["document"].as_str().unwrap().to_string();
    let max = doc
        .lines()
        .skip_while(|l| *l != "matrix:")
        .skip(1)
        .flat_map(|l| l.split_whitespace().map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    assert!(max <= 2.0);

    assert_eq!(qmobius(&["invert", "--input", s(&input), "--point", "zz"]).status.code(), Some(2));
}

#[test]
fn doubling_values_and_cap() {
    let dir = TempDir::new().unwrap();
    let uniform = write(
        &dir,
        "u.txt",
        "kind: metric\npoints: a b c d e\nmatrix:\n0 1 1 1 1\n1 0 1 1 1\n1 1 0 1 1\n1 1 1 0 1\n1 1 1 1 0\n",
    );
    let out = qmobius(&["doubling", "--input", s(&uniform)]);
    assert_eq!(report(&out)["results"]["doubling_constant"], 5);

    let cantor = dir.path().join("c.txt");
    let gen = qmobius(&["generate", "--model", "cantor", "--k", "2", "--depth", "4", "--a", "0.5", "--output", s(&cantor)]);
    assert_eq!(gen.status.code(), Some(0));
    let out = qmobius(&["doubling", "--input", s(&cantor), "--mode", "exact"]);
    assert_eq!(report(&out)["results"]["doubling_constant"], 2);

    let big = dir.path().join("big.txt");
    qmobius(&["generate", "--model", "random", "--n", "100", "--random-model", "graph", "--output", s(&big)]);
    let refused = qmobius(&["doubling", "--input", s(&big), "--mode", "exact"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("cap"));
}

#[test]
fn chains_threshold_and_search() {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "l.txt", LINE3);
    let rep = report(&qmobius(&["chains", "--input", s(&line)]));
    assert_eq!(rep["results"]["theta_star"], 0.5);
    assert_eq!(rep["witnesses"]["chain"]["points"], serde_json::json!(["0", "1", "2"]));

    let rep = report(&qmobius(&["chains", "--input", s(&line), "--theta", "0.49", "--pair", "0", "2"]));
    assert_eq!(rep["results"]["found"], false);

    let cantor = dir.path().join("c.txt");
    qmobius(&["generate", "--model", "cantor", "--k", "2", "--depth", "3", "--a", "0.5", "--output", s(&cantor)]);
    let rep = report(&qmobius(&["chains", "--input", s(&cantor)]));
    assert!(rep["results"]["theta_star"].as_f64().unwrap() >= 1.0);
    assert_eq!(rep["results"]["statement"], "uniformly disconnected for all θ<1");
}

#[test]
fn generate_documents() {
    let out = qmobius(&["generate", "--model", "cantor", "--k", "2", "--depth", "3", "--a", "0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let points = text.lines().find_map(|l| l.strip_prefix("points: ")).unwrap();
    assert_eq!(points.split_whitespace().count(), 8);

    let out = qmobius(&["generate", "--model", "ray", "--n", "33", "--ulo", "0.5", "--uhi", "1.0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("basepoint: p"));
    let points = text.lines().find_map(|l| l.strip_prefix("points: ")).unwrap();
    assert_eq!(points.split_whitespace().count(), 34);

    assert_eq!(qmobius(&["generate", "--model", "cantor", "--k", "2"]).status.code(), Some(2));
    assert_eq!(qmobius(&["generate"]).status.code(), Some(2));
}

#[test]
fn generated_documents_validate() {
    let dir = TempDir::new().unwrap();
    for (i, extra) in [
        vec!["--model", "euclidean", "--coords", "0,0;1,0;0,1;2,2"],
        vec!["--model", "euclidean", "--n", "6", "--dim", "3"],
        vec!["--model", "random", "--n", "7", "--random-model", "quasi", "--quasi-k", "1.5"],
        vec!["--model", "random", "--n", "9", "--random-model", "grid"],
    ]
    .into_iter()
    .enumerate()
    {
        let path = dir.path().join(format!("g{i}.txt"));
        let mut args = vec!["generate"];
        args.extend(extra);
        args.extend(["--output", s(&path)]);
        assert_eq!(qmobius(&args).status.code(), Some(0));
        assert_eq!(qmobius(&["validate", "--input", s(&path)]).status.code(), Some(0));
    }
}

#[test]
fn distortion_reports() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("src.txt");
    qmobius(&["generate", "--model", "random", "--n", "7", "--random-model", "graph", "--output", s(&src)]);
    let rep = report(&qmobius(&["distortion", "--source", s(&src), "--target", s(&src)]));
    for bp in rep["results"]["envelope"].as_array().unwrap() {
        assert_eq!(bp[0], bp[1]);
    }

    // Source against its own inversion at point 0.
    let inv = dir.path().join("inv.txt");
    let full = dir.path().join("full.txt");
    qmobius(&["invert", "--input", s(&src), "--point", "0", "--output", s(&inv)]);
    let text = std::fs::read_to_string(&src).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let points_line = lines.iter().position(|l| l.starts_with("points:")).unwrap();
    lines[points_line] = "points: 1 2 3 4 5 6".into();
    let matrix = lines.iter().position(|l| l == "matrix:").unwrap();
    let rows: Vec<String> = lines[matrix + 2..]
        .iter()
        .map(|r| r.split_whitespace().skip(1).collect::<Vec<_>>().join(" "))
        .collect();
    lines.truncate(matrix + 1);
    lines.extend(rows);
    std::fs::write(&full, lines.join("\n")).unwrap();
    let rep = report(&qmobius(&["distortion", "--source", s(&full), "--target", s(&inv)]));
    let range = &rep["results"]["cross_ratio_range"];
    let bound = 4f64.powi(4);
    assert!(range[0].as_f64().unwrap() >= 1.0 / bound && range[1].as_f64().unwrap() <= bound);

    let map = write(&dir, "m.txt", "1 1\n2 1\n3 3\n4 4\n5 5\n6 6\n");
    let out = qmobius(&["distortion", "--source", s(&full), "--target", s(&inv), "--map", s(&map)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_theorems_suite() {
    let a = qmobius(&["verify-theorems", "--seed", "3"]);
    let b = qmobius(&["verify-theorems", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(report(&a)["report_digest"], report(&b)["report_digest"]);
    assert!(String::from_utf8_lossy(&a.stderr).contains("certificate 1: PASS"));

    let ext = report(&qmobius(&["verify-theorems", "--suite", "extended", "--seed", "3"]));
    let ids: Vec<u64> = ext["results"]["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert!(ids.contains(&8));

    let failed = qmobius(&["verify-theorems", "--inject-failure"]);
    assert_eq!(failed.status.code(), Some(1));
    let cx = &report(&failed)["witnesses"]["counterexamples"][0]["counterexample"];
    assert!(cx["document"].as_str().unwrap().contains("matrix:"));
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qmobius"))
        .args(["verify-theorems"])
        .env("QMOBIUS_SEED", "12")
        .output()
        .unwrap();
    assert_eq!(report(&out)["seed"], 12);
}
