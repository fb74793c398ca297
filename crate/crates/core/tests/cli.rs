//! End-to-end runs of the command-line front end.

use std::fs;
use std::process::Command;

use dks1d::cli::{main_with_args, EXIT_OK, EXIT_PARSE, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with_args(
        std::iter::once("dks1d").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn points_file(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solves_the_four_point_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = points_file(&dir, "pts.txt", "0\n1\n1.5\n2.5\n");
    for backend in ["explicit", "implicit"] {
        for arith in ["float", "exact"] {
            let (code, out, _) = run(&["--in", &input, "--backend", backend, "--arith", arith]);
            assert_eq!(code, EXIT_OK);
            let lines: Vec<&str> = out.lines().collect();
            assert_eq!(&lines[..4], &["w[1] = 1", "w[2] = 2", "w[3] = 1", "Q = 2"]);
            assert!(lines[4].contains("VALID"));
        }
    }
}

#[test]
fn exact_mode_reads_rationals_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = points_file(&dir, "pts.txt", "# one third apart\n0\n1/3\n2/3\n5/3\n");
    let out_path = dir.path().join("res.json");
    let (code, _, _) = run(&[
        "--in",
        &input,
        "--arith",
        "exact",
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["backend"], "explicit");
    assert_eq!(v["certificate"]["valid"], true);
    let weights: Vec<&str> = v["weights"].as_array().unwrap().iter().map(|w| w.as_str().unwrap()).collect();
    assert_eq!(weights.len(), 3);
    assert!(v["q"].as_str().unwrap().contains('/') || v["q"].as_str().unwrap().parse::<i64>().is_ok());
}

#[test]
fn integer_weights_print_canonically() {
    let dir = tempfile::tempdir().unwrap();
    let input = points_file(&dir, "pts.txt", "0\n1\n11\n");
    let (code, out, _) = run(&["--in", &input, "--arith", "exact", "--oracle"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("w[1] = 5\nw[2] = 1\nQ = 150\n"), "{out}");
    assert!(out.contains("oracle Q = 150 (agrees)"));
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = points_file(&dir, "bad.txt", "0\n1\nabc\n");
    let (code, _, err) = run(&["--in", &bad]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 3"), "{err}");
    let dup = points_file(&dir, "dup.txt", "0\n1\n1\n");
    assert_eq!(run(&["--in", &dup]).0, EXIT_PARSE);
    let single = points_file(&dir, "one.txt", "4\n");
    assert_eq!(run(&["--in", &single]).0, EXIT_PARSE);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["--mode", "fly"]).0, EXIT_USAGE);
    assert_eq!(run(&["--n", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["--in", "/definitely/not/here"]).0, EXIT_USAGE);
    assert_eq!(run(&["--n", "40", "--oracle"]).0, EXIT_USAGE);
    assert_eq!(run(&["--version"]).0, EXIT_OK);
}

#[test]
fn generated_points_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.txt");
    let path = path.to_str().unwrap();
    let args = ["--mode", "generate", "--n", "30", "--seed", "5", "--dist", "large-uniform", "--out", path];
    assert_eq!(run(&args).0, EXIT_OK);
    let first = fs::read_to_string(path).unwrap();
    assert_eq!(run(&args).0, EXIT_OK);
    assert_eq!(first, fs::read_to_string(path).unwrap());
    assert_eq!(first.lines().filter(|l| !l.starts_with('#')).count(), 30);

    let (code, a, _) = run(&["--in", path, "--backend", "implicit"]);
    assert_eq!(code, EXIT_OK);
    let (_, b, _) = run(&["--n", "30", "--seed", "5", "--dist", "large-uniform", "--backend", "implicit"]);
    assert_eq!(a, b);
}

#[test]
fn pieces_stats_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("stats.csv");
    let (code, _, _) = run(&[
        "--mode", "pieces-stats", "--n", "50", "--trials", "10", "--seed", "1", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,trials,dist,avg,max"));
    assert!(lines.next().unwrap().starts_with("50,10,small-uniform,"));
    assert_eq!(run(&["--mode", "pieces-stats", "--backend", "implicit"]).0, EXIT_USAGE);
}

#[test]
fn bench_reports_both_backends() {
    let (code, out, _) = run(&["--mode", "bench", "--n", "200", "--dist", "gaussian"]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("explicit") && rows[3].starts_with("implicit"));
}

#[test]
fn dump_lists_every_level() {
    let (code, out, _) = run(&["--n", "6", "--dump-plf"]);
    assert_eq!(code, EXIT_OK);
    for level in 2..=5 {
        assert!(out.contains(&format!("# R_{level}\n")));
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dks1d");
    let ok = Command::new(bin).args(["--n", "12", "--seed", "3"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("certificate: VALID"));
    let bad = Command::new(bin).args(["--bogus"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
