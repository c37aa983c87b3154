use std::path::PathBuf;
use std::process::{Command, Output};

fn ncg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncg"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn converged_bench_exits_zero_with_csv() {
    let out = ncg(&["bench", "--problems", "Pb1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "problem,gamma,status,iterations,time_s,residual_inf"
    );
    assert_eq!(lines.len(), 4);
    for (line, gamma) in lines[1..].iter().zip(["1", "2", "3"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(&cols[..3], ["Pb1", gamma, "Converged"]);
    }
}

#[test]
fn failing_run_exits_two() {
    let out = ncg(&[
        "bench",
        "--problems",
        "Pb10",
        "--gamma",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("Pb10,1,"), "{line}");
    assert!(!line.contains("Converged"));
}

#[test]
fn max_iter_one_reports_max_iterations() {
    let out = ncg(&[
        "bench",
        "--problems",
        "Pb1",
        "--gamma",
        "1",
        "--max-iter",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("Pb1,1,MaxIterations"));
}

#[test]
fn table_marks_failures() {
    let out = ncg(&[
        "bench",
        "--problems",
        "Pb1",
        "--gamma",
        "1",
        "--max-iter",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains('∗'));
}

#[test]
fn output_flag_writes_the_report() {
    let path: PathBuf =
        std::env::temp_dir().join(format!("ncg-cli-test-{}.csv", std::process::id()));
    let out = ncg(&[
        "bench",
        "--problems",
        "Pb8",
        "--gamma",
        "1",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("Pb8,1,Converged,17,"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ncg(&["bench", "--problems", "Pb99"]).status.code(), Some(1));
    assert_eq!(ncg(&["bench", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        ncg(&["bench", "--gamma", "5", "--problems", "Pb1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ncg(&["radius", "--family", "holder", "--p", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(ncg(&["--help"]).status.code(), Some(0));
}

#[test]
fn radius_prints_closed_forms() {
    let out = ncg(&["radius", "--family", "holder", "--K", "1", "--p", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("nu     = 1.000000000000e0"), "{text}");
    assert!(text.contains("rho    = 6.666666666667e-1"), "{text}");

    let out = ncg(&[
        "radius",
        "--family",
        "smale",
        "--gamma-smale",
        "1",
        "--kappa",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("rho    = 2.192235935956e-1"), "{text}");
    assert!(text.contains("r      = 1.000000000000e-1"), "{text}");
}

#[test]
fn list_shows_the_catalog() {
    let out = ncg(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 19);
    assert!(text.lines().next().unwrap().starts_with("Pb1 "));
}
