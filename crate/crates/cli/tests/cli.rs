use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronobell"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gen_lambda(dir: &Path, count: u64) -> String {
    let path = dir.join(format!("l{count}.bin"));
    let p = path.to_str().unwrap().to_string();
    let out = run(&["gen-lambda", "--seed", "5", "--count", &count.to_string(), "--out", &p]);
    assert!(out.status.success());
    p
}

#[test]
fn chsh_reports_tsirelson_and_certificate() {
    let out = run(&["chsh", "--angles", "0,90,45,-45"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["chsh"].as_f64().unwrap() + 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["violates_local_bound"], true);
    assert_eq!(v["lp_local"], false);
    assert_eq!(v["facet_certificate"]["sign"], -1);
}

#[test]
fn product_states_stay_local() {
    let out = run(&["chsh", "--state", "01", "--angles", "0,90,45,-45"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_abs_chsh"].as_f64().unwrap() <= 2.0 + 1e-12);
    assert_eq!(v["lp_local"], true);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["chsh"],
        vec!["chsh", "--angles", "0,90,45"],
        vec!["chsh", "--state", "0,0,0,0", "--angles", "0,90,45,-45"],
        vec!["nogo", "--alphabet", "6"],
        vec!["nogo", "--alphabet", "0"],
        vec!["nogo", "--target", "vertex:16"],
        vec!["flash", "--seed", "1", "--rate", "0"],
        vec!["flash", "--seed", "1", "--duration", "-1"],
        vec!["flash", "--seed", "1", "--particles", "3"],
        vec!["flash", "--seed", "1", "--lambda-file", "x"],
        vec!["covariance", "--angles", "0,0", "--seed", "1", "--trials", "0"],
        vec!["covariance", "--angles", "0,0", "--seed", "1", "--tol=-1"],
        vec!["covariance", "--angles", "0,0", "--lambda-file", "/nonexistent/l.bin"],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn short_lambda_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let l = gen_lambda(dir.path(), 64 * 5);
    let out = run(&["covariance", "--angles", "0,0", "--trials", "6", "--lambda-file", &l]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["flash", "--trials", "6", "--lambda-file", &l]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["covariance", "--angles", "0,0", "--trials", "5", "--lambda-file", &l]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "covariance",
        "--angles",
        "0,0",
        "--trials",
        "5",
        "--seed",
        "1",
        "--count",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_distribution_check_exits_4() {
    // demanding exact equality trips over last-bit rounding differences
    let out = run(&[
        "covariance",
        "--angles",
        "0,90,45,-45",
        "--trials",
        "10",
        "--seed",
        "1",
        "--tol",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["report"]["distribution"]["pass"], false);
}

#[test]
fn reruns_and_worker_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let l = gen_lambda(dir.path(), 64 * 2000);
    let base = [
        "covariance",
        "--angles",
        "0,90,45,-45",
        "--trials",
        "400",
        "--lambda-file",
        &l,
    ];
    let a = run(&[&base[..], &["--workers", "1"]].concat());
    let b = run(&[&base[..], &["--workers", "1"]].concat());
    let c = run(&[&base[..], &["--workers", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let seeded = run(&[
        "covariance",
        "--angles",
        "0,90,45,-45",
        "--trials",
        "400",
        "--seed",
        "5",
    ]);
    let from_file = json(&a);
    let from_seed = json(&seeded);
    assert_eq!(from_file["report"], from_seed["report"]);
    assert_eq!(from_file["estimated"], from_seed["estimated"]);
}

#[test]
fn report_and_history_files_match_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let hist = dir.path().join("h.txt");
    let res = run(&[
        "flash",
        "--seed",
        "3",
        "--trials",
        "20",
        "--particles",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--history",
        hist.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), res.stdout);
    let text = std::fs::read_to_string(&hist).unwrap();
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len() as u64, json(&res)["hits"]["total"].as_u64().unwrap());
    for line in lines {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 4);
        assert!(fields[2] == "0" || fields[2] == "1");
    }
}

#[test]
fn csv_has_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let res = run(&[
        "covariance",
        "--angles",
        "0,90,45,-45",
        "--trials",
        "50",
        "--seed",
        "9",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn nogo_targets() {
    let v = json(&run(&["nogo", "--target", "vertex:7", "--alphabet", "1"]));
    assert_eq!(v["search"]["found"], true);
    assert_eq!(v["lp"]["local"], true);
    let v = json(&run(&["nogo", "--target", "uniform", "--alphabet", "4"]));
    assert_eq!(v["search"]["found"], true);
    let v = json(&run(&["nogo", "--alphabet", "2"]));
    assert_eq!(v["search"]["found"], false);
    assert_eq!(v["verdicts_agree"], true);
}
