//! End-to-end tests of the `slhnet` binary: exit codes, file formats, and
//! the shipped example netlists.

use std::path::PathBuf;
use std::process::{Command, Output};

use num_complex::Complex64;

fn netlist(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../netlists")
        .join(name)
}

fn slhnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slhnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn reduce_emits_expected_json() {
    let out = slhnet(&["reduce", netlist("cavity_beamsplitter.slh").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["channels"], 2);
    assert_eq!(json["signature"][0]["label"], "c1");
    assert_eq!(json["signature"][0]["dim"], 10);
    // S[0][0] = 0.8 * I_10
    let s00 = &json["S"][0][0];
    assert_eq!(s00[0][0][0], 0.8);
    assert_eq!(s00[0][0][1], 0.0);
    assert_eq!(s00[0][1][0], 0.0);
    // S[0][1] = -0.6 * I_10
    assert_eq!(json["S"][0][1][0][0][0], -0.6);
    // chain report present
    assert_eq!(json["chain_report"]["chains"][0][0], "M");
    assert_eq!(json["chain_report"]["chains"][0][1], "C+P");
}

#[test]
fn heisenberg_reports_cavity_drift() {
    let out = slhnet(&[
        "heisenberg",
        netlist("cavity_beamsplitter.slh").to_str().unwrap(),
        "--obs",
        "a(c1)",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // drift = -(gamma/2 + i delta) a with gamma = 0.5, delta = 1.0:
    // entry (0, 1) of a is sqrt(1) = 1
    let d01 = &json["drift"][0][1];
    let got = Complex64::new(d01[0].as_f64().unwrap(), d01[1].as_f64().unwrap());
    let expect = Complex64::new(-0.25, -1.0);
    assert!((got - expect).norm() < 1e-12, "drift entry {got}");
}

#[test]
fn simulate_writes_trajectory_csv() {
    let dir = std::env::temp_dir().join("slhnet_test_simulate");
    std::fs::create_dir_all(&dir).unwrap();
    let out_path = dir.join("traj.csv");
    let out = slhnet(&[
        "simulate",
        netlist("cavity_beamsplitter.slh").to_str().unwrap(),
        "--dt",
        "0.001",
        "--T",
        "0.2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,a(c1)_re,a(c1)_im,n(c1)_re,n(c1)_im");
    assert_eq!(csv.lines().count(), 202); // header + 201 grid points
    // initial coherent state: <a> = 0.6, <n> = |0.6|^2
    let first = lines.next().unwrap();
    let fields: Vec<f64> = first.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.0);
    assert!((fields[1] - 0.6).abs() < 1e-9);
    assert!((fields[3] - 0.36).abs() < 1e-9);
}

#[test]
fn filter_runs_and_writes_record() {
    let dir = std::env::temp_dir().join("slhnet_test_filter");
    std::fs::create_dir_all(&dir).unwrap();
    let record_path = dir.join("record.csv");
    let out_path = dir.join("filter.csv");
    let file = netlist("ou_filter.slh");
    let out = slhnet(&[
        "filter",
        file.to_str().unwrap(),
        "--T",
        "0.1",
        "--record-out",
        record_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record = std::fs::read_to_string(&record_path).unwrap();
    assert_eq!(record.lines().next().unwrap(), "dy");
    assert_eq!(record.lines().count(), 51); // header + 0.1/0.002 increments
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("t,sigma1,q(X)_re"));

    // filtering against the produced record reproduces the run exactly
    let again = slhnet(&[
        "filter",
        file.to_str().unwrap(),
        "--T",
        "0.1",
        "--record",
        record_path.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(stdout(&again), csv);
}

#[test]
fn filter_multi_run_is_deterministic_across_thread_counts() {
    let file = netlist("cavity_beamsplitter.slh");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_slhnet"))
            .env("SLHNET_THREADS", threads)
            .args([
                "filter",
                file.to_str().unwrap(),
                "--dt",
                "0.002",
                "--T",
                "0.05",
                "--runs",
                "4",
                "--seed",
                "11",
                "--obs",
                "a(c1)",
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };
    let single = run("1");
    let multi = run("4");
    assert_eq!(single, multi);
    assert_eq!(single, run("4"));
}

#[test]
fn simulate_supports_json_format() {
    let out = slhnet(&[
        "simulate",
        netlist("cavity_beamsplitter.slh").to_str().unwrap(),
        "--dt",
        "0.01",
        "--T",
        "0.1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["times"].as_array().unwrap().len(), 11);
    assert_eq!(json["observables"][0]["name"], "a(c1)");
    assert_eq!(json["observables"][0]["re"].as_array().unwrap().len(), 11);
}

#[test]
fn check_passes_on_examples_and_reports_structure() {
    for name in [
        "cavity_beamsplitter.slh",
        "all_optical_feedback.slh",
        "quadrature_feedback.slh",
    ] {
        let out = slhnet(&["check", netlist(name).to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", stdout(&out));
        assert!(stdout(&out).contains("check: PASS"));
    }
    // the grid netlist carries the expected boundary warning but still passes
    let out = slhnet(&["check", netlist("ou_filter.slh").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout(&out));
    let report = stdout(&out);
    assert!(report.contains("WARN (grid boundary rows, expected)"));
    assert!(report.contains("check: PASS"));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = std::env::temp_dir().join("slhnet_test_exit");
    std::fs::create_dir_all(&dir).unwrap();

    // diagnostics -> 1
    let bad_syntax = dir.join("bad_syntax.slh");
    std::fs::write(&bad_syntax, "space c1 fock\n").unwrap();
    let out = slhnet(&["reduce", bad_syntax.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1:"));

    let unknown_ref = dir.join("unknown_ref.slh");
    std::fs::write(&unknown_ref, "connect X -> Y\n").unwrap();
    let out = slhnet(&["check", unknown_ref.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // numerical failure -> 2: literal component with a non-unitary S
    let non_unitary = dir.join("non_unitary.slh");
    std::fs::write(
        &non_unitary,
        "space c1 fock 4\ncomponent G { S = [[2]] L = [a(c1)] }\n",
    )
    .unwrap();
    let out = slhnet(&["check", non_unitary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("S unitary within"));
    assert!(stdout(&out).contains("FAIL"));

    let out = slhnet(&["reduce", non_unitary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // missing file -> diagnostics
    let out = slhnet(&["reduce", dir.join("nope.slh").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // success -> 0
    let out = slhnet(&["reduce", netlist("cavity_beamsplitter.slh").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn all_optical_example_reduces_to_closed_loop() {
    let out = slhnet(&["reduce", netlist("all_optical_feedback.slh").to_str().unwrap()]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["channels"], 1);
    // S = e^{i} (scalar block on the 12-dim cavity space)
    let s = &json["S"][0][0];
    let got = Complex64::new(s[0][0][0].as_f64().unwrap(), s[0][0][1].as_f64().unwrap());
    let expect = Complex64::new(0.0, 1.0).exp();
    assert!((got - expect).norm() < 1e-12);
    // H = gamma sin(theta) a'a with gamma = 0.5, theta = 1: entry (1,1)
    let h11 = &json["H"][1][1];
    let got = h11[0].as_f64().unwrap();
    assert!((got - 0.5 * 1f64.sin()).abs() < 1e-12);
}

#[test]
fn quadrature_example_matches_closed_form() {
    let out = slhnet(&["reduce", netlist("quadrature_feedback.slh").to_str().unwrap()]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["channels"], 1);
    // L = sqrt(0.8) a - 0.4 i (a + a'): entry (1, 0) is -0.4i * 1
    let l10 = &json["L"][0][1][0];
    let got = Complex64::new(l10[0].as_f64().unwrap(), l10[1].as_f64().unwrap());
    assert!((got - Complex64::new(0.0, -0.4)).norm() < 1e-11, "{got}");
    // entry (0, 1): sqrt(0.8) - 0.4 i
    let l01 = &json["L"][0][0][1];
    let got = Complex64::new(l01[0].as_f64().unwrap(), l01[1].as_f64().unwrap());
    assert!(
        (got - Complex64::new(0.8f64.sqrt(), -0.4)).norm() < 1e-11,
        "{got}"
    );
}
