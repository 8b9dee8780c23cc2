use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use odocoe::cert::Certificate;
use serde_json::Value;

fn odocoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odocoe")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn rewrite(path: &Path, edit: impl FnOnce(&mut Value), rehash: bool) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    edit(&mut v);
    let mut cert: Certificate = serde_json::from_value(v).unwrap();
    if rehash {
        cert.hash = cert.computed_hash();
    }
    fs::write(path, cert.to_json()).unwrap();
}

#[test]
fn coe_example_is_equivalent() {
    let out = odocoe(&["coe", "5*2^inf,3^inf", "2^inf,5*3^inf"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("orbit equivalent"));
}

#[test]
fn conj_example_is_not_conjugate() {
    let out = odocoe(&["conj", "5*2^inf,3^inf", "2^inf,5*3^inf"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("not conjugate"));
}

#[test]
fn conj_swap_is_conjugate() {
    assert_eq!(code(&odocoe(&["conj", "2*5^inf,3*5^inf", "3*5^inf,2*5^inf"])), 0);
}

#[test]
fn bad_input_is_a_usage_error() {
    assert_eq!(code(&odocoe(&["coe", "2^inf", "bogus"])), 2);
    assert_eq!(code(&odocoe(&["coe", "2^inf", "6"])), 2);
    assert_eq!(code(&odocoe(&["counterexample", "2", "3", "4"])), 2);
    assert_eq!(code(&odocoe(&["frobnicate"])), 2);
}

#[test]
fn oversized_witness_is_a_usage_error() {
    let out = odocoe(&["coe", "13^inf,11^inf", "11^inf,13^inf", "--witness", "--level", "9"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn counterexample_reports_cited_coe() {
    let out = odocoe(&["counterexample", "2", "3", "5"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("CITED"));
    assert_eq!(text.matches("[certified]").count(), 3);
    assert!(text.contains("non-conjugacy CERTIFIED"));
}

#[test]
fn eig_and_kinv() {
    let out = odocoe(&["eig", "2^inf", "-4", "--level", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("E = T(2^inf)"));
    let out = odocoe(&["kinv", "5*2^inf,3^inf", "--json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rank"], 2);
}

#[test]
fn coe_witness_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("coe.json");
    let path = file.to_str().unwrap();
    let out = odocoe(&["coe", "5*2^inf,3^inf", "2^inf,5*3^inf", "--witness", "--out", path]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("verified"));
    let out = odocoe(&["verify", path]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("certificate verified"));

    // an edited table without a fresh hash
    let tampered = dir.path().join("tampered.json");
    fs::copy(&file, &tampered).unwrap();
    rewrite(&tampered, |v| v["witness"]["a"]["values"][0] = (v["witness"]["a"]["values"][0].as_i64().unwrap() + 1).into(), false);
    assert_eq!(code(&odocoe(&["verify", tampered.to_str().unwrap()])), 1);

    // the same edit with a consistent hash must fail the table checks
    fs::copy(&file, &tampered).unwrap();
    rewrite(&tampered, |v| v["witness"]["a"]["values"][0] = (v["witness"]["a"]["values"][0].as_i64().unwrap() + 1).into(), true);
    let out = odocoe(&["verify", tampered.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    assert!(stdout(&out).contains("FAILED"));
}

#[test]
fn conj_witness_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("conj.json");
    let path = file.to_str().unwrap();
    let out = odocoe(&["witness", "conj", "2*5^inf,3*5^inf", "3*5^inf,2*5^inf", "--level", "2", "--out", path]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(code(&odocoe(&["verify", path, "--json"])), 0);

    // a swapped image with a consistent hash
    rewrite(
        &file,
        |v| {
            let images = v["witness"]["phi"]["levels"][2]["images"].as_array_mut().unwrap();
            images.swap(0, 1);
        },
        true,
    );
    assert_eq!(code(&odocoe(&["verify", path])), 1);
}

#[test]
fn witness_for_negative_decision_fails() {
    assert_eq!(code(&odocoe(&["witness", "conj", "5*2^inf,3^inf", "2^inf,5*3^inf"])), 1);
}

#[test]
fn decision_certificate_verifies_and_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.json");
    let path = file.to_str().unwrap();
    assert_eq!(code(&odocoe(&["conj", "5*2^inf,3^inf", "2^inf,5*3^inf", "--out", path])), 1);
    assert_eq!(code(&odocoe(&["verify", path])), 0);
    rewrite(&file, |v| v["decision"]["conjugate"] = true.into(), true);
    assert_eq!(code(&odocoe(&["verify", path])), 1);
}

#[test]
fn selftest_passes() {
    let out = odocoe(&["selftest", "--seed", "3", "--count", "30"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("all checks passed"));
}
