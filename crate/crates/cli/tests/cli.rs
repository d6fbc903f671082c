use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tilekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilekit"))
        .args(args)
        .env_remove("TILEKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

// M = 18 = 3^2 * 2 with A = {(i + 3j, i)} and B = {(j, 0)} in array coordinates.
const A18: &str = r#"{"modulus":18,"elements":[13,0,1,6,7,12]}"#;
const B18: &str = r#"{"modulus":18,"elements":[0,2,10]}"#;
const PAIR18: &str = r#"{"modulus":18,"a":[0,1,6,7,12,13],"b":[0,2,10]}"#;

#[test]
fn verify_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", A18);
    let b = write(dir.path(), "b.json", B18);
    let out = tilekit(&["--json", "verify", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["ok"], true);
    assert_eq!(v["result"]["report"]["consistent"], true);
    assert_eq!(v["result"]["modulus"]["factored"], serde_json::json!([[2, 1], [3, 2]]));
    // sets come back sorted
    assert_eq!(v["result"]["raw"]["a"], serde_json::json!([0, 1, 6, 7, 12, 13]));
}

#[test]
fn verify_non_tiling_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", A18);
    let b = write(dir.path(), "b.json", r#"{"modulus":18,"elements":[0,1,2]}"#);
    let out = tilekit(&["--json", "verify", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["ok"], false);
}

#[test]
fn unknown_verb_exits_two() {
    assert_eq!(tilekit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tilekit(&[]).status.code(), Some(2));
}

#[test]
fn malformed_input_and_mismatch_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", A18);
    let bad = write(dir.path(), "bad.json", "{\"modulus\":18,");
    let other = write(dir.path(), "o.json", r#"{"modulus":12,"elements":[0,6]}"#);
    let out = tilekit(&["verify", "--a", a.to_str().unwrap(), "--b", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = tilekit(&["verify", "--a", a.to_str().unwrap(), "--b", other.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = tilekit(&["reduce", "--pair", write(dir.path(), "p.json", PAIR18).to_str().unwrap(), "--strategy", "x:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_and_standard() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", A18);
    let v = json_of(&tilekit(&["--json", "analyze", "--set", a.to_str().unwrap()]));
    assert_eq!(v["result"]["profile"]["prime_powers"], serde_json::json!([2, 9]));
    assert_eq!(v["result"]["t1"], true);
    assert_eq!(v["result"]["div"], serde_json::json!([1, 6, 18]));
    let v = json_of(&tilekit(&["--json", "standard", "--set", a.to_str().unwrap()]));
    assert_eq!(v["result"]["standard"], serde_json::json!([0, 3, 6, 9, 12, 15]));
}

#[test]
fn pair_verbs_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", PAIR18);
    let p = p.to_str().unwrap();
    let a = write(dir.path(), "a.json", A18);
    let a = a.to_str().unwrap();
    for args in [
        vec!["--json", "standard", "--pair", p],
        vec!["--json", "boxes", "--pair", p, "--scale", "6"],
        vec!["--json", "saturate", "--pair", p, "--x", "5"],
        vec!["--json", "cuboid", "--set", a, "--type", "classic:9"],
        vec!["--json", "cuboid", "--set", a, "--type", "preset:ex1", "--dir", "1"],
        vec!["--json", "fibers", "--pair", p, "--dir", "1"],
        vec!["--json", "reduce", "--pair", p, "--strategy", "auto"],
        vec!["--json", "search", "--set", a],
        vec!["--json", "search", "--integers", "0,1,4,5", "--bound", "40"],
    ] {
        let out = tilekit(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json_of(&out)["ok"], true);
    }
}

#[test]
fn boxes_table_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", PAIR18);
    let v = json_of(&tilekit(&["--json", "boxes", "--pair", p.to_str().unwrap(), "--scale", "9"]));
    let table = v["result"]["table"].as_array().unwrap();
    assert_eq!(table.len(), 9);
    assert!(table.iter().flat_map(|r| r.as_array().unwrap()).all(|c| c == "2"));
}

#[test]
fn shift_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", PAIR18);
    let out_path = dir.path().join("s.json");
    let out = tilekit(&[
        "--json", "shift", "--pair", p.to_str().unwrap(), "--dir", "1", "--beta", "2", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["result"]["pair"], written);
    let again = tilekit(&["--json", "verify", "--pair", out_path.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(json_of(&again)["result"]["raw"]["a"], written["a"]);
}

#[test]
fn szabo_writes_a_verified_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sz.json");
    let out = tilekit(&["--json", "szabo", "--primes", "3,5,7", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["result"]["report"]["modulus"], 11025);
    assert_eq!(v["result"]["report"]["size_a"], 105);
    let check = tilekit(&["--json", "verify", "--pair", out_path.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
    let set_a = json_of(&check)["result"]["raw"]["a"].clone();
    assert_eq!(set_a, v["result"]["pair"]["a"]);
}

#[test]
fn corpus_then_conjecture() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = dir.path().join("c1.jsonl");
    let c2 = dir.path().join("c2.jsonl");
    for c in [&c1, &c2] {
        let out = tilekit(&["--json", "--threads", "1", "corpus", "--moduli", "12,18,36", "--out", c.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    // byte-for-byte determinism
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());
    let out = tilekit(&["--json", "conjecture", "--id", "one-divisor", "--corpus", c1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["result"]["violations"], 0);
    assert!(v["result"]["checked"].as_u64().unwrap() > 0);
    let out = tilekit(&["conjecture", "--id", "no-such", "--corpus", c1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threads_env_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", A18);
    let out = Command::new(env!("CARGO_BIN_EXE_tilekit"))
        .args(["--json", "search", "--set", a.to_str().unwrap()])
        .env("TILEKIT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["result"]["count"], 9);
}
