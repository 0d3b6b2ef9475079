use smtcount::corpus::{find, DESK};
use std::path::Path;
use std::process::{Command, Output};

fn smtcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smtcount"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn count_exact_path() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "f.smt2",
        "(declare-fun x () (_ BitVec 8))\n(assert (= x #x03))\n",
    );
    let o = smtcount(&[
        "count",
        &f,
        "--epsilon",
        "0.8",
        "--delta",
        "0.2",
        "--seed",
        "42",
        "--backend",
        "enum",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("1"));
}

#[test]
fn exact_count() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "g.smt2",
        "(declare-fun x () (_ BitVec 4))\n(assert (bvult x #x5))\n",
    );
    let o = smtcount(&["exact", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "5\n");
}

#[test]
fn json_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "m.smt2", &find("mul-inverse").unwrap().text());
    let args = ["count", f.as_str(), "--seed", "42", "--json"];
    let a = smtcount(&args);
    let b = smtcount(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = smtcount(&["count", f.as_str(), "--seed", "43", "--json"]);
    assert_ne!(a.stdout, c.stdout);
}

fn check_schema(v: &serde_json::Value) {
    let obj = v.as_object().unwrap();
    for key in [
        "final_count",
        "t",
        "pivot",
        "successes",
        "iterations",
        "status",
    ] {
        assert!(obj.contains_key(key), "missing {key}");
    }
    assert!(v["final_count"].is_string() || v["final_count"].is_null());
    if let Some(s) = v["final_count"].as_str() {
        assert!(s.bytes().all(|b| b.is_ascii_digit()));
    }
    assert!(["ok", "all-failed"].contains(&v["status"].as_str().unwrap()));
    let iterations = v["iterations"].as_array().unwrap();
    assert_eq!(iterations.len() as u64, v["t"].as_u64().unwrap());
    for it in iterations {
        assert!(it["C"].as_array().unwrap().iter().all(|c| c.is_u64()));
        assert!(it["num_cells"].as_str().unwrap().parse::<u128>().is_ok());
        assert!(it["leaf"].is_u64());
        assert!(it["outcome"].is_string());
    }
}

#[test]
fn json_schema_over_corpus() {
    let dir = tempfile::tempdir().unwrap();
    for e in DESK {
        let f = write(dir.path(), &format!("{}.smt2", e.id), &e.text());
        let o = smtcount(&["count", &f, "--json", "--seed", "1"]);
        assert_eq!(o.status.code(), Some(0), "{}", e.id);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        check_schema(&v);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.smt2",
        "(declare-fun x () (_ BitVec 4))\n(assert (bvslt x #x1))\n",
    );
    let o = smtcount(&["count", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bvslt"));

    assert_eq!(smtcount(&["count"]).status.code(), Some(2));
    assert_eq!(
        smtcount(&["count", "/nonexistent.smt2"]).status.code(),
        Some(2)
    );

    let ok = write(
        dir.path(),
        "ok.smt2",
        "(declare-fun x () (_ BitVec 4))\n(assert true)\n",
    );
    assert_eq!(
        smtcount(&["count", &ok, "--delta=1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        smtcount(&["count", &ok, "--budget=0"]).status.code(),
        Some(2)
    );
    let o = smtcount(&[
        "count",
        &ok,
        "--backend",
        "process",
        "--solver-cmd",
        "/nonexistent/solver",
    ]);
    assert_eq!(o.status.code(), Some(3));

    // a single wide variable: every invocation runs out of cells
    let dense = write(
        dir.path(),
        "dense.smt2",
        &find("nonzero-low").unwrap().text(),
    );
    let o = smtcount(&["count", &dense, "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["final_count"].is_null());
    assert_eq!(v["status"], "all-failed");

    // more than one poll interval of cached models under a 1ns budget
    let many = write(dir.path(), "many.smt2", &find("or-ff").unwrap().text());
    let o = smtcount(&["count", &many, "--budget", "0.000000001"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_directory() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["box", "point"] {
        write(dir.path(), &format!("{id}.smt2"), &find(id).unwrap().text());
    }
    let d = dir.path().to_string_lossy().into_owned();
    let o = smtcount(&["validate", "--corpus", &d, "--runs", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["formulas"].as_array().unwrap().len(), 2);
    assert_eq!(v["records"].as_array().unwrap().len(), 6);
    assert_eq!(v["formulas"][0]["id"], "box");
    assert_eq!(v["formulas"][0]["exact"], "512");
    assert_eq!(v["formulas"][1]["estimate"], "1");

    let o = smtcount(&["validate", "--corpus", &d, "--runs", "2"]);
    let text = stdout(&o);
    assert!(
        text.contains("benchmark") && text.contains("point"),
        "{text}"
    );
}

#[test]
fn hash_stats() {
    let o = smtcount(&[
        "hash-stats",
        "--n",
        "2",
        "--k",
        "2",
        "--C",
        "1",
        "--trials",
        "20000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("cells=5 trials=20000"), "{text}");
    assert_eq!(text.matches(" pass").count(), 3, "{text}");

    let o = smtcount(&[
        "hash-stats",
        "--n",
        "2",
        "--k",
        "8",
        "--C",
        "2",
        "--trials",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
