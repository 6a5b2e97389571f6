use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reasonbench"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn lexicons() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../lexicons")
}

fn write_config(dir: &Path, body: Value) -> PathBuf {
    let mut cfg = body;
    cfg["lexicon_dir"] = Value::String(lexicons().display().to_string());
    let p = dir.join("config.json");
    std::fs::write(&p, cfg.to_string()).unwrap();
    p
}

fn pl_config(dir: &Path, heuristic_rate: f64) -> PathBuf {
    write_config(
        dir,
        serde_json::json!({
            "seed": 11,
            "heuristic_rate": heuristic_rate,
            "counts": [{"domains": ["traffic"], "logic_types": ["PL"], "depths": [2], "count": 10}]
        }),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rules_dump_counts() {
    let out = run(&["rules-dump"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["counts"], serde_json::json!({"PL": 12, "FOL": 13, "MV": 7, "NM": 8}));
    assert_eq!(v["rules"].as_array().unwrap().len(), 40);
}

#[test]
fn generate_verify_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pl_config(dir.path(), 0.2);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    assert!(run(&["generate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(run(&["generate", "--config", s(&cfg), "--out", s(&b)]).status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(!text.starts_with('\u{feff}'));

    let verify = run(&["verify", s(&a)]);
    assert_eq!(verify.status.code(), Some(0), "{}", String::from_utf8_lossy(&verify.stderr));

    let manifest = dir.path().join("a.jsonl.manifest.json");
    let c = dir.path().join("c.jsonl");
    assert!(run(&["generate", "--replay", s(&manifest), "--out", s(&c)]).status.success());
    assert_eq!(text, std::fs::read_to_string(&c).unwrap());
}

#[test]
fn verify_flags_a_wrong_answer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pl_config(dir.path(), 0.0);
    let a = dir.path().join("a.jsonl");
    assert!(run(&["generate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    let mut lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let target = lines.iter_mut().find(|l| l["answer"] == "True").expect("a True instance");
    target["answer"] = Value::String("False".into());
    let tampered: String = lines.iter().map(|l| format!("{l}\n")).collect();
    let t = dir.path().join("t.jsonl");
    std::fs::write(&t, tampered).unwrap();
    assert_eq!(run(&["verify", s(&t)]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"counts": [{"domains": ["traffic"], "logic_types": ["PL"], "depths": [12], "count": 1}]}),
    );
    let out = run(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("depth 12"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreachable_counts_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({
            "counts": [{"domains": ["traffic"], "logic_types": ["PL"], "depths": [9], "count": 1}],
            "context": {"min_context_chars": 35, "max_context_chars": 40},
            "max_attempts": 3
        }),
    );
    let out = run(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_then_score_symbolic_pl() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pl_config(dir.path(), 0.0);
    let gold = dir.path().join("gold.jsonl");
    let pred = dir.path().join("pred.jsonl");
    let report = dir.path().join("report.json");
    let table = dir.path().join("report.txt");
    assert!(run(&["generate", "--config", s(&cfg), "--out", s(&gold)]).status.success());
    let out = run(&["solve", s(&gold), "--out", s(&pred), "--max-iters", "20", "--logic-classes", "PL"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["score", "--gold", s(&gold), "--pred", s(&pred), "--out", s(&report), "--table", s(&table)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["report"]["overall"]["accuracy"], 100.0);
    assert_eq!(v["report"]["overall"]["count"], 10);
    let t = std::fs::read_to_string(&table).unwrap();
    assert!(t.contains("100.0") && t.contains('\u{2014}'));

    let none = dir.path().join("none.jsonl");
    assert!(run(&["solve", s(&gold), "--out", s(&none), "--logic-classes", "NM"]).status.success());
    assert_eq!(std::fs::read_to_string(&none).unwrap(), "");
}

#[test]
fn score_rejects_dangling_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    std::fs::write(&gold, "").unwrap();
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(&pred, "{\"id\": \"ghost\", \"answer\": \"true\", \"trace\": []}\n").unwrap();
    let out = run(&["score", "--gold", s(&gold), "--pred", s(&pred), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost"));
}

#[test]
fn stats_on_empty_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["stats", s(&empty)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["instances"], 0);
    assert!(v["context_length"]["mean"].is_null());

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "\n\n{\"id\": 3}\n").unwrap();
    let out = run(&["stats", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
