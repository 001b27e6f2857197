use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn theory() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../theories/list.thy")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rippling")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn records(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn prove_append_nil_traces_step_case() {
    let th = theory();
    let o = run(&["prove", th.to_str().unwrap(), "append_nil", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for line in [
        ". append.2 [1] (append {cons e [x]} nil) = {cons e [x]} ~> {cons e [(append x nil)]} = {cons e [x]}",
        ". (append x nil) = x [1,2] {cons e [(append x nil)]} = {cons e [x]} ~> {cons e [x]} = {cons e [x]}",
        "reflexivity | (cons e x) = (cons e x)",
    ] {
        assert!(out.contains(line), "missing `{line}` in\n{out}");
    }
    assert!(out.ends_with("proved: replayed 6 nodes\n"));
}

#[test]
fn dmatch_identical_terms() {
    let o = run(&["dmatch", "(f a)", "(f a)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "cost 0 (f a) {}\n1 result(s)\n");
}

#[test]
fn dmatch_without_match_is_negative() {
    let o = run(&["dmatch", "(f a)", "(g b)"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rev_rev_without_critic_stays_open() {
    let th = theory();
    let o = run(&["prove", th.to_str().unwrap(), "rev_rev", "--no-critic"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("open (induction depth reached)"));
}

#[test]
fn rev_rev_with_critic_installs_lemma() {
    let th = theory();
    let o = run(&["critic", th.to_str().unwrap(), "rev_rev"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("divergence: context (append _ (cons e nil)) at [1,1] in goal 2, evidence 2"));
    assert!(out.contains("1. (rev (append X (cons Y nil))) = (cons Y (rev X)) [proved]"));
    assert!(out.contains("lemma critic.1 (proved)"));
}

#[test]
fn check_lists_append_wave_rule() {
    let th = theory();
    let o = run(&["check", th.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("append.2: (append {cons a [b]} c) => {cons a [(append b c)]}"));
}

#[test]
fn check_reports_missing_case() {
    let text = std::fs::read_to_string(theory()).unwrap().replace("(def (append nil c) c)", "");
    let path = std::env::temp_dir().join(format!("missing-case-{}.thy", std::process::id()));
    std::fs::write(&path, text).unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`append` has no equation for"));
}

#[test]
fn parse_errors_and_usage_errors_exit_two() {
    let th = theory();
    let o = run(&["dmatch", "(f a", "a"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: 1:1:"));
    assert_eq!(run(&["prove", th.to_str().unwrap(), "no_such"]).status.code(), Some(2));
    assert_eq!(run(&["dmatch", "a", "a", "--cap", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn ripple_fertilizes_with_hypothesis() {
    let th = theory();
    let o = run(&[
        "ripple",
        th.to_str().unwrap(),
        "(append {cons e [x]} nil) = {cons e [x]}",
        "--hyp",
        "(append x nil) = x",
        "--var",
        "e",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("outcome fertilized\n"));
}

#[test]
fn structured_output_mirrors_text() {
    let th = theory();
    for conj in ["append_nil", "plus_assoc", "rev_rev"] {
        let text = run(&["prove", th.to_str().unwrap(), conj]);
        let structured = run(&["prove", th.to_str().unwrap(), conj, "--format", "structured"]);
        assert_eq!(text.status.code(), structured.status.code());
        let recs = records(&structured);
        let nodes: Vec<&Value> = recs.iter().filter(|r| r["record"] == "node").collect();
        let text_out = stdout(&text);
        let lines: Vec<&str> = text_out.lines().collect();
        assert_eq!(nodes.len() + 1, lines.len());
        for (n, l) in nodes.iter().zip(&lines) {
            assert!(l.ends_with(&format!("| {}", n["goal"].as_str().unwrap())));
        }
        assert_eq!(recs.last().unwrap()["record"], "result");
    }
}

#[test]
fn output_is_deterministic() {
    let th = theory();
    let args = ["critic", th.to_str().unwrap(), "rev_rev", "--trace", "--format", "structured"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["dunify", "(f X (g a))", "(f (g b) Y)"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn dunify_minimal_reports_one_unifier() {
    let o = run(&["dunify", "(f X a)", "(f b (g Y))", "--minimal", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&o);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["cost"], 1);
    assert_eq!(recs[0]["right"], "(f b {g [Y]})");
}
