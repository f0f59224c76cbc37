use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hetlogic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetlogic"))
        .current_dir(root())
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const COPY: &str = "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, v0 = v1] }";

#[test]
fn certify_pass_report_shape() {
    let out = hetlogic(&[
        "--format",
        "json",
        "certify",
        "corpus/structures/m2.str",
        "corpus/theories/copycat.thy",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with(r#"{"kind":"certify","verdict":"well-determined","regions":"#), "{text}");
    let keys: Vec<&str> = ["\"kind\"", "\"verdict\"", "\"regions\"", "\"witness\"", "\"timings\""]
        .into_iter()
        .collect();
    let at: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn certify_reach_prints_lasso() {
    let out = hetlogic(&[
        "--format",
        "json",
        "--class",
        "corpus/classes/reach.cls",
        "certify",
        "corpus/structures/m2.str",
        "corpus/theories/copycat.thy",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["verdict"], "not well-determined");
    let cycle = v["witness"]["cycle"].as_array().unwrap();
    assert!(!cycle.is_empty());
    assert!(cycle.iter().all(|mv| mv.as_array().is_some_and(|m| m.iter().all(Value::is_string))));
    assert!(v["witness"]["stem"].is_array());
}

#[test]
fn certify_reach_on_singleton_passes() {
    let out = hetlogic(&[
        "--class",
        "corpus/classes/reach.cls",
        "certify",
        "corpus/structures/m1.str",
        "corpus/theories/copycat.thy",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("certify: well-determined"));
}

#[test]
fn eval_verdict_is_boolean() {
    let out = hetlogic(&[
        "--format",
        "json",
        "eval",
        "corpus/structures/m2.str",
        "corpus/theories/copycat.thy",
        "--formula",
        COPY,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], Value::Bool(true));
}

#[test]
fn determinacy_proof_accepted() {
    let out = hetlogic(&["prove", "corpus/proofs/copycat/det.prf", "corpus/theories/copycat.thy"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn timings_only_on_request() {
    let args = ["--format", "json", "certify", "corpus/structures/m2.str", "corpus/theories/copycat.thy"];
    assert_eq!(json(&hetlogic(&args))["timings"], Value::Null);
    let mut with = vec!["--timings"];
    with.extend(args);
    assert!(json(&hetlogic(&with))["timings"]["elapsed_ms"].is_u64());
}

#[test]
fn seeded_sampling_is_reproducible() {
    let run = |seed: &str| {
        hetlogic(&[
            "--format",
            "json",
            "--seed",
            seed,
            "oracle",
            "corpus/structures/m3.str",
            "corpus/theories/copycat.thy",
            "--formula",
            "hetAE { len: omega; sched: [[x:s], [y:s]]; payoff: safety(2)[true, or(v0 = v1, v1 = z)] }",
            "--ctx",
            "z:s",
            "--samples",
            "2",
        ])
        .stdout
    };
    assert_eq!(run("11"), run("11"));
}

#[test]
fn parse_errors_exit_two() {
    let dir = std::env::temp_dir().join(format!("hetlogic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.thy");
    std::fs::write(&bad, "sort s; rel P(t);").unwrap();
    let out = hetlogic(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn play_session_quits_cleanly() {
    let dir = std::env::temp_dir().join(format!("hetlogic-play-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let log = dir.join("session.txt");
    let mut child = Command::new(env!("CARGO_BIN_EXE_hetlogic"))
        .current_dir(root())
        .args([
            "play",
            "corpus/structures/m2.str",
            "corpus/theories/copycat.thy",
            "--formula",
            COPY,
            "--side",
            "forall",
            "--transcript",
            log.to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"a\nquit\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let transcript = std::fs::read_to_string(&log).unwrap();
    assert!(transcript.contains("opponent wins from initial position"), "{transcript}");
    assert!(transcript.contains("engine: (a)"), "{transcript}");
    assert!(transcript.ends_with("quit\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}
