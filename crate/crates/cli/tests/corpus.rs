//! Runs every case of `corpus/cases.json` and compares the JSON report with
//! `corpus/expected/<name>.json`. Set `HETLOGIC_BLESS=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    exit: i32,
    args: Vec<String>,
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetlogic"))
        .current_dir(root())
        .arg("--format")
        .arg("json")
        .args(args)
        .output()
        .expect("binary runs")
}

fn cases() -> Vec<Case> {
    let text = std::fs::read_to_string(root().join("corpus/cases.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exit_codes_and_reports() {
    let bless = std::env::var_os("HETLOGIC_BLESS").is_some();
    let mut failures = Vec::new();
    for c in cases() {
        let out = run(&c.args);
        let code = out.status.code().unwrap_or(-1);
        if code != c.exit {
            failures.push(format!(
                "{}: exit {code}, expected {}\n{}",
                c.name,
                c.exit,
                String::from_utf8_lossy(&out.stderr)
            ));
            continue;
        }
        let stdout = String::from_utf8(out.stdout).unwrap();
        if code == 2 {
            if !stdout.is_empty() || out.stderr.is_empty() {
                failures.push(format!("{}: errors go to stderr only", c.name));
            }
            continue;
        }
        let path = root().join(format!("corpus/expected/{}.json", c.name));
        if bless {
            std::fs::write(&path, &stdout).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(want) if want == stdout => {}
            Ok(want) => failures.push(format!("{}:\n  got  {stdout}  want {want}", c.name)),
            Err(_) => failures.push(format!("{}: no expected report", c.name)),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn output_is_byte_stable() {
    for c in cases() {
        let a = run(&c.args);
        let b = run(&c.args);
        assert_eq!(a.stdout, b.stdout, "{}", c.name);
        assert_eq!(a.status.code(), b.status.code(), "{}", c.name);
    }
}

#[test]
fn every_expected_report_has_a_case() {
    let names: Vec<String> = cases().into_iter().map(|c| c.name).collect();
    for e in std::fs::read_dir(root().join("corpus/expected")).unwrap() {
        let p = e.unwrap().path();
        let stem = p.file_stem().unwrap().to_str().unwrap().to_string();
        assert!(names.contains(&stem), "stray expected report {}", p.display());
    }
}
