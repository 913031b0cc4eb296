//! Exit-code contract and end-to-end binary behavior.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartogram"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cartogram-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const TWO_SQUARES: &str = r#"{
  "format_version": 1,
  "vertices": [[0, 0], [2, 0], [4, 0], [4, 2], [2, 2], [0, 2]],
  "faces": [
    {"name": "left", "ring": [0, 1, 4, 5], "weight": 3.8},
    {"name": "right", "ring": [1, 2, 3, 4], "weight": 4.2}
  ]
}"#;

fn run_build(extra: &[&str]) -> Output {
    let input = tmp("two_squares.json");
    std::fs::write(&input, TWO_SQUARES).unwrap();
    let mut cmd = bin();
    cmd.arg("build").arg(&input);
    for a in extra {
        cmd.arg(a);
    }
    cmd.output().unwrap()
}

#[test]
fn build_succeeds_and_prints_aggregate_line() {
    let out = run_build(&[]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().last().unwrap();
    assert!(line.starts_with("avg success rate "), "got: {line}");
    assert!(line.contains("avg error "), "got: {line}");
    assert!(line.contains("flow "), "got: {line}");
}

#[test]
fn malformed_json_exits_2() {
    let input = tmp("broken.json");
    std::fs::write(&input, "{\"format_version\": 1,").unwrap();
    let out = bin().arg("build").arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_topology_exits_2() {
    // a face floating inside another leaves an interior hole
    let input = tmp("hole.json");
    std::fs::write(
        &input,
        r#"{
  "format_version": 1,
  "vertices": [[0, 0], [6, 0], [6, 6], [0, 6], [2, 2], [4, 2], [4, 4], [2, 4]],
  "faces": [
    {"name": "outer", "ring": [0, 1, 2, 3], "weight": 1.0},
    {"name": "inner", "ring": [4, 5, 6, 7], "weight": 1.0}
  ]
}"#,
    )
    .unwrap();
    let out = bin().arg("build").arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn unknown_weight_face_exits_2() {
    let weights = tmp("bad_weights.json");
    std::fs::write(&weights, "{\"nowhere\": 1.0}").unwrap();
    let out = run_build(&["--weights", weights.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn skeleton_unknown_face_exits_2() {
    let input = tmp("two_squares.json");
    std::fs::write(&input, TWO_SQUARES).unwrap();
    let out = bin()
        .arg("skeleton")
        .arg(&input)
        .arg("missing")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn gadget_rejects_mixed_clause() {
    let formula = tmp("mixed.cnf");
    std::fs::write(&formula, "1 -2 3\n").unwrap();
    let out = bin()
        .arg("gadget")
        .arg(&formula)
        .arg("--out")
        .arg(tmp("mixed_out.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn gadget_writes_parseable_instance() {
    let formula = tmp("mono.cnf");
    std::fs::write(&formula, "1 2 3\n").unwrap();
    let doc = tmp("mono_out.json");
    let weights = tmp("mono_weights.json");
    let out = bin()
        .arg("gadget")
        .arg(&formula)
        .arg("--out")
        .arg(&doc)
        .arg("--out-weights")
        .arg(&weights)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let bytes = std::fs::read(&doc).unwrap();
    let s = cartogram::io::parse_subdivision(&bytes).unwrap();
    assert!(s.faces.len() > 4);
    let table: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&weights).unwrap()).unwrap();
    assert!(table.as_object().unwrap().len() >= s.faces.len() - 1);
}
