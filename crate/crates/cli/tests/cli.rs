use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_slantwarp");

fn slantwarp(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("slantwarp-cli-{tag}-{}", std::process::id()))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn builtin_prints_classification_and_exits_zero() {
    let o = slantwarp(&["builtin", "example1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("proper-semi-slant"), "{out}");
    assert!(out.contains("cos 0.176470588235"), "{out}");
}

#[test]
fn slant_constant_outside_the_open_interval_is_a_usage_error() {
    for bad in ["0", "1.5707963267948966", "-1", "nan"] {
        let o = slantwarp(&["builtin", "example2", bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}: {}", stdout(&o));
        assert!(stderr(&o).contains("error"), "{bad}");
    }
}

#[test]
fn angle_for_a_fixed_builtin_is_rejected() {
    assert_eq!(slantwarp(&["builtin", "example1", "0.5"]).status.code(), Some(2));
}

#[test]
fn unknown_builtin_is_a_usage_error() {
    assert_eq!(slantwarp(&["builtin", "example3"]).status.code(), Some(2));
}

#[test]
fn missing_and_invalid_files_exit_two() {
    let o = slantwarp(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));

    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"name": "x", "ambient": "nowhere", "immersion": {"params": ["a"], "target": ["a"]},
        "split": {"d": [], "theta": [], "xi": "a"}, "sampling": {"mode": "fixed-list", "points": [[0]]}}"#)
    .unwrap();
    let o = slantwarp(&["run", bad.to_str().unwrap()]);
    let _ = std::fs::remove_file(&bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere"), "{}", stderr(&o));
}

#[test]
fn nonpositive_tolerance_scale_is_rejected() {
    let o = slantwarp(&["builtin", "example1", "--tol-scale", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unexpected_failure_exits_one() {
    // Dropping the declared failures from the second-factor scenario turns
    // its genuine failures into unexpected ones.
    let text = std::fs::read_to_string(scenario("xi_in_second_factor.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc.as_object_mut().unwrap().remove("expect");
    let path = scratch("undeclared.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let o = slantwarp(&["run", path.to_str().unwrap()]);
    let _ = std::fs::remove_file(&path);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("trivial"));
}

#[test]
fn declared_failures_exit_zero() {
    let o = slantwarp(&["run", &scenario("xi_in_second_factor.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn report_json_is_written_and_reproducible() {
    let (a, b) = (scratch("a.json"), scratch("b.json"));
    for p in [&a, &b] {
        let o = slantwarp(&["builtin", "example2", "0.5", "--seed", "9", "--samples", "30", "--report", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (ja, jb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let _ = (std::fs::remove_file(&a), std::fs::remove_file(&b));
    assert_eq!(ja, jb);
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["points"], 30);
    assert_eq!(v["as_expected"], true);
    assert!(v["checks"].as_array().unwrap().len() > 40);
}
