use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use descent::syntax::{alpha_eq_program, parse};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(format!("{name}.hl"))
}

fn descent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_descent"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn source_file(src: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".hl").tempfile().unwrap();
    f.write_all(src.as_bytes()).unwrap();
    f
}

#[test]
fn distilled_programs_are_proved_as_given() {
    for name in [
        "gcd_distilled",
        "grow_shrink_distilled",
        "sub_grow_distilled",
        "gt_grow_distilled",
    ] {
        let path = corpus(name);
        let o = descent(&["check", path.to_str().unwrap(), "--skip-distill"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(
            stdout(&o).starts_with("terminates\n"),
            "{name}: {}",
            stdout(&o)
        );
    }
}

#[test]
fn self_loop_is_unknown_with_its_cycle() {
    let path = corpus("loop");
    let o = descent(&["check", path.to_str().unwrap(), "--skip-distill"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(
        text.starts_with("unknown: a cycle with no case state"),
        "{text}"
    );
    assert!(text.contains("--fold {x↦x}-->"), "{text}");
}

#[test]
fn undistilled_input_is_not_applicable() {
    let path = corpus("gcd");
    let o = descent(&["check", path.to_str().unwrap(), "--skip-distill"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("not applicable: program is not in distilled form"));
}

#[test]
fn json_verdict() {
    let path = corpus("loop");
    let o = descent(&[
        "check",
        path.to_str().unwrap(),
        "--skip-distill",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "unknown");
    assert_eq!(v["cycle"], serde_json::json!([1, 2, 1]));

    let path = corpus("gcd_distilled");
    let o = descent(&[
        "check",
        path.to_str().unwrap(),
        "--skip-distill",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "terminates");
    let folds = v["folds"].as_array().unwrap();
    assert!(!folds.is_empty());
    assert!(folds
        .iter()
        .all(|f| !f["witness_case_states"].as_array().unwrap().is_empty()));
}

#[test]
fn full_pipeline_distills_first() {
    let path = corpus("grow_shrink");
    let o = descent(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let path = corpus("mccarthy91");
    let o = descent(&[
        "check",
        path.to_str().unwrap(),
        "--limits",
        "depth=20,gens=5,defs=50",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).starts_with("not applicable: distillation failed"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn distill_prints_the_residual() {
    let path = corpus("grow_shrink");
    let o = descent(&["distill", path.to_str().unwrap(), "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let residual = parse(&stdout(&o)).unwrap();
    let expected =
        parse(&std::fs::read_to_string(corpus("grow_shrink_distilled")).unwrap()).unwrap();
    assert!(alpha_eq_program(&residual, &expected), "{}", stdout(&o));
    assert!(stderr(&o).contains("0 disagree"), "{}", stderr(&o));
}

#[test]
fn eval_with_numeral_inputs() {
    let path = corpus("gcd");
    let o = descent(&[
        "eval",
        path.to_str().unwrap(),
        "--input",
        "x=4,y=6",
        "--fuel",
        "100000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "2\n");

    let o = descent(&[
        "eval",
        path.to_str().unwrap(),
        "--input",
        "x=4",
        "--input",
        "y=Zero",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "out-of-fuel");
}

#[test]
fn eval_reports_missing_inputs() {
    let path = corpus("gcd");
    let o = descent(&["eval", path.to_str().unwrap(), "--input", "x=4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing input for y"));
}

#[test]
fn lts_formats() {
    let path = corpus("loop");
    let dot = descent(&["lts", path.to_str().unwrap(), "--skip-distill"]);
    assert_eq!(dot.status.code(), Some(0));
    assert!(stdout(&dot).starts_with("digraph"));
    let json = descent(&[
        "lts",
        path.to_str().unwrap(),
        "--skip-distill",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["folds"].as_array().unwrap().len(), 1);
    let text = descent(&[
        "lts",
        path.to_str().unwrap(),
        "--skip-distill",
        "--format",
        "text",
    ]);
    assert!(stdout(&text).contains("==fold {x↦x}==> s1"));
}

#[test]
fn validate() {
    let path = corpus("sub_grow_distilled");
    let o = descent(&["validate", path.to_str().unwrap()]);
    assert_eq!(
        (o.status.code(), stdout(&o).as_str()),
        (Some(0), "distilled\n")
    );
    let path = corpus("gcd");
    let o = descent(&["validate", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["distilled"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_2() {
    let path = corpus("loop");
    let p = path.to_str().unwrap();
    for args in [
        vec!["check", p, "--format", "dot"],
        vec!["check", p, "--limits", "depth=0"],
        vec!["check", p, "--limits", "width=3"],
        vec!["eval", p, "--fuel", "0", "--input", "x=1"],
        vec!["check", "/nonexistent/file.hl"],
    ] {
        let o = descent(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn parse_errors_name_the_location() {
    let f = source_file("f x where\nf x = case x of { Zero -> Zero | Succ y -> };\n");
    let o = descent(&["check", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains(&format!("{}:2:", f.path().display())), "{msg}");

    let f = source_file("f x where\nf x = Succ x x;\n");
    let o = descent(&["validate", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("arity"), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic() {
    let path = corpus("gcd_distilled");
    let p = path.to_str().unwrap();
    for args in [
        vec!["check", p],
        vec!["lts", p, "--format", "json"],
        vec!["distill", p],
    ] {
        assert_eq!(stdout(&descent(&args)), stdout(&descent(&args)), "{args:?}");
    }
}
