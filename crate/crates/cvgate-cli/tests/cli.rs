use std::process::{Command, Output};

fn cvgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvgate")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    cvgate(args).status.code().unwrap()
}

#[test]
fn exit_codes_follow_error_category() {
    assert_eq!(code(&["gate"]), 0);
    assert_eq!(code(&["gate", "--lm", "1.5", "--lp", "-1.5"]), 3);
    assert_eq!(code(&["gate", "--lm", "0", "--lp", "0"]), 2);
    assert_eq!(code(&["gate", "--t", "1.5"]), 3);
    assert_eq!(code(&["gate", "--dim", "4", "--input", "coherent:3"]), 4);
    assert_eq!(code(&["gate", "--bogus"]), 2);
    assert_eq!(code(&["plan"]), 2);
}

#[test]
fn unreachable_gate_says_why() {
    let out = cvgate(&["gate", "--lm", "1.5", "--lp", "-1.5"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
}

#[test]
fn csv_starts_with_config_then_header() {
    let out = cvgate(&["fig4", "--beta", "1", "--nmax", "2,4", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.split("\r\n").collect();
    assert!(lines[0].starts_with("# config: {"));
    let cfg: serde_json::Value = serde_json::from_str(lines[0].trim_start_matches("# config: ")).unwrap();
    assert_eq!(cfg["common"]["format"], "csv");
    assert!(lines[1].contains("beta") && lines[1].split(',').any(|h| h == "F"));
    assert_eq!(lines.iter().filter(|l| !l.is_empty()).count(), 4);
}

#[test]
fn json_output_parses() {
    let out = cvgate(&["cubic"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
}
