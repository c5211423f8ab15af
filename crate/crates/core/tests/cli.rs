use std::path::PathBuf;

use rva::cli::main_with;

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(format!("{name}.rva")).display().to_string()
}

/// Runs the CLI in-process; returns (status, stdout, stderr).
fn rva(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["rva"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn temp_program(name: &str, src: &str) -> String {
    let path = std::env::temp_dir().join(format!("rva-cli-test-{}-{name}.rva", std::process::id()));
    std::fs::write(&path, src).unwrap();
    path.display().to_string()
}

fn error_json(stderr: &str) -> serde_json::Value {
    serde_json::from_str(stderr.trim()).unwrap_or_else(|e| panic!("{e}: {stderr}"))
}

#[test]
fn check_prints_every_type() {
    let (code, out, _) = rva(&["check", &example("mlp")]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.contains(&"def R_MLP : Real(2)"), "{out}");
    assert!(lines.contains(&"handler H_MLP : RH(Real(2))"), "{out}");
    assert!(lines.contains(&"main : Real(2)"), "{out}");
}

#[test]
fn check_json_lists_entries() {
    let (code, out, _) = rva(&["check", &example("unet"), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let entries = v.as_array().unwrap();
    assert!(entries.iter().any(|e| e["name"] == "main" && e["type"] == "Real(134)"), "{out}");
    assert!(entries.iter().any(|e| e["name"] == "R_Unet" && e["type"] == "Real(512)"), "{out}");
}

#[test]
fn run_reports_value_and_heap() {
    let (code, out, _) = rva(&["run", &example("ste")]);
    assert_eq!(code, 0);
    assert_eq!(out, "value: [-0.5, -1.0, 2.0, -0.125]\nheap: {}\n");

    let (code, out, _) = rva(&["run", &example("mlp"), "--json", "--seed", "0"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["firings"], 1);
    assert_eq!(v["heap"]["l0"].as_array().unwrap().len(), 6);
}

#[test]
fn trace_matches_golden_file() {
    let (code, out, _) = rva(&["trace", &example("mlp"), "--seed", "0"]);
    assert_eq!(code, 0);
    let golden = include_str!("golden/mlp_trace.txt");
    assert_eq!(out.lines().count(), golden.lines().count());
    for (i, (got, want)) in out.lines().zip(golden.lines()).enumerate() {
        assert_eq!(got, want, "line {i}");
    }
}

#[test]
fn heap_overrides_change_the_run() {
    let path = temp_program("heap.json", r#"{"l0": [0, 0, 0, 0, 0, 0], "l1": [1, 1, 1, 1, 1, 1]}"#);
    let (code, out, err) = rva(&["run", &example("mlp"), "--heap", &path, "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    // zero first layer gives zero hidden activations, so l1 keeps its values
    assert_eq!(v["heap"]["l1"], serde_json::json!([1.0, 1.0, 1.0, 1.0, 1.0, 1.0]));
}

#[test]
fn grad_check_passes_on_corpus() {
    for name in ["mlp", "cnn", "ste"] {
        let (code, out, err) = rva(&["grad-check", &example(name)]);
        assert_eq!(code, 0, "{name}: {out}{err}");
        assert!(out.lines().all(|l| l.starts_with("ok ")), "{out}");
    }
}

#[test]
fn oracle_compare_agrees() {
    let (code, out, _) = rva(&["oracle-compare", &example("resnet"), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["max_rel_diff"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn train_lowers_the_loss() {
    let (code, out, _) = rva(&["train", &example("mlp"), "--epochs", "20", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let losses: Vec<f64> = v["losses"].as_array().unwrap().iter().map(|l| l.as_f64().unwrap()).collect();
    assert_eq!(losses.len(), 21);
    assert!(losses.last().unwrap() < &losses[0]);

    let (_, text, _) = rva(&["train", &example("mlp"), "--epochs", "3"]);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().last().unwrap().starts_with("final      loss "));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(rva(&[]).0, 1);
    assert_eq!(rva(&["run", &example("mlp"), "--tie-break", "sometimes"]).0, 1);
    let (code, out, _) = rva(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("oracle-compare"));
}

#[test]
fn missing_file_is_an_input_error() {
    let (code, _, err) = rva(&["check", "/nonexistent/prog.rva"]);
    assert_eq!(code, 1);
    assert_eq!(error_json(&err)["error"], "input");
}

#[test]
fn parse_and_type_errors_exit_one() {
    let path = temp_program("parse", "main = ret (;");
    let (code, _, err) = rva(&["check", &path]);
    assert_eq!(code, 1);
    assert_eq!(error_json(&err)["error"], "parse");

    let path = temp_program("type", "main = ret swish<3>([1.0, 2.0]);");
    let (code, _, err) = rva(&["check", &path]);
    assert_eq!(code, 1);
    assert_eq!(error_json(&err)["error"], "type");
}

#[test]
fn runtime_errors_exit_two() {
    // out of fuel
    let (code, _, err) = rva(&["run", &example("mlp"), "--fuel", "3"]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"], "runtime");
}

#[test]
fn strict_ties_are_runtime_errors() {
    let path = temp_program("tie", "main = ret pool<4, 2, 1>([1.0, 1.0, 0.0, 0.0]);");
    let (code, out, err) = rva(&["run", &path]);
    assert_eq!(code, 2, "{out}{err}");
    let (code, out, _) = rva(&["run", &path, "--tie-break", "first"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("value: "), "{out}");
}
