use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn noether(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noether"))
        .args(args)
        .env_remove("NOETHER_COLOR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SCALAR_BUNDLE: &str = r#"{"base_dim": 1, "families": [
    {"name": "y", "role": "dynamic-field", "shape": []},
    {"name": "xi", "role": "parameter", "shape": []},
    {"name": "y_bar", "role": "dual-field", "shape": [], "dual_of": "y"},
    {"name": "xi_bar", "role": "dual-parameter", "shape": [], "dual_of": "xi"}
]}"#;

fn operator_file(dir: &Path, name: &str, coeffs: &str) -> String {
    let text = format!(
        r#"{{"bundle": {SCALAR_BUNDLE}, "source": ["xi"], "target": ["y"], "role": "gauge-symmetry", "coeffs": [{coeffs}]}}"#
    );
    write(dir, name, &text)
}

fn density_file(dir: &Path, name: &str, density: &str) -> String {
    write(dir, name, &format!(r#"{{"bundle": {SCALAR_BUNDLE}, "density": "{density}"}}"#))
}

fn strip_millis(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("millis");
            m.values_mut().for_each(strip_millis);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_millis),
        _ => {}
    }
}

#[test]
fn verify_cs_passes() {
    let o = noether(&["verify", "cs"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS  cs/gauge-symmetry"));
    assert!(out.contains("0 failed"));
}

#[test]
fn verify_bf_chain_passes() {
    let o = noether(&["--format", "json", "verify", "bf:5:2:2"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|c| c["check"].as_str().unwrap()).collect();
    assert!(names.contains(&"bf:5:2:2/chain"));
    assert!(names.contains(&"bf:5:2:2/dual-chain"));
    assert!(v.as_array().unwrap().iter().all(|c| c["status"] == "pass"));
}

#[test]
fn verify_rejects_bad_selectors() {
    for sel in ["bf:4:1:1", "bf:3:1", "ym", "bf:x:1:1"] {
        let o = noether(&["verify", sel]);
        assert_eq!(code(&o), 2, "{sel}");
        assert!(stderr(&o).starts_with("error:"), "{sel}");
    }
}

#[test]
fn json_reports_are_reproducible() {
    let run = || {
        let mut v = json(&noether(&["--format", "json", "verify", "bf:6:2:3"]));
        strip_millis(&mut v);
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(run(), run());
    let prop = || {
        let mut v = json(&noether(&["--format", "json", "property", "--suite", "leibniz", "--trials", "20", "--seed", "9"]));
        strip_millis(&mut v);
        v
    };
    assert_eq!(prop(), prop());
}

#[test]
fn el_on_free_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = density_file(dir.path(), "free.json", "1/2*y[;(0)]^2");
    let o = noether(&["el", &f]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o), serde_json::json!({"y": "-1*y[;(0,0)]"}));
}

#[test]
fn el_on_constant_density_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = density_file(dir.path(), "c.json", "7/3");
    let o = noether(&["el", &f]);
    assert_eq!(json(&o), serde_json::json!({"y": "0"}));
}

#[test]
fn el_rejects_unknown_and_non_dynamic_fields() {
    let dir = tempfile::tempdir().unwrap();
    let f = density_file(dir.path(), "free.json", "1/2*y[;(0)]^2");
    assert_eq!(code(&noether(&["el", &f, "--fields", "nope"])), 2);
    assert_eq!(code(&noether(&["el", &f, "--fields", "xi"])), 2);
    assert_eq!(code(&noether(&["el", &f, "--fields", "y"])), 0);
}

#[test]
fn el_on_dumped_bf_density_gives_dh_components() {
    let dir = tempfile::tempdir().unwrap();
    let o = noether(&["dump", "bf:3:1:1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for f in ["bf-3-1-1.bundle.json", "bf-3-1-1.density.json", "bf-3-1-1.symmetry.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let o = noether(&["el", dir.path().join("bf-3-1-1.density.json").to_str().unwrap()]);
    let v = json(&o);
    // (d_H B)_{12} = d_1 B_2 − d_2 B_1 pairs with A_0
    assert_eq!(v["A[0]"], "1*B[2;(1)] - 1*B[1;(2)]");
    assert_eq!(v["B[2]"], "1*A[1;(0)] - 1*A[0;(1)]");
    assert_eq!(v.as_object().unwrap().len(), 6);
}

#[test]
fn dump_writes_chain_stages() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&noether(&["dump", "bf:6:2:3", "--out", dir.path().to_str().unwrap()])), 0);
    for k in 0..2 {
        assert!(dir.path().join(format!("bf-6-2-3.stage{k}.json")).exists(), "stage {k}");
    }
    let sym = dir.path().join("bf-6-2-3.symmetry.json");
    let o = noether(&["eta", sym.to_str().unwrap(), "--roundtrip"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("roundtrip: ok"));
}

#[test]
fn eta_order_zero_keeps_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let f = operator_file(dir.path(), "op.json", r#"{"a": "y", "r": "xi", "jet": "()", "expr": "1*x[0]*y^2"}"#);
    let o = noether(&["eta", &f]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["source"], serde_json::json!(["y_bar"]));
    assert_eq!(v["target"], serde_json::json!(["xi_bar"]));
    assert_eq!(v["role"], "noether");
    assert_eq!(
        v["coeffs"],
        serde_json::json!([{"a": "xi_bar", "r": "y_bar", "jet": "()", "expr": "1*x[0]*y^2"}])
    );
}

#[test]
fn eta_first_order_shape() {
    // υ = c0 ξ + c1 ξ_(0)  ↦  (c0 − d_0 c1) ȳ − c1 ȳ_(0)
    let dir = tempfile::tempdir().unwrap();
    let f = operator_file(
        dir.path(),
        "op.json",
        r#"{"a": "y", "r": "xi", "jet": "()", "expr": "y"},
           {"a": "y", "r": "xi", "jet": "(0)", "expr": "x[0]*y"}"#,
    );
    let o = noether(&["eta", &f, "--roundtrip"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("roundtrip: ok"));
    let v = json(&o);
    assert_eq!(
        v["coeffs"],
        serde_json::json!([
            {"a": "xi_bar", "r": "y_bar", "jet": "()", "expr": "-1*x[0]*y[;(0)]"},
            {"a": "xi_bar", "r": "y_bar", "jet": "(0)", "expr": "-1*x[0]*y"}
        ])
    );
}

#[test]
fn eta_output_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let f = operator_file(
        dir.path(),
        "op.json",
        r#"{"a": "y", "r": "xi", "jet": "(0,0)", "expr": "1*y[;(0)]"}"#,
    );
    let first = stdout(&noether(&["eta", &f]));
    let g = write(dir.path(), "eta.json", &first);
    let twice = json(&noether(&["eta", &g]));
    let orig: Value = serde_json::from_str(&fs::read_to_string(&f).unwrap()).unwrap();
    assert_eq!(twice["coeffs"], orig["coeffs"]);
}

#[test]
fn eta_parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write(dir.path(), "bad.json", "{not json");
    assert_eq!(code(&noether(&["eta", &bad_json])), 2);
    let bad_expr = operator_file(dir.path(), "e.json", r#"{"a": "y", "r": "xi", "jet": "()", "expr": "y +* 2"}"#);
    let o = noether(&["eta", &bad_expr]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 1, column"), "{}", stderr(&o));
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&noether(&["eta", missing.to_str().unwrap()])), 2);
}

#[test]
fn property_runs() {
    let o = noether(&["property", "--suite", "eta-involution", "--trials", "200"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = noether(&["property", "--suite", "dh-delta", "--trials", "100", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["trials"], 100);
}

#[test]
fn corrupted_eta_reports_counterexample() {
    let o = noether(&["property", "--suite", "eta-involution", "--trials", "10", "--seed", "3", "--corrupt-eta"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("failing seed: 3"), "{out}");
    assert!(out.contains("counterexample:"));
}

#[test]
fn property_usage_errors() {
    assert_eq!(code(&noether(&["property", "--suite", "bogus"])), 2);
    assert_eq!(code(&noether(&["property", "--suite", "leibniz", "--trials", "0"])), 2);
    assert_eq!(code(&noether(&["--format", "yaml", "verify", "cs"])), 2);
    assert_eq!(code(&noether(&[])), 2);
}

#[test]
fn color_only_when_requested() {
    let plain = noether(&["verify", "bf:3:1:1"]);
    assert!(!stdout(&plain).contains('\x1b'));
    let colored = Command::new(env!("CARGO_BIN_EXE_noether"))
        .args(["verify", "bf:3:1:1"])
        .env("NOETHER_COLOR", "1")
        .output()
        .unwrap();
    assert!(String::from_utf8(colored.stdout).unwrap().contains("\x1b[32mPASS"));
}
