//! End-to-end tests of the `ppwave` binary: report contents, exit codes,
//! flag handling, and byte-level determinism of the JSON output.

use std::process::{Command, Output};

fn ppwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn inspect_ex_dim3_reports_rank_one_non_plane_wave() {
    let out = ppwave(&["inspect", "ex_dim3", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["plane_wave"], serde_json::json!(false));
    assert_eq!(v["ricci_flat"], serde_json::json!(false));
    let hist = v["curvature_rank_histogram"].as_object().unwrap();
    assert_eq!(hist.len(), 1);
    assert!(hist.contains_key("1"), "all sampled ranks are 1: {hist:?}");
    assert_eq!(v["dim_bound"], serde_json::json!(5));
}

#[test]
fn inspect_symmetric_wave_is_ricci_flat_plane_wave() {
    let out = ppwave(&["inspect", "cw_ricci_flat_2d", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ricci_flat"], serde_json::json!(true));
    assert_eq!(v["plane_wave"], serde_json::json!(true));
    assert_eq!(v["plane_wave_method"], serde_json::json!("structural"));
}

#[test]
fn inspect_sippel_goenner_finds_the_certificate() {
    let out = ppwave(&["inspect", "sippel_goenner", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let cert = v["decomposability_certificate"].as_array().unwrap();
    let s = 1.0 / 2.0f64.sqrt();
    assert!((cert[0].as_f64().unwrap() - s).abs() < 1e-6);
    assert!((cert[1].as_f64().unwrap() - s).abs() < 1e-6);
}

#[test]
fn killing_requires_normal_form_or_flag() {
    let out = ppwave(&["killing", "ex_dim3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("--auto-normalize"),
        "{}",
        stderr(&out)
    );

    let out = ppwave(&["killing", "ex_dim3", "--auto-normalize", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["dimension"], serde_json::json!(3));
    assert_eq!(v["auto_normalized"], serde_json::json!(true));
    assert_eq!(v["homogeneity"]["spans_tangent"], serde_json::json!(true));
    assert_eq!(v["transversal_dimension"], serde_json::json!(2));
}

#[test]
fn killing_flat_attains_the_bound() {
    let out = ppwave(&["killing", "flat_n2", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["dimension"], serde_json::json!(8));
    assert_eq!(v["dim_bound"], serde_json::json!(8));
}

#[test]
fn killing_ehlers_kundt_is_not_homogeneous() {
    let out = ppwave(&["killing", "ehlers_kundt_exp", "--auto-normalize", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["dimension"], serde_json::json!(3));
    assert_eq!(v["homogeneity"]["spans_tangent"], serde_json::json!(false));
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    for args in [
        vec!["inspect", "rank1_example", "--json"],
        vec!["killing", "cw_ricci_flat_2d", "--json"],
        vec!["normalize", "ex_dim3", "--json"],
    ] {
        let a = stdout(&ppwave(&args));
        let b = stdout(&ppwave(&args));
        assert_eq!(a, b, "non-deterministic output for {args:?}");
        assert!(!a.is_empty());
    }
}

#[test]
fn generate_round_trips_through_inspect() {
    let out = ppwave(&["generate", "rank1_example"]);
    assert!(out.status.success());
    let doc_text = stdout(&out);
    let path = std::env::temp_dir().join("ppwave_cli_test_rank1.json");
    std::fs::write(&path, &doc_text).unwrap();
    let out = ppwave(&["inspect", path.to_str().unwrap(), "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["plane_wave"], serde_json::json!(true));
    let hist = v["curvature_rank_histogram"].as_object().unwrap();
    assert!(hist.contains_key("1") && hist.len() == 1);
    std::fs::remove_file(&path).ok();
}

#[test]
fn normalize_reports_the_contract() {
    let out = ppwave(&["normalize", "ex_dim3", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["max_h_on_axis"].as_f64().unwrap() < 1e-8);
    assert!(v["max_grad_on_axis"].as_f64().unwrap() < 1e-8);
    assert!(v["transform"]["c_nodes"].as_array().unwrap().len() > 10);
}

#[test]
fn verify_paper_exit_codes() {
    let out = ppwave(&["verify-paper", "heisenberg_brackets"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("[PASS] heisenberg_brackets"));

    let out = ppwave(&["verify-paper", "no_such_test"]);
    assert_eq!(out.status.code(), Some(2));

    let out = ppwave(&["verify-paper"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_paper_emits_csv_curves() {
    let path = std::env::temp_dir().join("ppwave_cli_test_curves.csv");
    let out = ppwave(&[
        "verify-paper",
        "rank1_example",
        "--emit-csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("u,S11,S12,S22,det_Sdot"));
    assert!(csv.lines().count() > 50);
    std::fs::remove_file(&path).ok();
}

#[test]
fn malformed_documents_exit_with_usage_error() {
    let path = std::env::temp_dir().join("ppwave_cli_test_bad.json");
    std::fs::write(&path, "{\"name\": \"broken\"").unwrap();
    let out = ppwave(&["inspect", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&path).ok();

    let out = ppwave(&["inspect", "definitely_missing_example"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_documents_match_the_library_catalog() {
    // every bundled document builds, and its profile agrees with the catalog
    // entry of the same name on a few sample points
    for name in ppwave::catalog::names() {
        let out = ppwave(&["inspect", name, "--json"]);
        assert!(out.status.success(), "inspect {name}: {}", stderr(&out));
    }
}

#[test]
fn bundled_documents_reproduce_the_regression_sidecar() {
    let expected: serde_json::Value =
        serde_json::from_str(include_str!("../assets/expected_values.json")).unwrap();
    for (name, want) in expected.as_object().unwrap() {
        if name.starts_with('_') {
            continue;
        }
        let inspect: serde_json::Value =
            serde_json::from_str(&stdout(&ppwave(&["inspect", name, "--json"]))).unwrap();
        assert_eq!(
            inspect["plane_wave"], want["plane_wave"],
            "{name}: plane_wave"
        );
        assert_eq!(
            inspect["ricci_flat"], want["ricci_flat"],
            "{name}: ricci_flat"
        );
        let has_cert = !inspect["decomposability_certificate"].is_null();
        assert_eq!(
            has_cert,
            want["decomposable"].as_bool().unwrap(),
            "{name}: certificate"
        );

        let killing: serde_json::Value = serde_json::from_str(&stdout(&ppwave(&[
            "killing",
            name,
            "--auto-normalize",
            "--json",
        ])))
        .unwrap();
        assert_eq!(
            killing["dimension"], want["killing_dimension"],
            "{name}: dim k"
        );
        assert_eq!(
            killing["transversal_dimension"], want["transversal_dimension"],
            "{name}: dim k/k(V)"
        );
        assert_eq!(
            killing["homogeneity"]["spans_tangent"], want["spans_tangent"],
            "{name}: spans_tangent"
        );
        // the audit gap must make every reported dimension trustworthy
        let gap = killing["singular_value_gap"].as_f64();
        assert!(gap.is_none() || gap.unwrap() >= 1e3, "{name}: gap {gap:?}");
    }
}
