use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn adfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adfm")).args(args).output().expect("binary runs")
}

fn four_station() -> String {
    fixture("four_station.json").to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("valid JSON report")
}

fn labels(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|p| p.as_str().unwrap().to_string()).collect()
}

#[test]
fn analyze_text_lists_measures_and_flags() {
    let out = adfm(&["analyze", &four_station()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for needle in ["163192", "13.3638", "10.0785", "ADFM"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let flagged = text.lines().filter(|l| l.trim_end().ends_with("ADFM")).count();
    assert_eq!(flagged, 2);
}

#[test]
fn analyze_json_has_documented_keys() {
    let v = json(&adfm(&["analyze", &four_station(), "--format", "json"]));
    for key in [
        "version",
        "config",
        "modes",
        "measures",
        "bipartitions",
        "perturbation",
        "candidates",
        "ranking",
    ] {
        assert!(v.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(v["config"]["command"], "analyze");
    assert_eq!(v["config"]["seed"], 0);
    let measures = v["measures"].as_array().unwrap();
    assert_eq!(measures.len(), 4);
    let d1 = measures[0]["value"].as_f64().unwrap();
    assert!((d1 - 1.63e5).abs() / 1.63e5 < 0.02);
    assert_eq!(measures[0]["classified_adfm"], true);
    assert_eq!(measures[1]["classified_adfm"], false);
}

#[test]
fn text_and_json_agree_to_six_digits() {
    let text = stdout(&adfm(&["analyze", &four_station()]));
    let v = json(&adfm(&["analyze", &four_station(), "--format", "json"]));
    for m in v["measures"].as_array().unwrap() {
        let x = m["value"].as_f64().unwrap();
        let rendered = format!("{:.5e}", x);
        let mantissa: f64 = rendered.split('e').next().unwrap().parse().unwrap();
        let exp: i32 = rendered.split('e').nth(1).unwrap().parse().unwrap();
        let rounded = mantissa * 10f64.powi(exp);
        assert!(
            text.split_whitespace().any(|w| w.parse::<f64>().is_ok_and(|t| (t - rounded).abs() <= 1e-9 * rounded.abs())),
            "{x} not rendered in text"
        );
    }
}

#[test]
fn missing_model_exits_2_naming_path() {
    let out = adfm(&["analyze", "no/such/model.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no/such/model.json"));
}

#[test]
fn malformed_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "x", "stations": [{"inputs": 1, "outputs": 1}], "A": [[1]], "B": [[1]], "C": [[1]]}"#).unwrap();
    let out = adfm(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("partition"));
}

#[test]
fn mmatrix_matches_displayed_matrix() {
    let display = [
        [14.0, 0.0, 0.0, 0.004],
        [-53.333, -56.0, -52.333, -0.012],
        [38.0, 52.0, 0.002, 0.010],
        [10.833, -24.0, -20.666, 9.336],
    ];
    let v = json(&adfm(&["mmatrix", &four_station(), "--mode", "1", "--format", "json"]));
    let re = v["m_matrix"]["re"].as_array().unwrap();
    for (i, row) in display.iter().enumerate() {
        for (j, want) in row.iter().enumerate() {
            let got = re[i][j].as_f64().unwrap();
            assert!((got - want).abs() <= 5e-4, "M[{i}][{j}] = {got}, display {want}");
        }
    }
    assert!(v["m_matrix"]["witness"].is_null());
}

#[test]
fn mode_selector_must_match() {
    let out = adfm(&["mmatrix", &four_station(), "--mode", "2.5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("does not match"));
    let out = adfm(&["mmatrix", &four_station(), "--mode", "one"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn rdfm_finds_both_bipartitions_and_verifies() {
    let v = json(&adfm(&["rdfm", &four_station(), "--mode", "1", "--epsilon", "0.015", "--format", "json"]));
    let bips = v["bipartitions"].as_array().unwrap();
    assert_eq!(bips.len(), 2);
    assert_eq!(bips[0]["eta"], serde_json::json!([2, 3, 4]));
    assert_eq!(bips[0]["chosen"], true);
    assert_eq!(bips[1]["eta"], serde_json::json!([4]));
    assert_eq!(bips[1]["chosen"], false);
    let p = &v["perturbation"][0];
    assert_eq!(p["verification"]["oracle"]["fixed"], true);
    assert!(p["verification"]["witness"].is_object());
    assert!(p["record"]["delta_total_fro"].as_f64().unwrap() <= 0.02);
}

#[test]
fn rdfm_writes_model_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perturbed.json");
    let out = adfm(&[
        "rdfm",
        &four_station(),
        "--mode",
        "1",
        "--epsilon",
        "0.015",
        "--all-candidates",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("perturbed.perturbation.json")).unwrap()).unwrap();
    let changes = sidecar["entry"]["record"]["changes"].as_array().unwrap();
    assert_eq!(changes.len(), 6);
    assert!(changes.iter().all(|c| c["before"].is_number() && c["after"].is_number()));

    let again = json(&adfm(&["analyze", path.to_str().unwrap(), "--format", "json"]));
    let m1 = &again["measures"][0];
    assert_eq!(m1["value"], "inf");
    assert_eq!(m1["exact_dfm"], true);
}

#[test]
fn rdfm_small_epsilon_exits_4_with_minimum() {
    let out = adfm(&["rdfm", &four_station(), "--mode", "1", "--epsilon", "1e-6"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("smallest admissible epsilon: 5e-3"));
}

#[test]
fn rdfm_on_free_mode_exits_4() {
    let out = adfm(&["rdfm", &four_station(), "--mode", "2", "--epsilon", "0.015"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn rdfm_requires_epsilon_or_scan() {
    assert_eq!(code(&adfm(&["rdfm", &four_station(), "--mode", "1"])), 2);
    let v = json(&adfm(&["rdfm", &four_station(), "--mode", "1", "--scan", "--format", "json"]));
    let bips = v["bipartitions"].as_array().unwrap();
    assert_eq!(bips.len(), 14);
    assert!((bips[0]["cost"].as_f64().unwrap() - 0.005).abs() < 1e-12);
}

#[test]
fn select_reproduces_reference_rows_and_winner() {
    let v = json(&adfm(&[
        "select",
        &four_station(),
        "--modes",
        "1,3",
        "--epsilon",
        "0.015",
        "--max-links",
        "2",
        "--format",
        "json",
    ]));
    let ranking = &v["ranking"];
    assert_eq!(ranking["winner"], "K14,K41");
    let order: Vec<String> = ranking["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["pattern"].as_str().unwrap().to_string())
        .collect();
    let rows = ["K14,K41", "K14,K31", "K12,K31,K34", "K13,K24,K41"];
    let positions: Vec<usize> = rows.iter().map(|r| order.iter().position(|o| o == r).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{order:?}");
    assert_eq!(labels(&v["removal_sets"][1]["sets"]), vec!["K31", "K41"]);
}

#[test]
fn select_single_mode_single_link() {
    let v = json(&adfm(&[
        "select", &four_station(), "--modes", "1", "--epsilon", "0.015", "--max-links", "1", "--format", "json",
    ]));
    assert_eq!(labels(&v["candidates"]), vec!["K14"]);
    assert_eq!(v["ranking"]["winner"], "K14");
}

#[test]
fn select_without_modes_is_usage_error() {
    assert_eq!(code(&adfm(&["select", &four_station(), "--epsilon", "0.015"])), 2);
}

#[test]
fn select_free_mode_exits_4() {
    assert_eq!(code(&adfm(&["select", &four_station(), "--modes", "1,2", "--epsilon", "0.015"])), 4);
}

#[test]
fn select_without_removal_set_exits_5() {
    // mode 1 is invisible to every input and output, so no link can move it
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stuck.json");
    std::fs::write(
        &path,
        r#"{"name": "stuck", "stations": [{"inputs": 1, "outputs": 1}, {"inputs": 1, "outputs": 1}],
            "A": [[1, 0], [0, 2]], "B": [[0, 0], [1, 1]], "C": [[0, 1], [0, 0]], "D": [[1, 1], [0, 0]]}"#,
    )
    .unwrap();
    let out = adfm(&["select", path.to_str().unwrap(), "--modes", "1", "--epsilon", "0", "--max-links", "2"]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

#[test]
fn json_reports_are_byte_identical() {
    let args = [
        "select", &four_station(), "--modes", "1,3", "--epsilon", "0.015", "--format", "json", "--seed", "42",
    ];
    let a = adfm(&args);
    let b = adfm(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = adfm(&["analyze", &four_station(), "--format", "json", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["model"]["name"], "four_station");
}
