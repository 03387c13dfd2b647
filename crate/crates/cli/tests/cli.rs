use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn secop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secop")).args(args).output().expect("run secop")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn validate_reports_hull() {
    let o = secop(&["validate", &cfg("triangle_interior.json")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["valid"], true);
    assert_eq!(v["interior"], serde_json::json!([3]));
}

#[test]
fn collinear_points_are_invalid() {
    let o = secop(&["validate", &cfg("collinear.json")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("collinear"));
}

#[test]
fn malformed_input_exits_3() {
    let dir = TempDir::new().unwrap();
    let truncated = write(&dir, "t.json", r#"{"points": [[0, 0], [1, 0"#);
    assert_eq!(code(&secop(&["validate", &truncated])), 3);
    let extra = write(&dir, "e.json", r#"{"points": [[0, 0], [1, 0], [0, 1]], "colour": 1}"#);
    assert_eq!(code(&secop(&["validate", &extra])), 3);
    let missing = dir.path().join("absent.json").display().to_string();
    assert_eq!(code(&secop(&["validate", &missing])), 3);
    assert_eq!(code(&secop(&["enumerate"])), 3);
    assert_eq!(code(&secop(&["frobnicate", "x"])), 3);
    assert_eq!(code(&secop(&["enumerate", &cfg("square.json"), "--budget", "lots"])), 3);
}

#[test]
fn bad_region_is_invalid() {
    let o = secop(&["enumerate", &cfg("square.json"), "--region", "0,1,9"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_subdivision_id_exits_3() {
    let o = secop(&["secondary-cone", &cfg("square.json"), "--subdivision", "99"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn tiny_budget_exits_5() {
    let o = secop(&["enumerate", &cfg("hexagon.json"), "--budget", "2"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn flipped_sign_fails_verification() {
    let o = secop(&["verify", &cfg("pentagon.json"), "--flip-sign", "0"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["ok"], false);
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert_eq!(code(&secop(&["verify", &cfg("pentagon.json"), "--flip-sign", "100000"])), 3);
}

#[test]
fn non_generic_maps_to_exit_4() {
    let e = secop_cli::CliError::Core(secop::Error::NonGenericPerturbation { seed: 1, reason: "test".into() });
    assert_eq!(e.exit_code(), secop_cli::exit::NON_GENERIC);
}

#[test]
fn enumerate_counts() {
    let v = json(&secop(&["enumerate", &cfg("hexagon.json")]));
    assert_eq!(v["by_walls"], serde_json::json!([1, 9, 21, 14]));
    assert_eq!(v["count"], 45);
    let v = json(&secop(&["enumerate", &cfg("hexagon.json"), "--max-codim", "1"]));
    assert_eq!(v["count"], 10);
}

#[test]
fn classify_pentagon_and_triangle() {
    let v = json(&secop(&["classify", &cfg("pentagon.json")]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r["status"] == "Regular"));
    assert_eq!(v["provenance"]["seed"], 1);
    let v = json(&secop(&["classify", &cfg("triangle_interior.json"), "--seed", "9"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["provenance"]["seed"], 9);
}

#[test]
fn nested_triangles_has_irregular_triangulation() {
    let v = json(&secop(&["classify", &cfg("nested_triangles.json")]));
    let bad: Vec<&str> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "IrregularNotPerturbedlyRegular")
        .map(|r| r["key"].as_str().unwrap())
        .collect();
    let triangulations: Vec<&&str> = bad.iter().filter(|k| k.split('|').all(|c| c.split(',').count() == 3)).collect();
    assert_eq!(triangulations, [&"0,1,3|0,3,5|0,5,2|1,2,4|1,4,3|2,5,4|3,4,5"]);
}

#[test]
fn differential_of_pentagon_top_cell() {
    let v = json(&secop(&["differential", &cfg("pentagon.json"), "--subdivision", "0"]));
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 5);
    assert!(terms.iter().all(|t| t["coefficient"].as_i64().unwrap().abs() == 1));
    let whole = json(&secop(&["differential", &cfg("pentagon.json")]));
    assert!(whole["complex"]["entries"].as_array().is_some_and(|e| !e.is_empty()));
}

#[test]
fn secondary_cone_of_square_diagonal() {
    let o = secop(&["secondary-cone", &cfg("square.json"), "--subdivision", "1"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn render_subdivision_svg() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sq.svg");
    let o = secop(&["render", &cfg("square.json"), "--subdivision", "1", "-o", &out.display().to_string()]);
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="cell""#).count(), 2);
    assert_eq!(svg.matches(r#"class="wall""#).count(), 1);
    assert_eq!(svg.matches(r#"class="point""#).count(), 4);
}

#[test]
fn render_fan_svg() {
    let o = secop(&["render", &cfg("square.json"), "--fan", "1"]);
    assert_eq!(code(&o), 0);
    let svg = String::from_utf8(o.stdout).unwrap();
    assert_eq!(svg.matches(r#"class="vertex""#).count(), 2);
    assert_eq!(svg.matches(r#"class="edge""#).count(), 1);
    assert_eq!(svg.matches(r#"class="ray""#).count(), 4);
    let trivial = String::from_utf8(secop(&["render", &cfg("square.json"), "--fan", "0"]).stdout).unwrap();
    assert_eq!(trivial.matches(r#"class="vertex""#).count(), 1);
}

#[test]
fn fan_of_irregular_subdivision_is_refused() {
    let v = json(&secop(&["classify", &cfg("nested_triangles.json")]));
    let id = v["rows"].as_array().unwrap().iter().find(|r| r["status"] != "Regular").unwrap()["id"].as_u64().unwrap();
    let o = secop(&["render", &cfg("nested_triangles.json"), "--fan", &id.to_string()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn outputs_are_byte_identical() {
    for args in [
        vec!["verify", "square.json"],
        vec!["classify", "hexagon.json", "--seed", "4"],
        vec!["render", "pentagon.json", "--subdivision", "3"],
    ] {
        let mut a = args.clone();
        let path = cfg(args[1]);
        a[1] = &path;
        let (x, y) = (secop(&a), secop(&a));
        assert_eq!(code(&x), 0, "{args:?}");
        assert_eq!(x.stdout, y.stdout, "{args:?}");
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&secop(&["--help"])), 0);
}
