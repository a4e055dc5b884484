use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linv_core::fixtures::{element_to_json, load_fixture, FixtureJson, Param, RefinementJson};
use linv_core::special::cm_data;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(format!("{name}.json")).to_string_lossy().into_owned()
}

fn linv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linv")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn validate_checked_in_fixtures() {
    for name in ["qi_p5", "qi_p5_teich3", "cm", "adjcm"] {
        let out = linv(&["validate", &fixture(name)]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("all checks pass"));
    }
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"p\": 5}").unwrap();
    assert_eq!(code(&linv(&["validate", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&linv(&["compute", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&linv(&["validate", "does-not-exist.json"])), 1);
    assert_eq!(code(&linv(&["compute", &fixture("cm"), "--refinement", "nope"])), 1);
    assert_eq!(code(&linv(&["compute", &fixture("cm"), "--sweep", "s=1,x"])), 1);
    assert_eq!(code(&linv(&["compute"])), 1);
}

#[test]
fn compute_json_report() {
    let out = linv(&["compute", &fixture("qi_p5"), "--format", "json", "--cross-check"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["e"], 1);
    assert_eq!(v["d_plus"], 0);
    assert_eq!(v["regular"], true);
    assert!(v["certified_precision"].as_i64().unwrap() >= 30);
    let checks = v["cross_checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["agrees"] == true));
}

#[test]
fn text_report() {
    let out = linv(&["compute", &fixture("adjcm"), "--refinement", "theta"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("theta"));
    assert!(text.contains("certified"));
}

#[test]
fn fixture_dir_lookup() {
    let out = Command::new(env!("CARGO_BIN_EXE_linv"))
        .args(["compute", "cm.json", "--format", "json"])
        .env("LINV_FIXTURE_DIR", fixtures())
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["refinement"], "psi");
}

#[test]
fn sweep_accepts_infinity() {
    let out = linv(&["compute", &fixture("cm"), "--sweep", "s=0,1,-2/3,∞", "--format", "json", "--cross-check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["s"], "∞");
    assert!(rows.iter().all(|r| r["e"] == 1 && r["regular"] == true));
}

#[test]
fn adjoint_sweep_with_t() {
    let out = linv(&["compute", &fixture("adjcm"), "--sweep", "s=0,2,∞", "--t", "3", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out).as_array().unwrap().iter().all(|r| r["e"] == 2));
}

#[test]
fn singular_refinement_exits_two() {
    let bytes = std::fs::read(fixture("cm")).unwrap();
    let prob = load_fixture(&bytes).unwrap();
    let slope = cm_data(&prob).unwrap().slope;
    let line = prob.special.family.as_ref().unwrap().line(&Param::Finite(slope), None);
    let mut j: FixtureJson = serde_json::from_slice(&bytes).unwrap();
    j.refinements.push(RefinementJson {
        name: "slope".into(),
        basis: vec![line.iter().map(element_to_json).collect()],
        motivic: false,
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singular.json");
    std::fs::write(&path, serde_json::to_string(&j).unwrap()).unwrap();
    let path = path.to_str().unwrap();
    assert_eq!(code(&linv(&["validate", path])), 0);
    let out = linv(&["compute", path, "--refinement", "slope", "--format", "json"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["regular"], false);
    assert_eq!(code(&linv(&["compute", path, "--refinement", "psi"])), 0);
}

#[test]
fn precision_shortfall_exits_three() {
    let out = linv(&["compute", &fixture("cm"), "--precision", "1"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--precision 2"));
}

#[test]
fn precision_flag_raises_certified_digits() {
    let low = json(&linv(&["compute", &fixture("cm"), "--precision", "20", "--format", "json"]));
    let high = json(&linv(&["compute", &fixture("cm"), "--precision", "80", "--format", "json"]));
    assert_eq!(low["precision"], 20);
    assert!(high["certified_precision"].as_i64() > low["certified_precision"].as_i64());
}

#[test]
fn gen_is_reproducible() {
    let a = linv(&["gen", "synthetic", "--seed", "11", "--digits", "40"]);
    let b = linv(&["gen", "synthetic", "--seed", "11", "--digits", "40"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = linv(&["gen", "synthetic", "--seed", "12", "--digits", "40"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_matches_checked_in_fixtures() {
    for (kind, name) in [("qi", "qi_p5"), ("qi-teich3", "qi_p5_teich3"), ("cm", "cm"), ("adjcm", "adjcm")] {
        let out = linv(&["gen", kind, "--seed", "1"]);
        let stored: Value = serde_json::from_slice(&std::fs::read(fixture(name)).unwrap()).unwrap();
        assert_eq!(json(&out), stored, "{kind}");
    }
}

#[test]
fn gen_writes_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = linv(&["gen", "synthetic", "--seed", "3", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&linv(&["validate", path.to_str().unwrap()])), 0);
    assert_eq!(code(&linv(&["compute", path.to_str().unwrap()])), 0);
}
