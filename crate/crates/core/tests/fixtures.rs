mod common;

use common::{fixture_bytes, int, load_named, rng};
use linv_core::fixtures::{
    load_fixture, validate_arithmetic, ElementJson, FixtureError, FixtureJson, Param,
};
use linv_core::linalg::PMatrix;
use linv_core::padic::FieldElement;
use linv_core::synth::{random_fixture, SynthOptions};
use proptest::prelude::*;

fn json(name: &str) -> FixtureJson {
    serde_json::from_slice(&fixture_bytes(name)).unwrap()
}

fn issues_of(j: &FixtureJson) -> Vec<String> {
    match load_fixture(serde_json::to_string(j).unwrap().as_bytes()) {
        Err(FixtureError::Invalid(list)) => list.iter().map(ToString::to_string).collect(),
        Err(e) => panic!("unexpected {e}"),
        Ok(_) => Vec::new(),
    }
}

#[test]
fn gaussian_fixture_shape() {
    let prob = load_named("qi_p5", None);
    assert_eq!((prob.p, prob.d(), prob.d_plus(), prob.f()), (5, 1, 0, 1));
    assert_eq!(prob.units.rank_units, 0);
    assert_eq!(prob.units.rank_total, 2);
    let report = validate_arithmetic(&prob);
    assert!(report.passed());
    assert!(report.to_string().ends_with("all checks pass"));
}

#[test]
fn all_checked_in_fixtures_validate() {
    for name in ["qi_p5", "qi_p5_teich3", "cm", "adjcm"] {
        let prob = load_named(name, None);
        assert!(validate_arithmetic(&prob).passed(), "{name}");
    }
}

#[test]
fn round_trip() {
    for name in ["qi_p5", "cm", "adjcm"] {
        let prob = load_named(name, None);
        let again = load_fixture(prob.to_json_string().as_bytes()).unwrap();
        assert_eq!(prob.to_json(), again.to_json());
        for (a, b) in prob.units.logs.iter().zip(&again.units.logs) {
            assert!(a.agrees_with(b));
        }
    }
}

#[test]
fn schema_errors() {
    let err = load_fixture(b"{\"p\": 5}").unwrap_err();
    assert!(matches!(err, FixtureError::Schema(_)));
    assert!(matches!(load_fixture(b"not json"), Err(FixtureError::Schema(_))));
}

#[test]
fn wrong_matrix_shape() {
    let mut j = json("cm");
    j.w.matrices[1].pop();
    let issues = issues_of(&j);
    assert!(issues.iter().any(|s| s.starts_with("W.matrices[1]: not a 2x2 matrix")), "{issues:?}");
}

#[test]
fn broken_group_table() {
    let mut j = json("qi_p5");
    j.group.mult[1][1] = 1;
    assert!(issues_of(&j).iter().any(|s| s.starts_with("group")));
}

#[test]
fn non_homomorphism() {
    let mut j = json("qi_p5");
    j.w.matrices[1] = vec![vec![ElementJson::Int(2)]];
    assert!(!issues_of(&j).is_empty());
}

#[test]
fn refinement_dimension_mismatch() {
    let mut j = json("cm");
    let extra = j.refinements[1].basis[0].clone();
    j.refinements[0].basis.push(extra);
    let issues = issues_of(&j);
    assert!(issues.iter().any(|s| s.contains("refinement dim ≠ d⁺ (2 ≠ 1)")), "{issues:?}");
}

#[test]
fn refinement_not_frobenius_stable() {
    let mut rng = rng(5);
    loop {
        let sf = random_fixture(&mut rng, &SynthOptions::default());
        let prob = load_fixture(serde_json::to_string(&sf.json).unwrap().as_bytes()).unwrap();
        if prob.d_plus() != 1 || prob.d() < 2 {
            continue;
        }
        let v: Vec<_> = (0..prob.d()).map(|i| int(&prob.working, i as i64 + 1)).collect();
        let fv = prob.w.matrix(prob.group.frobenius()).mul_vec(&v);
        if PMatrix::from_rows(&prob.working, &[v.clone(), fv]).rank().unwrap() < 2 {
            continue;
        }
        let mut j = sf.json;
        j.refinements[0].basis = vec![(0..prob.d()).map(|i| ElementJson::Int(i as i64 + 1)).collect()];
        let issues = issues_of(&j);
        assert!(issues.iter().any(|s| s.contains("not G_p-stable")), "{issues:?}");
        break;
    }
}

#[test]
fn ord_on_global_unit() {
    let mut j = json("cm");
    j.units.ord_p[0] = 1;
    let issues = issues_of(&j);
    assert!(issues.iter().any(|s| s.starts_with("units.ord_p[0]")), "{issues:?}");
}

#[test]
fn action_composition() {
    let mut j = json("cm");
    j.units.action.swap(1, 2);
    let issues = issues_of(&j);
    assert!(issues.iter().any(|s| s.contains("composition fails")), "{issues:?}");
}

#[test]
fn zero_embedding() {
    let mut j = json("qi_p5");
    j.units.embeddings.as_mut().unwrap()[0] = ElementJson::Int(0);
    assert!(issues_of(&j).iter().any(|s| s.starts_with("units.embeddings[0]")));
}

#[test]
fn logs_only_warns() {
    let opts = SynthOptions {
        logs_only: true,
        ..SynthOptions::default()
    };
    let sf = random_fixture(&mut rng(9), &opts);
    let prob = load_fixture(serde_json::to_string(&sf.json).unwrap().as_bytes()).unwrap();
    let report = validate_arithmetic(&prob);
    assert!(report.passed());
    assert!(report.warnings.iter().any(|w| w.contains("embedding consistency unverifiable")));
}

#[test]
fn relabelled_p_units_still_validate() {
    let mut j = json("qi_p5");
    j.units.embeddings.as_mut().unwrap().swap(0, 1);
    j.units.ord_p.swap(0, 1);
    let prob = load_fixture(serde_json::to_string(&j).unwrap().as_bytes()).unwrap();
    assert!(validate_arithmetic(&prob).passed());
}

#[test]
fn frobenius_incompatible_logs_fail() {
    let mut rng = rng(13);
    loop {
        let sf = random_fixture(&mut rng, &SynthOptions::default());
        let mut prob = load_fixture(serde_json::to_string(&sf.json).unwrap().as_bytes()).unwrap();
        if prob.group.frobenius() == 0 || prob.units.rank_units == 0 {
            continue;
        }
        let bump = FieldElement::from_int(&prob.field_e, prob.p as i64);
        prob.units.logs_e[0] = &prob.units.logs_e[0] + &bump;
        prob.units.embeddings = None;
        let report = validate_arithmetic(&prob);
        let check = report.checks.iter().find(|c| c.name == "Frobenius compatibility").unwrap();
        assert!(!check.passed, "{report}");
        break;
    }
}

#[test]
fn precision_override() {
    let low = load_named("cm", Some(20));
    let high = load_named("cm", Some(80));
    assert_eq!(low.precision, 20);
    assert_eq!(high.precision, 80);
    let reload = low.with_precision(80).unwrap();
    for (a, b) in reload.units.logs.iter().zip(&high.units.logs) {
        assert!(a.agrees_with(b));
        assert!(a.precision() >= Some(70));
    }
}

#[test]
fn param_display() {
    let prob = load_named("cm", None);
    assert_eq!(Param::Infinity.to_string(), "∞");
    assert!(!Param::Finite(int(&prob.working, 3)).to_string().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn family_locate_inverts_line(s in -50i64..50, t in -50i64..50, inf in proptest::bool::ANY) {
        let prob = load_named("adjcm", None);
        let family = prob.special.family.clone().unwrap();
        let s = if inf { Param::Infinity } else { Param::Finite(int(&prob.working, s)) };
        let t = int(&prob.working, t);
        let v = family.line(&s, Some(&t));
        let scaled: Vec<_> = v.iter().map(|x| x * &int(&prob.working, 3)).collect();
        let (s2, t2) = family.locate(&scaled).unwrap();
        match (&s, &s2) {
            (Param::Infinity, Param::Infinity) => {}
            (Param::Finite(a), Param::Finite(b)) => prop_assert!(a.agrees_with(b)),
            _ => prop_assert!(false, "parameter kind changed"),
        }
        prop_assert!(t2.unwrap().agrees_with(&t));
    }
}
