//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use common::{
    basis_change, field_menu, int, load_json, load_named, log_series, random_nonzero, random_stable_refinement,
    random_unit, residue, rng, teichmuller_mod, valuation,
};
use linv_core::engine::{agreement_digits, dual_l_invariant, Engine, Verdict};
use linv_core::fixtures::{load_fixture_with_precision, GaloisProblem, Param, Refinement};
use linv_core::padic::FieldElement;
use linv_core::special::{adjoint_cm_data, adjoint_cm_value, cm_data, cm_line, gross_regulator, LineValue};
use linv_core::synth::{random_fixture, SynthFixture, SynthOptions};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn value_of(prob: &GaloisProblem, r: &Refinement) -> Option<(FieldElement, i64, usize)> {
    let rep = Engine::new(prob).ok()?.l_invariant(r).ok()?.into_report().ok()?;
    Some((rep.value().clone(), rep.certified_precision, rep.e))
}

fn frac(prob: &GaloisProblem, n: i64, d: i64) -> FieldElement {
    FieldElement::from_rational(&prob.working, &BigRational::new(n.into(), d.into()))
}

fn synthetic(seed: u64, count: usize, opts: &SynthOptions) -> Vec<SynthFixture> {
    let mut r = rng(seed);
    (0..count).map(|_| random_fixture(&mut r, opts)).collect()
}

fn route_agreement(fixtures: &[SynthFixture]) -> Outcome {
    let start = Instant::now();
    let mut worst = i64::MAX;
    let mut failures = 0;
    let mut max_e = 0;
    let mut count = 0;
    for sf in fixtures {
        let prob = load_json(&sf.json);
        let engine = Engine::new(&prob).unwrap();
        for r in &prob.refinements {
            count += 1;
            match engine.l_invariant(r) {
                Ok(Verdict::Regular(rep)) => {
                    let digits = agreement_digits(&rep.value_block, &rep.value_schur).min(rep.certified_precision);
                    worst = worst.min(digits);
                    max_e = max_e.max(rep.e);
                    if digits < 30 || prob.d() > 4 || rep.e > 2 {
                        failures += 1;
                    }
                }
                _ => failures += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && count >= 200 && elapsed < Duration::from_secs(10),
        format!("{count} fixtures, max e {max_e}, min agreement {worst} digits, {failures} failures, {elapsed:.2?}"),
    )
}

fn basis_independence(fixtures: &[SynthFixture]) -> Outcome {
    let chosen: Vec<&SynthFixture> = fixtures.iter().filter(|f| f.d_plus > 0 && f.e[0] > 0).take(20).collect();
    let mut worst = i64::MAX;
    let mut failures = 0;
    for (i, sf) in chosen.iter().enumerate() {
        let prob = load_json(&sf.json);
        for k in 0..50 {
            let ((a, ca), (b, cb)) = basis_change(&prob, 1000 * i as u64 + k);
            let digits = agreement_digits(&a, &b);
            worst = worst.min(digits - ca.min(cb));
            if digits < ca.min(cb) {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0 && chosen.len() == 20,
        format!(
            "{} fixtures x 50 changes, {failures} changes off by more than certified precision, min margin {worst}",
            chosen.len()
        ),
    )
}

fn regularity_equivalence() -> Outcome {
    let mut r = rng(31);
    let opts = SynthOptions::default();
    let (mut regular, mut singular, mut disagree, mut total) = (0, 0, 0, 0);
    while total < 200 {
        let sf = random_fixture(&mut r, &opts);
        if sf.d_plus == 0 {
            continue;
        }
        let prob = load_json(&sf.json);
        let engine = Engine::new(&prob).unwrap();
        let Some(refinement) = random_stable_refinement(&mut r, &prob, sf.group) else { continue };
        let g = engine.is_regular(&refinement).unwrap();
        total += 1;
        if g.reg.zero != g.direct_sum.zero {
            disagree += 1;
        }
        if g.reg.zero {
            singular += 1;
        } else {
            regular += 1;
        }
    }
    outcome(
        disagree == 0 && regular > 0 && singular > 0,
        format!("{total} refinements ({regular} regular, {singular} singular), {disagree} disagreements"),
    )
}

fn gross_agreement(fixtures: &[SynthFixture]) -> Outcome {
    let mut probs: Vec<GaloisProblem> =
        fixtures.iter().filter(|f| f.d_plus == 0).map(|f| load_json(&f.json)).collect();
    probs.extend(synthetic(41, 30, &SynthOptions { gross: true, ..SynthOptions::default() }).iter().map(|f| load_json(&f.json)));
    probs.push(load_named("qi_p5", None));
    probs.push(load_named("qi_p5_teich3", None));
    let mut worst = i64::MAX;
    let mut failures = 0;
    let mut count = 0;
    for prob in &probs {
        let (rp, e) = gross_regulator(prob).unwrap();
        let signed = if e % 2 == 1 { -rp.clone() } else { rp.clone() };
        for r in &prob.refinements {
            count += 1;
            let Some((l, cert, le)) = value_of(prob, r) else {
                failures += 1;
                continue;
            };
            let need = cert.min(signed.relative_precision().unwrap_or(i64::MAX));
            let digits = agreement_digits(&l, &signed);
            worst = worst.min(digits - need);
            if digits < need || le != e {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("{count} refinements with d⁺ = 0, {failures} failures, min margin over certified {worst}"),
    )
}

/// `−log(ι(2+i)/ι(2−i))` modulo `5^m`, by series, for `ι(i)` the Teichmüller lift of `teich`.
fn gaussian_oracle(teich: i64, m: u32) -> BigInt {
    let big = BigInt::from(5).pow(m + 2);
    let w = teichmuller_mod(5, teich, m + 2);
    let strip = |x: BigInt| {
        let x = x.mod_floor(&big);
        let v = valuation(&x, 5);
        x / BigInt::from(5).pow(v)
    };
    let lp = log_series(5, &strip(BigInt::from(2) + &w), m);
    let lm = log_series(5, &strip(BigInt::from(2) - &w), m);
    (lm - lp).mod_floor(&BigInt::from(5).pow(m))
}

fn gaussian() -> Outcome {
    let start = Instant::now();
    let prob = load_named("qi_p5", Some(40));
    let rep = Engine::new(&prob)
        .unwrap()
        .l_invariant(prob.refinement("default").unwrap())
        .unwrap()
        .into_report()
        .unwrap();
    let elapsed = start.elapsed();
    let modulus = BigInt::from(5).pow(40);
    let engine = residue(rep.value(), 40);
    let digits = |oracle: &BigInt| {
        let diff = (&engine - oracle).mod_floor(&modulus);
        if diff == BigInt::from(0) {
            39
        } else {
            valuation(&diff, 5) as i64 - 1
        }
    };
    let teich3 = digits(&gaussian_oracle(3, 40));
    let teich2 = digits(&(-gaussian_oracle(2, 40)).mod_floor(&modulus));
    let opposite = digits(&gaussian_oracle(2, 40));
    outcome(
        rep.e == 1 && teich3 >= 30 && teich2 >= 30 && elapsed < Duration::from_secs(1),
        format!(
            "e = {}, {teich3} digits vs oracle with ι(i) = teich(3), {teich2} digits vs the negated oracle with ι(i) = teich(2) \
             ({opposite} digits unnegated), {elapsed:.2?}",
            rep.e
        ),
    )
}

fn cm_sweep() -> Outcome {
    let prob = load_named("cm", Some(40));
    let data = cm_data(&prob).unwrap();
    let family = prob.special.family.clone().unwrap();
    let engine = Engine::new(&prob).unwrap();
    let mut params: Vec<Param> = [(0, 1), (1, 1), (-1, 1), (2, 1), (3, 1), (-5, 1), (7, 1), (49, 1), (1, 2), (2, 3), (-3, 4),
        (5, 7), (1, 49), (11, 13), (100, 1), (-17, 5), (6, 1), (8, 9), (13, 1)]
        .iter()
        .map(|&(n, d)| Param::Finite(frac(&prob, n, d)))
        .collect();
    params.push(Param::Infinity);
    let mut worst = i64::MAX;
    let mut failures = 0;
    for s in &params {
        let r = family.refinement(s, None);
        match (engine.l_invariant(&r).unwrap(), cm_line(&data, s).unwrap()) {
            (Verdict::Regular(rep), LineValue::Value(c)) => {
                let digits = agreement_digits(rep.value(), &c);
                worst = worst.min(digits);
                if digits < 30 {
                    failures += 1;
                }
            }
            _ => failures += 1,
        }
    }
    let at = |s: &FieldElement| {
        let p = Param::Finite(s.clone());
        let engine_singular = matches!(engine.l_invariant(&family.refinement(&p, None)).unwrap(), Verdict::Singular { .. });
        let line_singular = matches!(cm_line(&data, &p).unwrap(), LineValue::Singular);
        (engine_singular, line_singular)
    };
    let exact = at(&data.slope);
    let nudged = at(&(&data.slope + &FieldElement::from_int(&prob.working, 7).pow(12)));
    outcome(
        failures == 0 && exact == (true, true) && nudged == (false, false),
        format!(
            "{} values of s, min agreement {worst} digits; singular at S_ψ: engine {}, line {}; at S_ψ + 7^12: engine {}, line {}",
            params.len(),
            exact.0,
            exact.1,
            nudged.0,
            nudged.1
        ),
    )
}

fn adjoint_cm() -> Outcome {
    let prob = load_named("adjcm", Some(40));
    let data = adjoint_cm_data(&prob).unwrap();
    let family = prob.special.family.clone().unwrap();
    let engine = Engine::new(&prob).unwrap();
    let s = Param::Finite(frac(&prob, 2, 1));
    let mut values = Vec::new();
    let mut dual_worst = i64::MAX;
    let mut orders_ok = true;
    for t in [0, 1, -1, 2, 3, -7, 10, 1, 49, -100] {
        let t = if t == 1 && !values.is_empty() { frac(&prob, 1, 3) } else { int(&prob.working, t) };
        let rep = engine.l_invariant(&family.refinement(&s, Some(&t))).unwrap().into_report().unwrap();
        orders_ok &= rep.e == 2;
        let v = adjoint_cm_value(&data, &s, &t).unwrap().unwrap();
        dual_worst = dual_worst.min(agreement_digits(rep.value(), &v.dual));
        values.push(rep.value().clone());
    }
    let t_worst = values.iter().map(|v| agreement_digits(&values[0], v)).min().unwrap();
    let zero = int(&prob.working, 0);
    let at_zero = engine.l_invariant(prob.refinement("theta").unwrap()).unwrap().into_report().unwrap();
    let at_inf = engine.l_invariant(prob.refinement("theta_bar").unwrap()).unwrap().into_report().unwrap();
    let d0 = agreement_digits(at_zero.value(), &(&data.two_l_p * &data.phi.l_psi));
    let di = agreement_digits(at_inf.value(), &(&data.two_l_p * &data.phi.l_psi_bar));
    let v0 = adjoint_cm_value(&data, &Param::Finite(zero.clone()), &zero).unwrap().unwrap();
    let sign_ok = {
        let direct = dual_l_invariant(&v0.jf, &v0.jc).unwrap();
        let det = v0.jf.mul(&v0.jc.inverse().unwrap()).unwrap().determinant().unwrap();
        agreement_digits(&direct, &det) >= 30
    };
    outcome(
        t_worst >= 30 && d0 >= 30 && di >= 30 && dual_worst >= 30 && orders_ok && sign_ok,
        format!(
            "10 values of t agree to {t_worst} digits; s = 0: {d0} digits, s = ∞: {di} digits; \
             dual route with e = 2 and sign +1 agrees to {dual_worst} digits"
        ),
    )
}

fn log_suite() -> Outcome {
    let fields = field_menu(20);
    let mut r = rng(77);
    let mut fails = [0usize; 4];
    for i in 0..1000 {
        let field = &fields[i % fields.len()];
        let x = random_nonzero(&mut r, field);
        let y = random_nonzero(&mut r, field);
        let lhs = (&x * &y).iwasawa_log().unwrap();
        let rhs = &x.iwasawa_log().unwrap() + &y.iwasawa_log().unwrap();
        if !lhs.agrees_with(&rhs) {
            fails[0] += 1;
        }
        let k: i64 = r.gen_range(-5..=5);
        let u = random_unit(&mut r, field);
        let p_log = FieldElement::from_int(field, field.p() as i64).iwasawa_log().unwrap();
        if !p_log.is_zero() || !u.mul_p_power(k).iwasawa_log().unwrap().agrees_with(&u.iwasawa_log().unwrap()) {
            fails[1] += 1;
        }
        let z = random_unit(&mut r, field).teichmuller().unwrap();
        if !z.iwasawa_log().unwrap().is_zero() || !(&z * &u).iwasawa_log().unwrap().agrees_with(&u.iwasawa_log().unwrap()) {
            fails[2] += 1;
        }
        let tr = x.iwasawa_log().unwrap().trace_to_base().unwrap();
        let nm = x.norm_to_base().unwrap().iwasawa_log().unwrap();
        if !tr.agrees_with(&nm) {
            fails[3] += 1;
        }
    }
    outcome(
        fails.iter().all(|&f| f == 0),
        format!(
            "1000 cases each over {} fields; failures: homomorphism {}, log p = 0 {}, Teichmüller {}, trace/norm {}",
            fields.len(),
            fails[0],
            fails[1],
            fails[2],
            fails[3]
        ),
    )
}

fn stability() -> Outcome {
    let mut probs: Vec<(String, Vec<u8>)> = ["qi_p5", "qi_p5_teich3", "cm", "adjcm"]
        .iter()
        .map(|n| (n.to_string(), common::fixture_bytes(n)))
        .collect();
    let opts = SynthOptions {
        digits: 90,
        refinements: 2,
        ..SynthOptions::default()
    };
    for (i, sf) in synthetic(53, 25, &opts).iter().enumerate() {
        probs.push((format!("synthetic {i}"), serde_json::to_vec(&sf.json).unwrap()));
    }
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut record = |label: String, low: &FieldElement, cert: i64, high: &FieldElement| {
        checked += 1;
        if agreement_digits(low, high) < cert {
            failures.push(label);
        }
    };
    for (name, bytes) in &probs {
        let low = load_fixture_with_precision(bytes, Some(40)).unwrap();
        let high = load_fixture_with_precision(bytes, Some(80)).unwrap();
        for r in &low.refinements {
            let (a, ca, _) = value_of(&low, r).unwrap();
            let (b, _, _) = value_of(&high, high.refinement(&r.name).unwrap()).unwrap();
            record(format!("{name}/{}", r.name), &a, ca, &b);
        }
        if low.d_plus() == 0 {
            let (a, _) = gross_regulator(&low).unwrap();
            let (b, _) = gross_regulator(&high).unwrap();
            let cert = a.relative_precision().unwrap_or(0);
            record(format!("{name}/gross"), &a, cert, &b);
        }
    }
    let low = load_named("cm", Some(40));
    let high = load_named("cm", Some(80));
    let (dl, dh) = (cm_data(&low).unwrap(), cm_data(&high).unwrap());
    for (n, d) in [(0, 1), (1, 1), (2, 3), (-5, 1)] {
        let (sl, sh) = (Param::Finite(frac(&low, n, d)), Param::Finite(frac(&high, n, d)));
        let (LineValue::Value(a), LineValue::Value(b)) = (cm_line(&dl, &sl).unwrap(), cm_line(&dh, &sh).unwrap()) else {
            continue;
        };
        let fam = low.special.family.clone().unwrap();
        let (_, cert, _) = value_of(&low, &fam.refinement(&sl, None)).unwrap();
        let cert = cert.min(a.relative_precision().unwrap_or(0));
        record(format!("cm line s={n}/{d}"), &a, cert, &b);
    }
    let low = load_named("adjcm", Some(40));
    let high = load_named("adjcm", Some(80));
    let (al, ah) = (adjoint_cm_data(&low).unwrap(), adjoint_cm_data(&high).unwrap());
    for t in [0, 3] {
        let (tl, th) = (int(&low.working, t), int(&high.working, t));
        let s = |p: &GaloisProblem| Param::Finite(frac(p, 2, 1));
        let a = adjoint_cm_value(&al, &s(&low), &tl).unwrap().unwrap();
        let b = adjoint_cm_value(&ah, &s(&high), &th).unwrap().unwrap();
        let cert = a.closed.relative_precision().unwrap_or(0);
        record(format!("adjoint t={t}"), &a.closed, cert, &b.closed);
    }
    outcome(
        failures.is_empty(),
        format!("{checked} values at N = 40 and N = 80, {} disagreements {:?}", failures.len(), failures),
    )
}

fn main() {
    let opts = SynthOptions::default();
    let started = Instant::now();
    let fixtures = synthetic(2024, 200, &opts);
    let generated = started.elapsed();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("route agreement", Box::new(|| route_agreement(&fixtures))),
        ("basis independence", Box::new(|| basis_independence(&fixtures))),
        ("regularity criteria", Box::new(regularity_equivalence)),
        ("Gross agreement", Box::new(|| gross_agreement(&fixtures))),
        ("Q(i), p = 5", Box::new(gaussian)),
        ("CM sweep", Box::new(cm_sweep)),
        ("adjoint CM", Box::new(adjoint_cm)),
        ("Iwasawa log", Box::new(log_suite)),
        ("precision stability", Box::new(stability)),
    ];
    println!("acceptance ({} synthetic fixtures generated in {generated:.2?})", fixtures.len());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!("{} {}. {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
