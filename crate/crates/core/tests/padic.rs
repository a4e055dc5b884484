mod common;

use common::{field_menu, int, random_integer, random_nonzero, random_unit, rng};
use linv_core::padic::{make_field, FieldElement, LocalField, PadicError};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    g.x.mod_floor(m)
}

/// The value `p^shift · c0` of a base-field element reduced mod `p^n`.
fn residue(x: &FieldElement, n: u32) -> BigInt {
    let p = BigInt::from(x.field().p());
    let m = num_traits::pow(p.clone(), n as usize);
    assert!(x.shift() >= 0);
    (&x.coeffs()[0] * num_traits::pow(p, x.shift() as usize)).mod_floor(&m)
}

#[test]
fn make_field_examples() {
    let q5 = make_field(5, 1, None, 40).unwrap();
    assert_eq!((q5.degree(), q5.ramification_index()), (1, 1));
    let q25 = make_field(5, 2, None, 40).unwrap();
    assert_eq!((q25.degree(), q25.ramification_index(), q25.residue_degree()), (2, 1, 2));
    let eis = vec![vec![BigInt::from(-3)], vec![BigInt::zero()], vec![BigInt::one()]];
    let k = make_field(3, 1, Some(eis), 20).unwrap();
    assert_eq!((k.degree(), k.ramification_index()), (2, 2));
}

#[test]
fn make_field_rejects_bad_input() {
    assert_eq!(make_field(6, 1, None, 10).unwrap_err(), PadicError::NotPrime(6));
    let not_eis = vec![vec![BigInt::from(9)], vec![BigInt::zero()], vec![BigInt::one()]];
    assert!(matches!(
        make_field(3, 1, Some(not_eis), 10),
        Err(PadicError::NotEisenstein(_))
    ));
    let bad_middle = vec![vec![BigInt::from(3)], vec![BigInt::one()], vec![BigInt::one()]];
    assert!(matches!(
        make_field(3, 1, Some(bad_middle), 10),
        Err(PadicError::NotEisenstein(_))
    ));
}

#[test]
fn valuation_examples() {
    let q5 = LocalField::qp(5, 40).unwrap();
    assert_eq!(int(&q5, 5).valuation().unwrap(), Ratio::from_integer(1));
    assert_eq!(int(&q5, 7).valuation().unwrap(), Ratio::from_integer(0));
    assert_eq!(int(&q5, 250).valuation().unwrap(), Ratio::from_integer(3));
    let k = LocalField::ramified(3, 1, &[-3, 0, 1], 20).unwrap();
    let pi = FieldElement::uniformizer(&k);
    assert_eq!(pi.valuation().unwrap(), Ratio::new(1, 2));
    assert_eq!(pi.pow(2).valuation().unwrap(), Ratio::from_integer(1));
    let zeroish = FieldElement::zero_to(&q5, 10);
    assert_eq!(zeroish.valuation().unwrap_err(), PadicError::PrecisionExhausted);
}

#[test]
fn teichmuller_of_two_mod_625() {
    let q5 = LocalField::qp(5, 4).unwrap();
    let w = int(&q5, 2).teichmuller().unwrap();
    let (digits, shift, prec) = w.to_digits();
    assert_eq!(digits, vec![vec![2, 1, 2, 1]]);
    assert_eq!((shift, prec), (0, Some(4)));
    assert_eq!(w.to_string(), "2 + 1*5 + 2*5^2 + 1*5^3 + O(5^4)");
}

#[test]
fn teichmuller_examples() {
    let q5 = LocalField::qp(5, 30).unwrap();
    let t = int(&q5, 1 + 5 * 17).teichmuller().unwrap();
    assert!(t.agrees_with(&int(&q5, 1)));
    assert!(int(&q5, -1).teichmuller().unwrap().agrees_with(&int(&q5, -1)));
    assert_eq!(int(&q5, 5).teichmuller().unwrap_err(), PadicError::NotUnit);
}

#[test]
fn log_of_six_matches_direct_series() {
    let q5 = LocalField::qp(5, 10).unwrap();
    let log = int(&q5, 6).iwasawa_log().unwrap();
    assert!(log.precision().unwrap() >= 10);
    let p = BigInt::from(5);
    let m = num_traits::pow(p.clone(), 10);
    let mut oracle = BigInt::zero();
    for n in 1..40u32 {
        let mut a = 0u32;
        let mut rest = n;
        while rest % 5 == 0 {
            rest /= 5;
            a += 1;
        }
        let term = num_traits::pow(p.clone(), (n - a) as usize)
            * mod_inverse(&BigInt::from(rest), &m);
        if n % 2 == 1 {
            oracle += term;
        } else {
            oracle -= term;
        }
    }
    assert_eq!(residue(&log, 10), oracle.mod_floor(&m));
}

#[test]
fn log_kills_p_and_roots_of_unity() {
    for field in field_menu(20) {
        let p = int(&field, field.p() as i64);
        assert!(p.iwasawa_log().unwrap().is_zero());
        let mut r = rng(3);
        let z = random_unit(&mut r, &field).teichmuller().unwrap();
        assert!(z.iwasawa_log().unwrap().is_zero(), "{field:?}");
    }
}

#[test]
fn trace_of_base_element() {
    for field in field_menu(20) {
        let c = int(&field, 7);
        let t = c.trace_to_base().unwrap();
        let expected = FieldElement::from_int(&field.base_field(), 7 * field.degree() as i64);
        assert!(t.agrees_with(&expected), "{field:?}");
    }
}

#[test]
fn trace_is_frobenius_invariant() {
    let field = LocalField::unramified(5, 2, 30).unwrap();
    let mut r = rng(11);
    let x = random_integer(&mut r, &field);
    let y = &x + &x.frobenius().unwrap();
    let lhs = y.trace_to_base().unwrap();
    let tx = x.trace_to_base().unwrap();
    assert!(lhs.agrees_with(&(&tx + &tx)));
    let sigma2 = x.frobenius().unwrap().frobenius().unwrap();
    assert!(sigma2.agrees_with(&x));
}

#[test]
fn frobenius_is_a_ring_map() {
    for field in field_menu(25) {
        let mut r = rng(17);
        let x = random_integer(&mut r, &field);
        let y = random_integer(&mut r, &field);
        let s = |z: &FieldElement| z.frobenius().unwrap();
        assert!(s(&(&x * &y)).agrees_with(&(&s(&x) * &s(&y))));
        assert!(s(&(&x + &y)).agrees_with(&(&s(&x) + &s(&y))));
        let a = FieldElement::alpha(&field);
        let q = field.residue_size();
        assert!((&s(&a) - &a.pow(field.p())).val_pi().unwrap_or(i64::MAX) >= field.ramification_index() as i64);
        let _ = q;
    }
}

#[test]
fn trace_of_log_is_log_of_norm() {
    for field in field_menu(25) {
        let mut r = rng(23);
        for _ in 0..5 {
            let u = random_nonzero(&mut r, &field);
            let lhs = u.iwasawa_log().unwrap().trace_to_base().unwrap();
            let rhs = u.norm_to_base().unwrap().iwasawa_log().unwrap();
            assert!(lhs.agrees_with(&rhs), "{field:?}: {lhs} vs {rhs}");
            assert!(lhs.precision().unwrap() >= 15);
        }
    }
}

#[test]
fn inverse_and_precision() {
    let q5 = LocalField::qp(5, 20).unwrap();
    let x = int(&q5, 3);
    let y = x.inverse().unwrap();
    assert!((&x * &y).agrees_with(&int(&q5, 1)));
    assert_eq!(y.precision(), Some(20));
    let z = int(&q5, 50).inverse().unwrap();
    assert_eq!(z.valuation().unwrap(), Ratio::from_integer(-2));
    assert_eq!(int(&q5, 0).inverse().unwrap_err(), PadicError::DivisionByZero);
    let w = FieldElement::from_digits(&q5, &[vec![0, 2]], 0, Some(6)).unwrap();
    let wi = w.inverse().unwrap();
    assert_eq!(wi.precision(), Some(6 - 2));
}

#[test]
fn exact_inputs_stay_exact() {
    let q5 = LocalField::qp(5, 20).unwrap();
    let x = &int(&q5, 12) * &int(&q5, -7);
    assert!(x.is_exact());
    assert!(x.agrees_with(&int(&q5, -84)));
    assert_eq!(x.to_string(), "-84");
}

#[test]
fn digits_round_trip() {
    for field in field_menu(15) {
        let mut r = rng(29);
        let x = random_nonzero(&mut r, &field);
        let (d, s, p) = x.to_digits();
        let y = FieldElement::from_digits(&field, &d, s, p).unwrap();
        assert_eq!(x.coeffs(), y.coeffs());
        assert_eq!((x.shift(), x.precision()), (y.shift(), y.precision()));
    }
}

#[test]
fn embedding_of_unramified_fields() {
    let small = LocalField::unramified(5, 2, 20).unwrap();
    let big = LocalField::unramified(5, 4, 20).unwrap();
    let map = linv_core::padic::FieldEmbedding::new(&small, &big).unwrap();
    let mut r = rng(31);
    let x = random_integer(&mut r, &small);
    let y = random_integer(&mut r, &small);
    let m = |z: &FieldElement| map.apply(z).unwrap();
    assert!(m(&(&x * &y)).agrees_with(&(&m(&x) * &m(&y))));
    let lx = m(&x.iwasawa_log().unwrap());
    assert!(lx.agrees_with(&m(&x).iwasawa_log().unwrap()));
    assert!(m(&x.frobenius().unwrap()).agrees_with(&m(&x).frobenius().unwrap()));
}

#[test]
fn exp_inverts_log() {
    for field in field_menu(20) {
        let mut r = rng(37);
        let e = field.ramification_index() as i64;
        let pk = FieldElement::uniformizer(&field).pow((e + 2) as u64);
        let x = &random_integer(&mut r, &field) * &pk;
        let back = x.exp().unwrap().iwasawa_log().unwrap();
        assert!(back.agrees_with(&x), "{field:?}");
    }
}

#[test]
fn higher_precision_extends_digits() {
    let lo = LocalField::unramified(7, 2, 20).unwrap();
    let hi = lo.with_precision(40).unwrap();
    let a = |f: &std::sync::Arc<LocalField>| {
        let x = &FieldElement::alpha(f) + &int(f, 3);
        (x.iwasawa_log().unwrap(), x.teichmuller().unwrap())
    };
    let (l1, t1) = a(&lo);
    let (l2, t2) = a(&hi);
    assert!(l2.precision().unwrap() > l1.precision().unwrap());
    let low = |x: &FieldElement, p: i64| x.truncated(p).coeffs().to_vec();
    assert_eq!(low(&l2, l1.precision().unwrap()), l1.coeffs().to_vec());
    assert_eq!(low(&t2, t1.precision().unwrap()), t1.coeffs().to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_is_a_homomorphism(seed in any::<u64>(), which in 0usize..9) {
        let field = &field_menu(20)[which];
        let mut r = rng(seed);
        let x = random_nonzero(&mut r, field);
        let y = random_nonzero(&mut r, field);
        let lhs = (&x * &y).iwasawa_log().unwrap();
        let rhs = &x.iwasawa_log().unwrap() + &y.iwasawa_log().unwrap();
        prop_assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn valuation_is_additive(seed in any::<u64>(), which in 0usize..9) {
        let field = &field_menu(20)[which];
        let mut r = rng(seed);
        let x = random_nonzero(&mut r, field);
        let y = random_nonzero(&mut r, field);
        prop_assert_eq!((&x * &y).valuation().unwrap(), x.valuation().unwrap() + y.valuation().unwrap());
        let s = &x + &y;
        let (vx, vy) = (x.valuation().unwrap(), y.valuation().unwrap());
        if let Ok(vs) = s.valuation() {
            prop_assert!(vs >= vx.min(vy));
            if vx != vy {
                prop_assert_eq!(vs, vx.min(vy));
            }
        }
    }

    #[test]
    fn teichmuller_is_a_root_of_unity(seed in any::<u64>(), which in 0usize..9) {
        let field = &field_menu(20)[which];
        let mut r = rng(seed);
        let u = random_unit(&mut r, field);
        let t = u.teichmuller().unwrap();
        let q1 = field.residue_size() - 1;
        prop_assert!(t.pow_big(&q1).agrees_with(&FieldElement::one(field)));
        prop_assert!((&t - &u).val_pi().is_none_or(|v| v >= 1));
    }

    #[test]
    fn branch_normalization(seed in any::<u64>(), which in 0usize..9, k in -4i64..4) {
        let field = &field_menu(20)[which];
        let mut r = rng(seed);
        let u = random_unit(&mut r, field);
        let z = random_unit(&mut r, field).teichmuller().unwrap();
        let x = (&z * &u).mul_p_power(k);
        prop_assert!(x.iwasawa_log().unwrap().agrees_with(&u.iwasawa_log().unwrap()));
    }

    #[test]
    fn inverse_is_inverse(seed in any::<u64>(), which in 0usize..9) {
        let field = &field_menu(20)[which];
        let mut r = rng(seed);
        let x = random_nonzero(&mut r, field);
        let y = x.inverse().unwrap();
        prop_assert!((&x * &y).agrees_with(&FieldElement::one(field)));
        prop_assert!((&x * &y).precision().unwrap() >= field.default_abs_precision() - 12);
    }
}

#[test]
fn square_roots() {
    let f = LocalField::qp(7, 30).unwrap();
    let two = FieldElement::from_int(&f, 2);
    let r = two.sqrt().unwrap().unwrap();
    assert!((&r * &r).agrees_with(&two));
    assert!(FieldElement::from_int(&f, 3).sqrt().unwrap().is_none());
    assert!(FieldElement::from_int(&f, 7).sqrt().unwrap().is_none());
    let x = FieldElement::from_int(&f, 98);
    let r = x.sqrt().unwrap().unwrap();
    assert_eq!(r.val_pi(), Some(1));
    assert!((&r * &r).agrees_with(&x));
    let g = LocalField::unramified(5, 2, 20).unwrap();
    let y = FieldElement::from_int(&g, 2);
    let r = y.sqrt().unwrap().unwrap();
    assert!((&r * &r).agrees_with(&y));
    let h = LocalField::ramified(5, 2, &[5, 0, 1], 20).unwrap();
    let pi = FieldElement::uniformizer(&h);
    let z = &pi * &pi;
    let r = z.sqrt().unwrap().unwrap();
    assert!((&r * &r).agrees_with(&z));
    assert!(pi.sqrt().unwrap().is_none());
}

#[test]
fn square_root_keeps_precision() {
    let mut rng = common::rng(11);
    for field in common::field_menu(30) {
        if field.p() == 2 {
            continue;
        }
        for _ in 0..20 {
            let x = common::random_unit(&mut rng, &field);
            let sq = &x * &x;
            let r = sq.sqrt().unwrap().unwrap();
            assert!(r.relative_precision().unwrap() >= sq.relative_precision().unwrap() - 1);
            assert!((&r - &x).is_zero() || (&r + &x).is_zero());
        }
    }
}
