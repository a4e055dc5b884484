#![allow(dead_code)]


use std::sync::Arc;

use linv_core::engine::{BasisChoice, Engine};
use linv_core::fixtures::{load_fixture, load_fixture_with_precision, FixtureJson, GaloisProblem, Refinement};
use linv_core::linalg::{rational_rank, PMatrix, Vector};
use linv_core::synth::{frobenius_eigenspaces, group_named};
use num_rational::BigRational;
use linv_core::padic::{FieldElement, LocalField};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random element of the ring of integers known to the field's default precision.
pub fn random_integer(rng: &mut impl Rng, field: &Arc<LocalField>) -> FieldElement {
    let p = field.p();
    let prec = field.default_abs_precision();
    let digits = field.precision() as usize + 2;
    let coords: Vec<Vec<u64>> = (0..field.degree())
        .map(|_| (0..digits).map(|_| rng.gen_range(0..p)).collect())
        .collect();
    FieldElement::from_digits(field, &coords, 0, Some(prec)).unwrap()
}

pub fn random_unit(rng: &mut impl Rng, field: &Arc<LocalField>) -> FieldElement {
    loop {
        let x = random_integer(rng, field);
        if x.is_unit() {
            return x;
        }
    }
}

/// A random nonzero element `π^k · u` with `|k| ≤ 3`.
pub fn random_nonzero(rng: &mut impl Rng, field: &Arc<LocalField>) -> FieldElement {
    let u = random_unit(rng, field);
    let k: i64 = rng.gen_range(-3..=3);
    let pi = FieldElement::uniformizer(field);
    if k >= 0 {
        &u * &pi.pow(k as u64)
    } else {
        u.div(&pi.pow((-k) as u64)).unwrap()
    }
}

pub fn int(field: &Arc<LocalField>, n: i64) -> FieldElement {
    FieldElement::from_int(field, BigInt::from(n))
}

/// A small menu of fields: unramified of degree 1..3 and ramified quadratics.
pub fn field_menu(precision: i64) -> Vec<Arc<LocalField>> {
    vec![
        LocalField::qp(5, precision).unwrap(),
        LocalField::qp(2, precision).unwrap(),
        LocalField::qp(7, precision).unwrap(),
        LocalField::unramified(3, 2, precision).unwrap(),
        LocalField::unramified(5, 2, precision).unwrap(),
        LocalField::unramified(2, 3, precision).unwrap(),
        LocalField::ramified(3, 1, &[-3, 0, 1], precision).unwrap(),
        LocalField::ramified(5, 2, &[5, 0, 1], precision).unwrap(),
        LocalField::ramified(2, 1, &[2, 2, 1], precision).unwrap(),
    ]
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"));
    std::fs::read(path).unwrap()
}

pub fn load_named(name: &str, precision: Option<i64>) -> GaloisProblem {
    load_fixture_with_precision(&fixture_bytes(name), precision).unwrap()
}

pub fn load_json(json: &FixtureJson) -> GaloisProblem {
    load_fixture(serde_json::to_string(json).unwrap().as_bytes()).unwrap()
}

/// Random `n × n` integer matrix of determinant `±1`.
pub fn unimodular(rng: &mut impl Rng, n: usize) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 * n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i == j {
            m[i].iter_mut().for_each(|x| *x = -*x);
            continue;
        }
        let c = rng.gen_range(-2..=2);
        for k in 0..n {
            m[i][k] += c * m[j][k];
        }
    }
    m
}

pub fn combine_vectors(m: &[Vec<i64>], vs: &[Vector]) -> Vec<Vector> {
    m.iter()
        .map(|row| {
            let field = vs[0][0].field().clone();
            (0..vs[0].len())
                .map(|i| {
                    row.iter()
                        .zip(vs)
                        .fold(FieldElement::zero(&field), |acc, (&c, v)| &acc + &(&int(&field, c) * &v[i]))
                })
                .collect()
        })
        .collect()
}

pub fn combine_homs(m: &[Vec<i64>], hs: &[PMatrix]) -> Vec<PMatrix> {
    m.iter()
        .map(|row| {
            let field = hs[0].field().clone();
            row.iter().zip(hs).fold(PMatrix::zeros(&field, hs[0].rows(), hs[0].cols()), |acc, (&c, h)| {
                acc.add(&h.scale(&int(&field, c))).unwrap()
            })
        })
        .collect()
}

/// Integer representative of a `Q_p` element of nonnegative valuation, modulo `p^m`.
pub fn residue(x: &FieldElement, m: u32) -> BigInt {
    let p = BigInt::from(x.field().p());
    let modulus = p.pow(m);
    let c = x.coeffs()[0].clone();
    let shift = x.shift();
    let v = if shift >= 0 {
        c * p.pow(shift as u32)
    } else {
        let d = p.pow((-shift) as u32);
        assert!((&c % &d).is_zero());
        c / d
    };
    v.mod_floor(&modulus)
}

pub fn valuation(x: &BigInt, p: u64) -> u32 {
    if x.is_zero() {
        return u32::MAX;
    }
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        v += 1;
    }
    v
}

/// Teichmüller representative of `a` modulo `p^m` by iterating `x ↦ x^p`.
pub fn teichmuller_mod(p: u64, a: i64, m: u32) -> BigInt {
    let modulus = BigInt::from(p).pow(m);
    let mut x = BigInt::from(a).mod_floor(&modulus);
    for _ in 0..m {
        x = x.modpow(&BigInt::from(p), &modulus);
    }
    x
}

/// Iwasawa logarithm of an integer prime to `p`, modulo `p^m`, by the power series of `log(1 + y)`.
pub fn log_series(p: u64, x: &BigInt, m: u32) -> BigInt {
    let extra = 12;
    let big = BigInt::from(p);
    let work = big.pow(m + extra);
    let y: BigInt = (x.modpow(&BigInt::from(p - 1), &work) - BigInt::one()).mod_floor(&work);
    assert!(valuation(&y, p) >= 1);
    let mut sum = BigInt::zero();
    let mut power = BigInt::one();
    for n in 1u64.. {
        power = (&power * &y).mod_floor(&work);
        let vn = valuation(&BigInt::from(n), p);
        if n as i64 - vn as i64 > (m + extra) as i64 {
            break;
        }
        let unit = BigInt::from(n) / big.pow(vn);
        let inv = unit.modpow(&(euler_phi(p, m + extra) - 1), &work);
        let term = (&power / big.pow(vn) * inv).mod_floor(&work);
        if n % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let modulus = big.pow(m);
    let inv = BigInt::from(p - 1).modpow(&(euler_phi(p, m) - 1), &modulus);
    (sum * inv).mod_floor(&modulus)
}

fn euler_phi(p: u64, m: u32) -> BigInt {
    BigInt::from(p).pow(m - 1) * BigInt::from(p - 1)
}

/// Engine value before and after random unimodular changes of every basis the engine chooses,
/// with the certified precision of each run.
pub fn basis_change(prob: &GaloisProblem, seed: u64) -> ((FieldElement, i64), (FieldElement, i64)) {
    let engine = Engine::new(prob).unwrap();
    let r = &prob.refinements[0];
    let base = engine.l_invariant(r).unwrap().into_report().unwrap();
    let mut rng = rng(seed);
    let used = &base.bases;
    let w1_plus = prob.f() - base.e;
    let mut w_minus = Vec::new();
    if base.e > 0 {
        w_minus = combine_vectors(&unimodular(&mut rng, base.e), &used.w_minus);
        if w1_plus > 0 {
            for v in w_minus.iter_mut() {
                let c: Vec<i64> = (0..w1_plus).map(|_| rng.gen_range(-2..=2)).collect();
                let shift = combine_vectors(&[c], &used.w_plus[..w1_plus]);
                *v = v.iter().zip(&shift[0]).map(|(a, b)| a + b).collect();
            }
        }
    }
    let choice = BasisChoice {
        w_plus: (prob.d_plus() > 0).then(|| combine_vectors(&unimodular(&mut rng, prob.d_plus()), &used.w_plus)),
        w_minus: (base.e > 0).then_some(w_minus),
        kappa: (prob.d_plus() > 0).then(|| combine_homs(&unimodular(&mut rng, prob.d_plus()), &used.kappa)),
        kappa_prime: (base.e > 0).then(|| {
            let mut kp = combine_homs(&unimodular(&mut rng, base.e), &used.kappa_prime);
            if prob.d_plus() > 0 {
                let extra = combine_homs(&[vec![1; prob.d_plus()]], &used.kappa);
                kp[0] = kp[0].add(&extra[0]).unwrap();
            }
            kp
        }),
        w_minus_in_w_circle: false,
    };
    let moved = engine.l_invariant_with(r, &choice).unwrap().into_report().unwrap();
    ((base.value().clone(), base.certified_precision), (moved.value().clone(), moved.certified_precision))
}

/// A random `G_p`-stable subspace of dimension `d⁺`, with no regard to regularity.
pub fn random_stable_refinement(rng: &mut impl Rng, prob: &GaloisProblem, group: &str) -> Option<Refinement> {
    let eig = frobenius_eigenspaces(&prob.w, &group_named(group), prob.group.frobenius());
    let mut room: Vec<usize> = eig.iter().map(|(_, b)| b.len()).collect();
    let mut take = vec![0; eig.len()];
    for _ in 0..prob.d_plus() {
        let open: Vec<usize> = (0..room.len()).filter(|&i| room[i] > 0).collect();
        let i = *open.get(rng.gen_range(0..open.len().max(1)))?;
        room[i] -= 1;
        take[i] += 1;
    }
    let mut basis = Vec::new();
    for ((_, b), &k) in eig.iter().zip(&take) {
        if k == 0 {
            continue;
        }
        loop {
            let m: Vec<Vec<i64>> = (0..k).map(|_| (0..b.len()).map(|_| rng.gen_range(-3..=3)).collect()).collect();
            let rows: Vec<Vec<BigRational>> =
                m.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
            if rational_rank(&rows, b.len()) == k {
                basis.extend(combine_vectors(&m, b));
                break;
            }
        }
    }
    Some(Refinement {
        name: "random".into(),
        basis,
        motivic: false,
    })
}
