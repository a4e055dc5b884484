//! Synthetic fixtures: small Galois groups with rational and cyclotomic
//! representations, and unit modules carrying Frobenius-compatible p-adic data.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::Engine;
use crate::fixtures::{load_fixture, parse_element, Refinement, 
    element_to_json, AdjointCmJson, CmJson, CoeffFieldSpec, ElementJson, FamilyJson, FieldSpec,
    FixtureJson, GroupJson, RefinementJson, SpecialJson, UnitsJson, WJson,
};
use crate::galois::{certify_integer, permutation_table, rat_int, rat_mul, FiniteGroup, Representation};
use crate::linalg::{rational_rank, PMatrix, Vector};
use crate::padic::{FieldElement, LocalField};

type RatMat = Vec<Vec<BigRational>>;

#[derive(Debug, Clone)]
pub enum IrrepKind {
    Rational(Vec<RatMat>),
    /// `g ↦ ζ_n^{exps[g]}`.
    Cyclotomic { n: u64, exps: Vec<u64> },
}

#[derive(Debug, Clone)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    pub kind: IrrepKind,
}

#[derive(Debug, Clone)]
pub struct SmallGroup {
    pub name: &'static str,
    pub mult: Vec<Vec<usize>>,
    pub irreps: Vec<Irrep>,
}

impl SmallGroup {
    pub fn order(&self) -> usize {
        self.mult.len()
    }

    pub fn irrep(&self, name: &str) -> &Irrep {
        self.irreps.iter().find(|r| r.name == name).expect("known irrep")
    }

    fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != 0 {
            x = self.mult[g][x];
            k += 1;
        }
        k
    }

    pub fn involutions(&self) -> Vec<usize> {
        (0..self.order()).filter(|&g| self.mult[g][g] == 0).collect()
    }
}

fn rat_mat(rows: &[&[i64]]) -> RatMat {
    rows.iter().map(|r| r.iter().map(|&x| rat_int(x)).collect()).collect()
}

fn identity(n: usize) -> RatMat {
    (0..n).map(|i| (0..n).map(|j| rat_int(i64::from(i == j))).collect()).collect()
}

/// Extends generator images along the multiplication table.
fn extend<T: Clone + PartialEq>(
    mult: &[Vec<usize>],
    gens: &[(usize, T)],
    id: T,
    mul: impl Fn(&T, &T) -> T,
) -> Vec<T> {
    let n = mult.len();
    let mut out: Vec<Option<T>> = vec![None; n];
    out[0] = Some(id);
    let mut queue = vec![0];
    while let Some(a) = queue.pop() {
        let ma = out[a].clone().unwrap();
        for (s, ms) in gens {
            let b = mult[*s][a];
            let mb = mul(ms, &ma);
            match &out[b] {
                None => {
                    out[b] = Some(mb);
                    queue.push(b);
                }
                Some(x) => assert!(*x == mb, "generator images do not define a homomorphism"),
            }
        }
    }
    out.into_iter().map(|x| x.expect("generators generate")).collect()
}

fn build(name: &'static str, gens: &[Vec<usize>], irreps: Vec<(&str, Vec<RatMat>)>, cyclo: Vec<(&str, u64, Vec<u64>)>) -> SmallGroup {
    let (mult, perms) = permutation_table(gens);
    let gen_idx: Vec<usize> = gens.iter().map(|g| perms.iter().position(|x| x == g).unwrap()).collect();
    let mut out = Vec::new();
    for (nm, imgs) in irreps {
        let dim = imgs[0].len();
        let pairs: Vec<(usize, RatMat)> = gen_idx.iter().copied().zip(imgs).collect();
        let mats = extend(&mult, &pairs, identity(dim), |a, b| rat_mul(a, b));
        out.push(Irrep {
            name: nm.into(),
            dim,
            kind: IrrepKind::Rational(mats),
        });
    }
    for (nm, n, imgs) in cyclo {
        let pairs: Vec<(usize, u64)> = gen_idx.iter().copied().zip(imgs).collect();
        let exps = extend(&mult, &pairs, 0u64, |a, b| (a + b) % n);
        out.push(Irrep {
            name: nm.into(),
            dim: 1,
            kind: IrrepKind::Cyclotomic { n, exps },
        });
    }
    SmallGroup {
        name,
        mult,
        irreps: out,
    }
}

/// Cyclic, Klein, dihedral and symmetric groups of order at most 8.
pub fn small_groups() -> Vec<SmallGroup> {
    let m = |r: &[&[i64]]| rat_mat(r);
    vec![
        build("C2", &[vec![1, 0]], vec![("sign", vec![m(&[&[-1]])])], vec![]),
        build(
            "C3",
            &[vec![1, 2, 0]],
            vec![("rot", vec![m(&[&[0, -1], &[1, -1]])])],
            vec![("chi", 3, vec![1]), ("chi_bar", 3, vec![2])],
        ),
        build(
            "C4",
            &[vec![1, 2, 3, 0]],
            vec![("sign", vec![m(&[&[-1]])]), ("rot", vec![m(&[&[0, -1], &[1, 0]])])],
            vec![("chi", 4, vec![1]), ("chi_bar", 4, vec![3])],
        ),
        build(
            "C2xC2",
            &[vec![1, 0, 3, 2], vec![2, 3, 0, 1]],
            vec![
                ("a", vec![m(&[&[-1]]), m(&[&[1]])]),
                ("b", vec![m(&[&[1]]), m(&[&[-1]])]),
                ("ab", vec![m(&[&[-1]]), m(&[&[-1]])]),
            ],
            vec![],
        ),
        build(
            "S3",
            &[vec![1, 2, 0], vec![1, 0, 2]],
            vec![
                ("sign", vec![m(&[&[1]]), m(&[&[-1]])]),
                ("std", vec![m(&[&[0, -1], &[1, -1]]), m(&[&[-1, 1], &[0, 1]])]),
            ],
            vec![],
        ),
        build(
            "D4",
            &[vec![1, 2, 3, 0], vec![3, 2, 1, 0]],
            vec![
                ("r", vec![m(&[&[1]]), m(&[&[-1]])]),
                ("s", vec![m(&[&[-1]]), m(&[&[1]])]),
                ("rs", vec![m(&[&[-1]]), m(&[&[-1]])]),
                ("std", vec![m(&[&[0, -1], &[1, 0]]), m(&[&[1, 0], &[0, -1]])]),
            ],
            vec![],
        ),
    ]
}

pub fn group_named(name: &str) -> SmallGroup {
    small_groups().into_iter().find(|g| g.name == name).expect("known group")
}

fn primitive_root(p: u64) -> u64 {
    (2..p)
        .find(|&g| {
            let mut x = 1u64;
            (1..p - 1).all(|_| {
                x = x * g % p;
                x != 1
            })
        })
        .unwrap_or(1)
}

/// A primitive `n`-th root of unity in `Q_p`, for `n | p − 1`.
pub fn root_of_unity(field: &Arc<LocalField>, n: u64) -> FieldElement {
    let p = field.p();
    assert_eq!((p - 1) % n, 0, "no {n}-th roots of unity in Q_{p}");
    let g = primitive_root(p);
    let mut r = 1u64;
    for _ in 0..(p - 1) / n {
        r = r * g % p;
    }
    FieldElement::from_int(field, r as i64).teichmuller().unwrap()
}

fn rat_inverse(m: &RatMat) -> RatMat {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .zip(identity(n))
        .map(|(r, e)| r.iter().cloned().chain(e).collect())
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| !a[i][c].is_zero()).expect("invertible");
        a.swap(c, piv);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let row = a[c].clone();
                for (x, y) in a[i].iter_mut().zip(row) {
                    *x -= &f * y;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// A random integer matrix with determinant 1, preserving the block split at `split`.
fn random_unimodular(rng: &mut impl Rng, n: usize, split: usize, spread: i64) -> RatMat {
    let mut upper = identity(n);
    let mut lower = identity(n);
    for i in 0..n {
        for j in 0..n {
            if i < j {
                upper[i][j] = rat_int(rng.gen_range(-spread..=spread));
            } else if i > j && (i < split) == (j < split) {
                lower[i][j] = rat_int(rng.gen_range(-spread..=spread));
            }
        }
    }
    rat_mul(&upper, &lower)
}

fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    if m.is_empty() {
        return vec![];
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

/// `W` as rational matrices, or as matrices over the coefficient field.
#[derive(Debug, Clone)]
pub enum WMatrices {
    Rational(Vec<RatMat>),
    Padic(Vec<PMatrix>),
}

impl WMatrices {
    pub fn representation(&self, field: &Arc<LocalField>, dim: usize) -> Representation {
        match self {
            WMatrices::Rational(m) => Representation::from_rational("W", field, dim, m.clone()),
            WMatrices::Padic(m) => Representation::new("W", field, dim, m.clone()),
        }
    }

    fn to_json(&self) -> Vec<Vec<Vec<ElementJson>>> {
        match self {
            WMatrices::Rational(ms) => ms
                .iter()
                .map(|m| m.iter().map(|r| r.iter().map(rational_json).collect()).collect())
                .collect(),
            WMatrices::Padic(ms) => ms
                .iter()
                .map(|m| m.row_vectors().iter().map(|r| r.iter().map(element_to_json).collect()).collect())
                .collect(),
        }
    }
}

pub fn rational_json(x: &BigRational) -> ElementJson {
    use num_traits::ToPrimitive;
    let n = x.numer().to_i64().expect("small numerator");
    let d = x.denom().to_i64().expect("small denominator");
    if d == 1 {
        ElementJson::Int(n)
    } else {
        ElementJson::Rational([n, d])
    }
}

/// Direct sum of irreducibles over `Q_p`, conjugated by `conj` when given.
pub fn direct_sum(
    group: &SmallGroup,
    parts: &[&Irrep],
    field: &Arc<LocalField>,
    conj: Option<&RatMat>,
) -> (WMatrices, usize) {
    let dim: usize = parts.iter().map(|r| r.dim).sum();
    let order = group.order();
    let all_rational = parts.iter().all(|r| matches!(r.kind, IrrepKind::Rational(_)));
    let mut rat: Vec<RatMat> = vec![vec![vec![BigRational::zero(); dim]; dim]; order];
    let mut pad: Vec<Vec<Vec<FieldElement>>> =
        vec![vec![vec![FieldElement::zero(field); dim]; dim]; order];
    let mut off = 0;
    for r in parts {
        for g in 0..order {
            match &r.kind {
                IrrepKind::Rational(ms) => {
                    for i in 0..r.dim {
                        for j in 0..r.dim {
                            rat[g][off + i][off + j] = ms[g][i][j].clone();
                            pad[g][off + i][off + j] = FieldElement::from_rational(field, &ms[g][i][j]);
                        }
                    }
                }
                IrrepKind::Cyclotomic { n, exps } => {
                    pad[g][off][off] = root_of_unity(field, *n).pow(exps[g]);
                }
            }
        }
        off += r.dim;
    }
    match (all_rational, conj) {
        (true, None) => (WMatrices::Rational(rat), dim),
        (true, Some(q)) => {
            let qi = rat_inverse(q);
            (
                WMatrices::Rational(rat.iter().map(|m| rat_mul(&qi, &rat_mul(m, q))).collect()),
                dim,
            )
        }
        (false, c) => {
            let mats: Vec<PMatrix> = pad.iter().map(|m| PMatrix::from_rows(field, m)).collect();
            let mats = match c {
                None => mats,
                Some(q) => {
                    let qm = PMatrix::from_rationals(field, q);
                    let qi = PMatrix::from_rationals(field, &rat_inverse(q));
                    mats.iter().map(|m| qi.mul(&m.mul(&qm).unwrap()).unwrap()).collect()
                }
            };
            (WMatrices::Padic(mats), dim)
        }
    }
}

/// The unit module of the synthetic number field cut out by a group with
/// complex conjugation `tau` and Frobenius `frob`.
#[derive(Debug, Clone)]
pub struct UnitData {
    pub rank_units: usize,
    pub rank_total: usize,
    pub action: Vec<RatMat>,
    pub ord_p: Vec<i64>,
    pub embeddings: Vec<FieldElement>,
}

impl UnitData {
    pub fn to_json(&self, logs_only: bool) -> UnitsJson {
        let action = self
            .action
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(rational_json).collect()).collect())
            .collect();
        let (embeddings, logs) = if logs_only {
            (
                None,
                Some(self.embeddings.iter().map(|x| element_to_json(&x.iwasawa_log().unwrap())).collect()),
            )
        } else {
            (Some(self.embeddings.iter().map(element_to_json).collect()), None)
        };
        UnitsJson {
            rank_units: self.rank_units,
            rank_total: self.rank_total,
            action,
            ord_p: self.ord_p.clone(),
            embeddings,
            logs,
        }
    }
}

fn permutation_action(mult: &[Vec<usize>], cosets: &[Vec<usize>], g: usize) -> Vec<usize> {
    cosets
        .iter()
        .map(|c| {
            let x = mult[g][c[0]];
            cosets.iter().position(|d| d.contains(&x)).unwrap()
        })
        .collect()
}

/// Frobenius-compatible logs on a permutation basis, summing to zero.
fn coset_logs(
    rng: &mut impl Rng,
    field_e: &Arc<LocalField>,
    frob_perm: &[usize],
    m: usize,
) -> Vec<FieldElement> {
    let n = frob_perm.len();
    let p = field_e.p();
    let mut logs: Vec<Option<FieldElement>> = vec![None; n];
    for c in 0..n {
        if logs[c].is_some() {
            continue;
        }
        let mut orbit = vec![c];
        let mut x = frob_perm[c];
        while x != c {
            orbit.push(x);
            x = frob_perm[x];
        }
        let k = orbit.len();
        let digits = field_e.precision() as usize + 2;
        let coords: Vec<Vec<u64>> = (0..field_e.degree())
            .map(|_| (0..digits).map(|_| rng.gen_range(0..p)).collect())
            .collect();
        let x = FieldElement::from_digits(field_e, &coords, 1, Some(field_e.default_abs_precision() + 1)).unwrap();
        let mut base = FieldElement::zero(field_e);
        let mut y = x;
        for j in 0..m {
            if j % k == 0 {
                base = &base + &y;
            }
            y = y.frobenius().unwrap();
        }
        let mut cur = base;
        for &o in &orbit {
            logs[o] = Some(cur.clone());
            cur = cur.frobenius().unwrap();
        }
    }
    let logs: Vec<FieldElement> = logs.into_iter().map(Option::unwrap).collect();
    let total = logs.iter().fold(FieldElement::zero(field_e), |a, b| &a + b);
    let mean = total.div_int(&BigInt::from(n)).unwrap();
    logs.iter().map(|x| x - &mean).collect()
}

pub fn unit_data(
    rng: &mut impl Rng,
    group: &SmallGroup,
    tau: usize,
    frob: usize,
    field_e: &Arc<LocalField>,
    teichmuller: bool,
    mix: bool,
) -> UnitData {
    let fg = FiniteGroup::unchecked(group.mult.clone(), frob, tau, vec![]);
    let gp = fg.subgroup_generated(&[frob]);
    let tau_sub = fg.subgroup_generated(&[tau]);
    let cos_t = fg.left_cosets(&tau_sub);
    let cos_p = fg.left_cosets(&gp);
    let m = group.element_order(frob);
    let nt = cos_t.len();
    let np = cos_p.len();
    let r = nt - 1;
    let big_r = r + np;
    let mut action = Vec::new();
    for g in 0..group.order() {
        let pt = permutation_action(&group.mult, &cos_t, g);
        let pp = permutation_action(&group.mult, &cos_p, g);
        let mut a = vec![vec![BigRational::zero(); big_r]; big_r];
        for i in 0..r {
            let mut v = vec![0i64; nt];
            v[pt[i]] += 1;
            v[pt[nt - 1]] -= 1;
            for (k, &x) in v.iter().enumerate().take(r) {
                a[k][i] = rat_int(x);
            }
        }
        for j in 0..np {
            a[r + pp[j]][r + j] = BigRational::one();
        }
        action.push(a);
    }
    let lt = coset_logs(rng, field_e, &permutation_action(&group.mult, &cos_t, frob), m);
    let lp = coset_logs(rng, field_e, &permutation_action(&group.mult, &cos_p, frob), m);
    let p = field_e.p();
    let zeta = |rng: &mut dyn rand::RngCore| -> FieldElement {
        if teichmuller {
            FieldElement::from_int(field_e, rng.gen_range(1..p) as i64).teichmuller().unwrap()
        } else {
            FieldElement::one(field_e)
        }
    };
    let emb_t: Vec<FieldElement> = lt.iter().map(|l| &zeta(rng) * &l.exp().unwrap()).collect();
    let mut embeddings: Vec<FieldElement> = (0..r).map(|i| emb_t[i].div(&emb_t[nt - 1]).unwrap()).collect();
    let mut ord_p: Vec<i64> = vec![0; r];
    let pe = FieldElement::from_int(field_e, p as i64);
    for (j, l) in lp.iter().enumerate() {
        let o = i64::from(j == 0);
        let mut x = &zeta(rng) * &l.exp().unwrap();
        if o == 1 {
            x = &x * &pe;
        }
        embeddings.push(x);
        ord_p.push(o);
    }
    if !mix {
        return UnitData {
            rank_units: r,
            rank_total: big_r,
            action,
            ord_p,
            embeddings,
        };
    }
    let pm = random_unimodular(rng, big_r, r, 1);
    let pinv = rat_inverse(&pm);
    let action = action.iter().map(|a| rat_mul(&pinv, &rat_mul(a, &pm))).collect();
    let cols = transpose(&pm);
    let ord_new = cols
        .iter()
        .map(|c| {
            c.iter()
                .zip(&ord_p)
                .map(|(x, &o)| x.numer() * BigInt::from(o))
                .sum::<BigInt>()
                .try_into()
                .unwrap()
        })
        .collect();
    let emb_new = cols
        .iter()
        .map(|c| {
            c.iter().zip(&embeddings).fold(FieldElement::one(field_e), |acc, (x, e)| {
                let k: i64 = x.numer().try_into().unwrap();
                match k.signum() {
                    0 => acc,
                    1 => &acc * &e.pow(k as u64),
                    _ => acc.div(&e.pow(k.unsigned_abs())).unwrap(),
                }
            })
        })
        .collect();
    UnitData {
        rank_units: r,
        rank_total: big_r,
        action,
        ord_p: ord_new,
        embeddings: emb_new,
    }
}

fn vec_json(v: &[FieldElement]) -> Vec<ElementJson> {
    v.iter().map(element_to_json).collect()
}

fn group_json(group: &SmallGroup, tau: usize, frob: usize) -> GroupJson {
    let fg = FiniteGroup::unchecked(group.mult.clone(), frob, tau, vec![]);
    GroupJson {
        order: group.order(),
        mult: group.mult.clone(),
        frobenius: frob,
        conjugation: tau,
        gp: fg.subgroup_generated(&[frob]),
    }
}

/// Eigenvalues of Frobenius (as powers of a primitive `m`-th root) with their eigenspaces.
pub fn frobenius_eigenspaces(
    w: &Representation,
    group: &SmallGroup,
    frob: usize,
) -> Vec<(FieldElement, Vec<Vector>)> {
    let field = w.field();
    let m = group.element_order(frob);
    let zeta = root_of_unity(field, m as u64);
    let d = w.dim();
    let mut out = Vec::new();
    let mut powers = vec![0usize];
    for i in 1..m {
        powers.push(group.mult[frob][powers[i - 1]]);
    }
    for k in 0..m {
        let lambda = zeta.pow(k as u64);
        let inv = lambda.inverse().unwrap();
        let mut s = FieldElement::zero(field);
        for (i, &g) in powers.iter().enumerate() {
            s = &s + &(&inv.pow(i as u64) * &w.character(g));
        }
        let dim = certify_integer(&s, m, d, "eigenspace dimension").unwrap();
        if dim == 0 {
            continue;
        }
        let shifted = w
            .matrix(frob)
            .sub(&PMatrix::identity(field, d).scale(&lambda))
            .unwrap();
        let basis = shifted.kernel_basis_expecting(Some(dim)).unwrap();
        out.push((lambda, basis));
    }
    out
}

fn random_combination(rng: &mut impl Rng, basis: &[Vector], k: usize) -> Vec<Vector> {
    let field = basis[0][0].field().clone();
    let d = basis[0].len();
    loop {
        let coeffs: Vec<Vec<i64>> = (0..k)
            .map(|_| (0..basis.len()).map(|_| rng.gen_range(-4..=4)).collect())
            .collect();
        let vs: Vec<Vector> = coeffs
            .iter()
            .map(|c| {
                (0..d)
                    .map(|i| {
                        c.iter().zip(basis).fold(FieldElement::zero(&field), |acc, (&a, v)| {
                            &acc + &(&FieldElement::from_int(&field, a) * &v[i])
                        })
                    })
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<BigRational>> = coeffs.iter().map(|c| c.iter().map(|&a| rat_int(a)).collect()).collect();
        if rational_rank(&rows, basis.len()) == k {
            return vs;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub max_dim: usize,
    pub max_e: usize,
    /// Precision written into the fixture.
    pub precision: i64,
    /// Digits actually generated.
    pub digits: i64,
    pub refinements: usize,
    pub primes: Vec<u64>,
    pub mix_units: bool,
    pub conjugate_w: bool,
    pub teichmuller: bool,
    pub logs_only: bool,
    /// Force `d⁺ = 0`.
    pub gross: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_dim: 4,
            max_e: 2,
            precision: 40,
            digits: 40,
            refinements: 1,
            primes: vec![5, 7, 13],
            mix_units: true,
            conjugate_w: true,
            teichmuller: true,
            logs_only: false,
            gross: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub json: FixtureJson,
    pub group: &'static str,
    pub irreps: Vec<String>,
    pub d: usize,
    pub d_plus: usize,
    pub f: usize,
    /// Extra-zero order of each refinement, by construction.
    pub e: Vec<usize>,
}

fn choose_split(
    rng: &mut impl Rng,
    dims: &[(bool, usize)],
    d_plus: usize,
    f: usize,
    max_e: usize,
) -> Option<Vec<usize>> {
    let mut options = Vec::new();
    let mut cur = vec![0; dims.len()];
    fn rec(
        i: usize,
        left: usize,
        dims: &[(bool, usize)],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        f: usize,
        max_e: usize,
    ) {
        if i == dims.len() {
            let k1: usize = dims.iter().zip(cur.iter()).filter(|(d, _)| d.0).map(|(_, &k)| k).sum();
            if left == 0 && f - k1 <= max_e {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=dims[i].1.min(left) {
            cur[i] = k;
            rec(i + 1, left - k, dims, cur, out, f, max_e);
        }
        cur[i] = 0;
    }
    rec(0, d_plus, dims, &mut cur, &mut options, f, max_e);
    let order = |o: &Vec<usize>| f - dims.iter().zip(o).filter(|(d, _)| d.0).map(|(_, &k)| k).sum::<usize>();
    let mut es: Vec<usize> = options.iter().map(order).collect();
    es.sort_unstable();
    es.dedup();
    let e = *es.choose(rng)?;
    let picked: Vec<&Vec<usize>> = options.iter().filter(|o| order(o) == e).collect();
    picked.choose(rng).map(|o| (*o).clone())
}

/// A random fixture within the requested bounds.
pub fn random_fixture(rng: &mut impl Rng, opts: &SynthOptions) -> SynthFixture {
    let groups = small_groups();
    loop {
        let group = groups.choose(rng).unwrap();
        let tau = *group.involutions().choose(rng).unwrap();
        let frob = rng.gen_range(0..group.order());
        let m = group.element_order(frob) as u64;
        let count = rng.gen_range(1..=3);
        let parts: Vec<&Irrep> = (0..count).map(|_| group.irreps.choose(rng).unwrap()).collect();
        let dim: usize = parts.iter().map(|r| r.dim).sum();
        if dim > opts.max_dim {
            continue;
        }
        let mut need = m;
        for r in &parts {
            if let IrrepKind::Cyclotomic { n, .. } = r.kind {
                need = num_integer::lcm(need, n);
            }
        }
        let primes: Vec<u64> = opts.primes.iter().copied().filter(|p| (p - 1) % need == 0 && !(group.order() as u64).is_multiple_of(*p)).collect();
        let Some(&p) = primes.choose(rng) else { continue };
        let field_c = LocalField::qp(p, opts.digits).unwrap();
        let conj = opts.conjugate_w.then(|| random_unimodular(rng, dim, dim, 1));
        let (wm, d) = direct_sum(group, &parts, &field_c, conj.as_ref());
        let w = wm.representation(&field_c, d);
        let fg = FiniteGroup::unchecked(group.mult.clone(), frob, tau, vec![]);
        let d_plus = w.d_plus(&fg).unwrap();
        if opts.gross && d_plus != 0 {
            continue;
        }
        let eig = frobenius_eigenspaces(&w, group, frob);
        let f = eig.iter().find(|(l, _)| l.agrees_with(&FieldElement::one(&field_c))).map_or(0, |(_, b)| b.len());
        let dims: Vec<(bool, usize)> = eig
            .iter()
            .map(|(l, b)| (l.agrees_with(&FieldElement::one(&field_c)), b.len()))
            .collect();
        if choose_split(rng, &dims, d_plus, f, opts.max_e).is_none() {
            continue;
        }
        let field_e = LocalField::unramified(p, m as usize, opts.digits).unwrap();
        let units = unit_data(rng, group, tau, frob, &field_e, opts.teichmuller, opts.mix_units);
        let json = FixtureJson {
            p,
            precision: opts.precision,
            e_field: FieldSpec {
                unramified_degree: m as usize,
            },
            coeff_field: CoeffFieldSpec {
                unramified_degree: 1,
                eisenstein: None,
            },
            group: group_json(group, tau, frob),
            w: WJson {
                dim: d,
                matrices: wm.to_json(),
                motivic: false,
            },
            units: units.to_json(opts.logs_only),
            refinements: Vec::new(),
            special: None,
            h_polynomial: None,
        };
        let Some((refinements, es)) = regular_refinements(rng, &json, &eig, &dims, d_plus, f, opts) else {
            continue;
        };
        let json = FixtureJson { refinements, ..json };
        return SynthFixture {
            json,
            group: group.name,
            irreps: parts.iter().map(|r| r.name.clone()).collect(),
            d,
            d_plus,
            f,
            e: es,
        };
    }
}

/// Random `G_p`-stable refinements, kept only when regular.
fn regular_refinements(
    rng: &mut impl Rng,
    json: &FixtureJson,
    eig: &[(FieldElement, Vec<Vector>)],
    dims: &[(bool, usize)],
    d_plus: usize,
    f: usize,
    opts: &SynthOptions,
) -> Option<(Vec<RefinementJson>, Vec<usize>)> {
    let prob = load_fixture(serde_json::to_string(json).ok()?.as_bytes()).ok()?;
    let engine = Engine::new(&prob).ok()?;
    let mut refinements = Vec::new();
    let mut es = Vec::new();
    let mut attempts = 0;
    while refinements.len() < opts.refinements {
        attempts += 1;
        if attempts > 20 * opts.refinements {
            return None;
        }
        let split = choose_split(rng, dims, d_plus, f, opts.max_e)?;
        let mut basis = Vec::new();
        let mut k1 = 0;
        for ((l, b), &k) in eig.iter().zip(&split) {
            if k == 0 {
                continue;
            }
            if l.agrees_with(&FieldElement::one(l.field())) {
                k1 = k;
            }
            basis.extend(random_combination(rng, b, k));
        }
        let r = RefinementJson {
            name: format!("r{}", refinements.len()),
            basis: basis.iter().map(|v| vec_json(v)).collect(),
            motivic: false,
        };
        let parsed = Refinement {
            name: r.name.clone(),
            basis: r.basis.iter().map(|v| v.iter().map(|x| parse_element(&prob.working, x)).collect::<Result<_, _>>()).collect::<Result<_, _>>().ok()?,
            motivic: false,
        };
        if !engine.is_regular(&parsed).map(|g| g.regular).unwrap_or(false) {
            continue;
        }
        es.push(f - k1);
        refinements.push(r);
    }
    Some((refinements, es))
}

/// The imaginary quadratic field `Q(i)` at `p = 5` on the `p`-units `2 + i, 2 − i`,
/// with `ι(i)` the Teichmüller lift of `teich`.
pub fn gaussian_fixture(teich: i64, precision: i64, digits: i64) -> FixtureJson {
    let group = group_named("C2");
    let field = LocalField::qp(5, digits).unwrap();
    let omega = FieldElement::from_int(&field, teich).teichmuller().unwrap();
    let two = FieldElement::from_int(&field, 2);
    let minus = &two - &omega;
    let plus = &two + &omega;
    let ord = |x: &FieldElement| x.val_pi().unwrap();
    FixtureJson {
        p: 5,
        precision,
        e_field: FieldSpec { unramified_degree: 1 },
        coeff_field: CoeffFieldSpec {
            unramified_degree: 1,
            eisenstein: None,
        },
        group: group_json(&group, 1, 0),
        w: WJson {
            dim: 1,
            matrices: vec![vec![vec![ElementJson::Int(1)]], vec![vec![ElementJson::Int(-1)]]],
            motivic: true,
        },
        units: UnitsJson {
            rank_units: 0,
            rank_total: 2,
            action: vec![
                vec![vec![ElementJson::Int(1), ElementJson::Int(0)], vec![ElementJson::Int(0), ElementJson::Int(1)]],
                vec![vec![ElementJson::Int(0), ElementJson::Int(1)], vec![ElementJson::Int(1), ElementJson::Int(0)]],
            ],
            ord_p: vec![ord(&plus), ord(&minus)],
            embeddings: Some(vec![element_to_json(&plus), element_to_json(&minus)]),
            logs: None,
        },
        refinements: vec![RefinementJson {
            name: "default".into(),
            basis: vec![],
            motivic: true,
        }],
        special: None,
        h_polynomial: Some(vec![1, 0, 1]),
    }
}

/// Eigenvector of the rotation `(0 1 2)` on the standard representation of `S3` with eigenvalue `ζ`.
fn std_eigenvector(field: &Arc<LocalField>, zeta: &FieldElement) -> Vector {
    let group = group_named("S3");
    let IrrepKind::Rational(ms) = &group.irrep("std").kind else { unreachable!() };
    let rot = (0..group.order()).find(|&g| group.element_order(g) == 3).unwrap();
    let m = PMatrix::from_rationals(field, &ms[rot])
        .sub(&PMatrix::identity(field, 2).scale(zeta))
        .unwrap();
    
    m.kernel_basis_expecting(Some(1)).unwrap().remove(0)
}

fn s3_conjugation() -> usize {
    let group = group_named("S3");
    group.involutions().into_iter().find(|&g| g != 0).unwrap()
}

/// `S3` at `p = 7`, split completely, acting on its standard representation.
pub fn cm_fixture(rng: &mut impl Rng, precision: i64, digits: i64) -> FixtureJson {
    let group = group_named("S3");
    let tau = s3_conjugation();
    let field = LocalField::qp(7, digits).unwrap();
    let zeta = root_of_unity(&field, 3);
    let (wm, d) = direct_sum(&group, &[group.irrep("std")], &field, None);
    let w = wm.representation(&field, d);
    let e1 = std_eigenvector(&field, &zeta);
    let e2 = w.matrix(tau).mul_vec(&e1);
    let units = unit_data(rng, &group, tau, 0, &field, true, true);
    let line = |s: i64| -> Vec<ElementJson> {
        let v: Vector = e1
            .iter()
            .zip(&e2)
            .map(|(a, b)| a + &(&FieldElement::from_int(&field, s) * b))
            .collect();
        vec_json(&v)
    };
    FixtureJson {
        p: 7,
        precision,
        e_field: FieldSpec { unramified_degree: 1 },
        coeff_field: CoeffFieldSpec {
            unramified_degree: 1,
            eisenstein: None,
        },
        group: group_json(&group, tau, 0),
        w: WJson {
            dim: 2,
            matrices: wm.to_json(),
            motivic: false,
        },
        units: units.to_json(false),
        refinements: vec![
            RefinementJson {
                name: "psi".into(),
                basis: vec![vec_json(&e1)],
                motivic: true,
            },
            RefinementJson {
                name: "psi_bar".into(),
                basis: vec![vec_json(&e2)],
                motivic: true,
            },
            RefinementJson {
                name: "s=1".into(),
                basis: vec![line(1)],
                motivic: false,
            },
        ],
        special: Some(SpecialJson {
            family: Some(FamilyJson {
                base: vec_json(&e1),
                s_dir: vec_json(&e2),
                t_dir: None,
            }),
            cm: Some(CmJson {
                e1: vec_json(&e1),
                slope: None,
                slope_bar: None,
                l_psi: None,
                l_psi_bar: None,
            }),
            adjoint_cm: None,
        }),
        h_polynomial: None,
    }
}

/// `S3` at `p = 7`, split completely, acting on `sign ⊕ std` with basis `w1, w2, w3 = τ·w2`.
pub fn adjoint_cm_fixture(rng: &mut impl Rng, precision: i64, digits: i64) -> FixtureJson {
    let group = group_named("S3");
    let tau = s3_conjugation();
    let field = LocalField::qp(7, digits).unwrap();
    let zeta = root_of_unity(&field, 3);
    let (wm, d) = direct_sum(&group, &[group.irrep("sign"), group.irrep("std")], &field, None);
    let w = wm.representation(&field, d);
    let e1 = std_eigenvector(&field, &zeta);
    let zero = FieldElement::zero(&field);
    let w1: Vector = vec![FieldElement::one(&field), zero.clone(), zero.clone()];
    let w2: Vector = std::iter::once(zero).chain(e1).collect();
    let w3 = w.matrix(tau).mul_vec(&w2);
    let units = unit_data(rng, &group, tau, 0, &field, true, true);
    FixtureJson {
        p: 7,
        precision,
        e_field: FieldSpec { unramified_degree: 1 },
        coeff_field: CoeffFieldSpec {
            unramified_degree: 1,
            eisenstein: None,
        },
        group: group_json(&group, tau, 0),
        w: WJson {
            dim: 3,
            matrices: wm.to_json(),
            motivic: false,
        },
        units: units.to_json(false),
        refinements: vec![
            RefinementJson {
                name: "theta".into(),
                basis: vec![vec_json(&w2)],
                motivic: true,
            },
            RefinementJson {
                name: "theta_bar".into(),
                basis: vec![vec_json(&w3)],
                motivic: true,
            },
        ],
        special: Some(SpecialJson {
            family: Some(FamilyJson {
                base: vec_json(&w2),
                s_dir: vec_json(&w3),
                t_dir: Some(vec_json(&w1)),
            }),
            cm: None,
            adjoint_cm: Some(AdjointCmJson {
                w1: vec_json(&w1),
                w2: vec_json(&w2),
                l_frak_p: None,
                l_phi: None,
                l_phi_bar: None,
                slope_phi: None,
                slope_phi_bar: None,
                xi: None,
            }),
        }),
        h_polynomial: None,
    }
}
