//! Finite extensions of Q_p with absolute precision tracking.
//!
//! A field is an unramified extension `U = Q_p(α)` of degree `f`, optionally
//! followed by a totally ramified Eisenstein step `K = U(π)` of degree `e`.
//! Elements are stored as `p^shift · Σ c_ij α^i π^j` with integer coefficients
//! and an absolute precision counted in powers of `π`.

mod table;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Precision marker for elements known exactly.
pub const EXACT: i64 = i64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid field parameters: {0}")]
    InvalidParameters(String),
    #[error("no defining polynomial for p = {p}, f = {f}")]
    MissingPolynomial { p: u64, f: usize },
    #[error("defining polynomial is reducible modulo p")]
    Reducible,
    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error("valuation of zero")]
    InfiniteValuation,
    #[error("division by zero")]
    DivisionByZero,
    #[error("not a unit")]
    NotUnit,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, PadicError>;

pub struct LocalField {
    p: u64,
    prime: BigInt,
    f: usize,
    e: usize,
    unram: Vec<BigInt>,
    eis: Option<Vec<Vec<BigInt>>>,
    precision: i64,
    powers: OnceLock<Vec<BigInt>>,
    sigma: OnceLock<Option<(i64, Vec<BigInt>)>>,
}

impl fmt::Debug for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalField")
            .field("p", &self.p)
            .field("f", &self.f)
            .field("e", &self.e)
            .field("precision", &self.precision)
            .finish()
    }
}

/// Builds a field; `eis` lists the Eisenstein coefficients low to high, each a
/// coordinate vector over the unramified step.
pub fn make_field(
    p: u64,
    f0: usize,
    eis: Option<Vec<Vec<BigInt>>>,
    n: i64,
) -> Result<Arc<LocalField>> {
    LocalField::new(p, f0, eis, n)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The checked-in defining polynomial of the degree-`f` unramified extension.
pub fn unramified_polynomial(p: u64, f: usize) -> Option<Vec<BigInt>> {
    if f == 1 {
        return Some(vec![BigInt::zero(), BigInt::one()]);
    }
    table::UNRAMIFIED
        .iter()
        .find(|(q, g, _)| *q == p && *g == f)
        .map(|(_, _, c)| c.iter().map(|&x| BigInt::from(x)).collect())
}

impl LocalField {
    pub fn new(
        p: u64,
        f: usize,
        eisenstein: Option<Vec<Vec<BigInt>>>,
        precision: i64,
    ) -> Result<Arc<Self>> {
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        if f == 0 {
            return Err(PadicError::InvalidParameters(
                "unramified degree must be positive".into(),
            ));
        }
        if precision < 1 {
            return Err(PadicError::InvalidParameters(
                "precision must be positive".into(),
            ));
        }
        let unram = unramified_polynomial(p, f).ok_or(PadicError::MissingPolynomial { p, f })?;
        let reduced: Vec<u64> = unram
            .iter()
            .map(|c| c.mod_floor(&BigInt::from(p)).to_u64().unwrap())
            .collect();
        if f > 1 && !fp::is_irreducible(&reduced, p) {
            return Err(PadicError::Reducible);
        }
        let eis = match eisenstein {
            None => None,
            Some(poly) => check_eisenstein(p, f, poly)?,
        };
        let e = eis.as_ref().map_or(1, |c| c.len() - 1);
        Ok(Arc::new(LocalField {
            p,
            prime: BigInt::from(p),
            f,
            e,
            unram,
            eis,
            precision,
            powers: OnceLock::new(),
            sigma: OnceLock::new(),
        }))
    }

    pub fn qp(p: u64, precision: i64) -> Result<Arc<Self>> {
        Self::new(p, 1, None, precision)
    }

    pub fn unramified(p: u64, f: usize, precision: i64) -> Result<Arc<Self>> {
        Self::new(p, f, None, precision)
    }

    /// Totally ramified over the degree-`f` unramified field, with an
    /// Eisenstein polynomial whose coefficients are rational integers.
    pub fn ramified(p: u64, f: usize, eis: &[i64], precision: i64) -> Result<Arc<Self>> {
        let poly = eis.iter().map(|&c| vec![BigInt::from(c)]).collect();
        Self::new(p, f, Some(poly), precision)
    }

    pub fn with_precision(&self, precision: i64) -> Result<Arc<Self>> {
        Self::new(self.p, self.f, self.eis.clone(), precision)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prime(&self) -> &BigInt {
        &self.prime
    }

    pub fn residue_degree(&self) -> usize {
        self.f
    }

    pub fn ramification_index(&self) -> usize {
        self.e
    }

    pub fn degree(&self) -> usize {
        self.f * self.e
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    /// Default absolute precision, in units of the uniformizer.
    pub fn default_abs_precision(&self) -> i64 {
        self.e as i64 * self.precision
    }

    pub fn residue_size(&self) -> BigInt {
        num_traits::pow(self.prime.clone(), self.f)
    }

    pub fn unramified_poly(&self) -> &[BigInt] {
        &self.unram
    }

    pub fn eisenstein(&self) -> Option<&[Vec<BigInt>]> {
        self.eis.as_deref()
    }

    pub fn same_as(&self, other: &LocalField) -> bool {
        self.p == other.p && self.f == other.f && self.unram == other.unram && self.eis == other.eis
    }

    pub fn base_field(&self) -> Arc<LocalField> {
        LocalField::qp(self.p, self.precision).expect("base field")
    }

    pub fn unramified_subfield(&self) -> Arc<LocalField> {
        LocalField::unramified(self.p, self.f, self.precision).expect("unramified subfield")
    }

    pub(crate) fn pow_p(&self, k: i64) -> BigInt {
        debug_assert!(k >= 0);
        let table = self.powers.get_or_init(|| {
            let n = (4 * self.precision as usize + 64).min(4096);
            let mut v = Vec::with_capacity(n);
            let mut x = BigInt::one();
            for _ in 0..n {
                v.push(x.clone());
                x *= &self.prime;
            }
            v
        });
        match table.get(k as usize) {
            Some(x) => x.clone(),
            None => num_traits::pow(self.prime.clone(), k as usize),
        }
    }

    fn vp(&self, x: &BigInt) -> i64 {
        debug_assert!(!x.is_zero());
        if self.p == 2 {
            return x.trailing_zeros().unwrap_or(0) as i64;
        }
        let mut n = 0;
        let mut y = x.clone();
        loop {
            let (q, r) = y.div_rem(&self.prime);
            if !r.is_zero() {
                return n;
            }
            y = q;
            n += 1;
        }
    }

    fn frobenius_supported(&self) -> bool {
        match &self.eis {
            None => true,
            Some(c) => c.iter().all(|a| a.iter().skip(1).all(Zero::is_zero)),
        }
    }

    fn reduce_alpha(&self, row: &mut Vec<BigInt>) {
        let f = self.f;
        while row.len() > f {
            let d = row.len() - 1;
            let t = row.pop().unwrap();
            if t.is_zero() {
                continue;
            }
            for i in 0..f {
                if !self.unram[i].is_zero() {
                    row[d - f + i] -= &t * &self.unram[i];
                }
            }
        }
        row.resize(f, BigInt::zero());
    }

    fn mul_alpha(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    out[i + j] += x * y;
                }
            }
        }
        self.reduce_alpha(&mut out);
        out
    }

    fn mul_coeffs(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let (f, e) = (self.f, self.e);
        if f == 1 && e == 1 {
            return vec![&a[0] * &b[0]];
        }
        let mut prod = vec![vec![BigInt::zero(); 2 * f - 1]; 2 * e - 1];
        for j1 in 0..e {
            for i1 in 0..f {
                let x = &a[j1 * f + i1];
                if x.is_zero() {
                    continue;
                }
                for j2 in 0..e {
                    for i2 in 0..f {
                        let y = &b[j2 * f + i2];
                        if !y.is_zero() {
                            prod[j1 + j2][i1 + i2] += x * y;
                        }
                    }
                }
            }
        }
        for row in prod.iter_mut() {
            self.reduce_alpha(row);
        }
        if let Some(eis) = &self.eis {
            for j in (e..2 * e - 1).rev() {
                let c = std::mem::take(&mut prod[j]);
                if c.iter().all(Zero::is_zero) {
                    continue;
                }
                for (k, a_k) in eis.iter().enumerate().take(e) {
                    if a_k.iter().all(Zero::is_zero) {
                        continue;
                    }
                    let t = self.mul_alpha(&c, a_k);
                    for (dst, src) in prod[j - e + k].iter_mut().zip(t) {
                        *dst -= src;
                    }
                }
            }
        }
        prod.truncate(e);
        prod.into_iter().flatten().collect()
    }
}

fn check_eisenstein(p: u64, f: usize, poly: Vec<Vec<BigInt>>) -> Result<Option<Vec<Vec<BigInt>>>> {
    let prime = BigInt::from(p);
    if poly.len() < 2 {
        return Err(PadicError::NotEisenstein("degree must be at least 1".into()));
    }
    let mut coeffs = Vec::with_capacity(poly.len());
    for (k, c) in poly.into_iter().enumerate() {
        if c.len() > f {
            return Err(PadicError::NotEisenstein(format!(
                "coefficient {k} has more than {f} coordinates"
            )));
        }
        let mut c = c;
        c.resize(f, BigInt::zero());
        coeffs.push(c);
    }
    let e = coeffs.len() - 1;
    let lead = &coeffs[e];
    if !lead[0].is_one() || lead.iter().skip(1).any(|x| !x.is_zero()) {
        return Err(PadicError::NotEisenstein("polynomial is not monic".into()));
    }
    if e == 1 {
        return Ok(None);
    }
    let divisible = |c: &[BigInt]| c.iter().all(|x| (x % &prime).is_zero());
    for (k, c) in coeffs.iter().enumerate().take(e).skip(1) {
        if !divisible(c) {
            return Err(PadicError::NotEisenstein(format!(
                "coefficient {k} is not divisible by p"
            )));
        }
    }
    let a0 = &coeffs[0];
    let p2 = &prime * &prime;
    if !divisible(a0) || a0.iter().all(|x| (x % &p2).is_zero()) {
        return Err(PadicError::NotEisenstein(
            "constant term must have valuation exactly 1".into(),
        ));
    }
    Ok(Some(coeffs))
}

fn ceil_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b) + if a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn sat_add(a: i64, b: i64) -> i64 {
    if a == EXACT || b == EXACT {
        EXACT
    } else {
        a.saturating_add(b)
    }
}

/// Precision-tracked element of a [`LocalField`].
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<LocalField>,
    coeffs: Vec<BigInt>,
    shift: i64,
    prec: i64,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FieldElement {
    fn build(field: &Arc<LocalField>, mut coeffs: Vec<BigInt>, shift: i64, prec: i64) -> Self {
        let e = field.e as i64;
        let f = field.f;
        if prec != EXACT {
            for (idx, c) in coeffs.iter_mut().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let j = (idx / f) as i64;
                let k = ceil_div(prec - e * shift - j, e);
                if k <= 0 {
                    c.set_zero();
                } else {
                    *c = c.mod_floor(&field.pow_p(k));
                }
            }
        }
        let m = coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| field.vp(c))
            .min();
        match m {
            None => FieldElement {
                field: field.clone(),
                coeffs,
                shift: 0,
                prec,
            },
            Some(m) => {
                if m > 0 {
                    let d = field.pow_p(m);
                    for c in coeffs.iter_mut() {
                        *c = &*c / &d;
                    }
                }
                FieldElement {
                    field: field.clone(),
                    coeffs,
                    shift: shift + m,
                    prec,
                }
            }
        }
    }

    /// Element `p^shift · Σ coeffs[j·f + i] α^i π^j` known modulo `π^prec`.
    pub fn from_coeffs(field: &Arc<LocalField>, coeffs: Vec<BigInt>, shift: i64, prec: i64) -> Self {
        assert_eq!(coeffs.len(), field.degree(), "coefficient vector length");
        Self::build(field, coeffs, shift, prec)
    }

    pub fn zero(field: &Arc<LocalField>) -> Self {
        Self::zero_to(field, EXACT)
    }

    /// Zero known modulo `π^prec`.
    pub fn zero_to(field: &Arc<LocalField>, prec: i64) -> Self {
        FieldElement {
            field: field.clone(),
            coeffs: vec![BigInt::zero(); field.degree()],
            shift: 0,
            prec,
        }
    }

    pub fn one(field: &Arc<LocalField>) -> Self {
        Self::from_int(field, 1)
    }

    pub fn from_int(field: &Arc<LocalField>, n: impl Into<BigInt>) -> Self {
        let mut coeffs = vec![BigInt::zero(); field.degree()];
        coeffs[0] = n.into();
        Self::build(field, coeffs, 0, EXACT)
    }

    /// A rational number; inexact when the denominator is not a power of p.
    pub fn from_rational(field: &Arc<LocalField>, r: &BigRational) -> Self {
        let num = Self::from_int(field, r.numer().clone());
        if r.denom().is_one() {
            return num;
        }
        let mut den = r.denom().clone();
        let mut k = 0;
        while (&den % &field.prime).is_zero() {
            den /= &field.prime;
            k += 1;
        }
        let out = num.mul_p_power(-k);
        if den.is_one() {
            return out;
        }
        if den == -BigInt::one() {
            return -&out;
        }
        let target = out.val_pi().map_or(0, |v| v) + field.default_abs_precision();
        &out * &Self::int_inverse(field, &den, target)
    }

    /// The inverse of an integer prime to p, known modulo `π^prec`.
    pub(crate) fn int_inverse(field: &Arc<LocalField>, m: &BigInt, prec: i64) -> Self {
        let e = field.e as i64;
        let k = ceil_div(prec.max(1), e);
        let modulus = field.pow_p(k);
        let g = m.extended_gcd(&modulus);
        debug_assert!(g.gcd.abs().is_one());
        let inv = if g.gcd.is_negative() { -g.x } else { g.x };
        let mut coeffs = vec![BigInt::zero(); field.degree()];
        coeffs[0] = inv;
        Self::build(field, coeffs, 0, prec)
    }

    /// The generator α of the unramified step.
    pub fn alpha(field: &Arc<LocalField>) -> Self {
        let mut coeffs = vec![BigInt::zero(); field.degree()];
        if field.f > 1 {
            coeffs[1] = BigInt::one();
        } else {
            coeffs[0] = -field.unram[0].clone();
        }
        Self::build(field, coeffs, 0, EXACT)
    }

    pub fn uniformizer(field: &Arc<LocalField>) -> Self {
        if field.e == 1 {
            return Self::from_int(field, field.prime.clone());
        }
        let mut coeffs = vec![BigInt::zero(); field.degree()];
        coeffs[field.f] = BigInt::one();
        Self::build(field, coeffs, 0, EXACT)
    }

    /// Reads little-endian base-p digits per coordinate; `None` precision means exact.
    pub fn from_digits(
        field: &Arc<LocalField>,
        digits: &[Vec<u64>],
        shift: i64,
        known_precision: Option<i64>,
    ) -> Result<Self> {
        if digits.len() > field.degree() {
            return Err(PadicError::InvalidParameters(format!(
                "{} coordinates for a degree {} field",
                digits.len(),
                field.degree()
            )));
        }
        let mut coeffs = vec![BigInt::zero(); field.degree()];
        for (c, ds) in coeffs.iter_mut().zip(digits) {
            for (k, &d) in ds.iter().enumerate().rev() {
                if d >= field.p {
                    return Err(PadicError::InvalidParameters(format!(
                        "digit {d} at position {k} is not below p = {}",
                        field.p
                    )));
                }
                *c = &*c * &field.prime + BigInt::from(d);
            }
        }
        Ok(Self::build(field, coeffs, shift, known_precision.unwrap_or(EXACT)))
    }

    /// Little-endian digits per coordinate, the valuation shift and the known
    /// absolute precision. Exact elements with negative coordinates are
    /// expanded at the field's default precision.
    pub fn to_digits(&self) -> (Vec<Vec<u64>>, i64, Option<i64>) {
        let elt = if self.is_exact() && self.coeffs.iter().any(Signed::is_negative) {
            self.truncated(sat_add(
                self.field.default_abs_precision(),
                self.field.e as i64 * self.shift,
            ))
        } else {
            self.clone()
        };
        let e = elt.field.e as i64;
        let f = elt.field.f;
        let digits = elt
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let mut out = Vec::new();
                let mut x = c.clone();
                while !x.is_zero() {
                    let (q, r) = x.div_rem(&elt.field.prime);
                    out.push(r.to_u64().unwrap());
                    x = q;
                }
                if !elt.is_exact() {
                    let j = (idx / f) as i64;
                    let k = ceil_div(elt.prec - e * elt.shift - j, e).max(0) as usize;
                    out.resize(k.max(out.len()), 0);
                }
                out
            })
            .collect();
        let prec = if elt.is_exact() { None } else { Some(elt.prec) };
        (digits, elt.shift, prec)
    }

    pub fn field(&self) -> &Arc<LocalField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn is_exact(&self) -> bool {
        self.prec == EXACT
    }

    /// Exact zero, or zero to the known precision.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Absolute precision in units of the uniformizer; `None` when exact.
    pub fn precision(&self) -> Option<i64> {
        (!self.is_exact()).then_some(self.prec)
    }

    /// Known digits beyond the valuation, in units of the uniformizer.
    pub fn relative_precision(&self) -> Option<i64> {
        match (self.precision(), self.val_pi()) {
            (Some(p), Some(v)) => Some(p - v),
            (Some(_), None) => Some(0),
            _ => None,
        }
    }

    /// Valuation in units of the uniformizer; `None` for zero.
    pub fn val_pi(&self) -> Option<i64> {
        let e = self.field.e as i64;
        let f = self.field.f;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(idx, c)| e * self.field.vp(c) + (idx / f) as i64)
            .min()
            .map(|v| v + e * self.shift)
    }

    /// Normalized valuation with `v(p) = 1`.
    pub fn valuation(&self) -> Result<Ratio<i64>> {
        match self.val_pi() {
            Some(v) => Ok(Ratio::new(v, self.field.e as i64)),
            None if self.is_exact() => Err(PadicError::InfiniteValuation),
            None => Err(PadicError::PrecisionExhausted),
        }
    }

    /// A lower bound for the valuation in units of the uniformizer.
    fn val_floor(&self) -> i64 {
        self.val_pi().unwrap_or(self.prec)
    }

    pub fn is_unit(&self) -> bool {
        self.val_pi() == Some(0)
    }

    /// A square root for odd p, or `None` when the element is not a square.
    pub fn sqrt(&self) -> Result<Option<Self>> {
        let field = &self.field;
        if field.p == 2 {
            return Err(PadicError::Unsupported("square roots for p = 2".into()));
        }
        let v = match self.val_pi() {
            Some(v) => v,
            None if self.is_exact() => return Ok(Some(self.clone())),
            None => return Err(PadicError::PrecisionExhausted),
        };
        if v % 2 != 0 {
            return Ok(None);
        }
        let pi_half = Self::uniformizer(field).pow(v.unsigned_abs() / 2);
        let u = if v >= 0 {
            self.div(&pi_half.pow(2))?
        } else {
            self * &pi_half.pow(2)
        };
        let f = field.f;
        let q = field.residue_size().to_u64().unwrap_or(u64::MAX);
        let mut root = None;
        for idx in 0..q {
            let mut digits = vec![Vec::new(); field.degree()];
            let mut x = idx;
            for d in digits.iter_mut().take(f) {
                d.push(x % field.p);
                x /= field.p;
            }
            let r = Self::from_digits(field, &digits, 0, None)?;
            if (&(&r * &r) - &u).truncated(1).is_zero() && !r.is_zero() {
                root = Some(r);
                break;
            }
        }
        let Some(mut x) = root else {
            return Ok(None);
        };
        let two = BigInt::from(2);
        let target = u.precision().unwrap_or(field.default_abs_precision());
        let mut cur = 1;
        while cur < target {
            cur = (2 * cur).min(target);
            let xt = x.truncated(cur);
            x = (&xt.exactified() + &u.truncated(cur).exactified().div(&xt.exactified())?)
                .div_int(&two)?
                .truncated(cur)
                .exactified();
        }
        let x = x.truncated(target);
        if !(&x * &x).agrees_with(&u) {
            return Ok(None);
        }
        Ok(Some(if v >= 0 { &x * &pi_half } else { x.div(&pi_half)? }))
    }

    /// The same element known only modulo `π^prec`.
    pub fn truncated(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        Self::build(&self.field, self.coeffs.clone(), self.shift, prec)
    }

    /// Forgets the precision, keeping the stored representative.
    pub fn exactified(&self) -> Self {
        FieldElement {
            prec: EXACT,
            ..self.clone()
        }
    }

    /// True when the two elements agree to the smaller of their precisions.
    pub fn agrees_with(&self, other: &Self) -> bool {
        (self - other).is_zero()
    }

    fn assert_field(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.field, &other.field) || self.field.same_as(&other.field),
            "elements belong to different fields"
        );
    }

    pub fn same_field(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.field, &other.field) || self.field.same_as(&other.field)
    }

    /// Multiplication by `p^k`.
    pub fn mul_p_power(&self, k: i64) -> Self {
        let e = self.field.e as i64;
        let prec = if self.is_exact() { EXACT } else { self.prec + e * k };
        if self.is_zero() {
            return Self::zero_to(&self.field, prec);
        }
        FieldElement {
            field: self.field.clone(),
            coeffs: self.coeffs.clone(),
            shift: self.shift + k,
            prec,
        }
    }

    fn add_impl(&self, other: &Self, negate: bool) -> Self {
        self.assert_field(other);
        let prec = self.prec.min(other.prec);
        if other.is_zero() {
            return self.truncated(prec).with_prec_floor(prec);
        }
        if self.is_zero() {
            let o = if negate { -other } else { other.clone() };
            return o.truncated(prec).with_prec_floor(prec);
        }
        let s = self.shift.min(other.shift);
        let sa = self.field.pow_p(self.shift - s);
        let sb = self.field.pow_p(other.shift - s);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                let x = a * &sa;
                let y = b * &sb;
                if negate {
                    x - y
                } else {
                    x + y
                }
            })
            .collect();
        Self::build(&self.field, coeffs, s, prec)
    }

    fn with_prec_floor(mut self, prec: i64) -> Self {
        if self.prec > prec {
            self.prec = prec;
        }
        self
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.assert_field(other);
        let prec = sat_add(self.prec, other.val_floor()).min(sat_add(other.prec, self.val_floor()));
        if self.is_zero() || other.is_zero() {
            return Self::zero_to(&self.field, prec);
        }
        let coeffs = self.field.mul_coeffs(&self.coeffs, &other.coeffs);
        Self::build(&self.field, coeffs, self.shift + other.shift, prec)
    }

    pub fn pow(&self, n: u64) -> Self {
        self.pow_big(&BigInt::from(n))
    }

    pub fn pow_big(&self, n: &BigInt) -> Self {
        assert!(!n.is_negative(), "negative exponent");
        let mut result = Self::one(&self.field);
        let bits = n.bits();
        for i in (0..bits).rev() {
            result = &result * &result;
            if n.bit(i) {
                result = &result * self;
            }
        }
        result
    }

    pub fn inverse(&self) -> Result<Self> {
        self.inverse_rel(None)
    }

    /// Inverse; exact inputs are inverted to `rel` digits relative precision
    /// (in units of the uniformizer), by default the field precision.
    pub fn inverse_rel(&self, rel: Option<i64>) -> Result<Self> {
        if self.is_zero() {
            return Err(if self.is_exact() {
                PadicError::DivisionByZero
            } else {
                PadicError::PrecisionExhausted
            });
        }
        let field = &self.field;
        let e = field.e as i64;
        let v = self.val_pi().unwrap();
        let k = v - e * self.shift;
        let a0 = FieldElement {
            field: field.clone(),
            coeffs: self.coeffs.clone(),
            shift: 0,
            prec: if self.is_exact() { EXACT } else { self.prec - e * self.shift },
        };
        let pik = Self::uniformizer(field).pow((e - k) as u64);
        let u = if k > 0 { (&a0 * &pik).mul_p_power(-1) } else { a0 };
        let target = if u.is_exact() {
            rel.unwrap_or(field.default_abs_precision())
        } else {
            u.prec
        };
        let mut r = unit_inverse(&u, target);
        if k > 0 {
            r = (&r * &pik).mul_p_power(-1);
        }
        Ok(r.mul_p_power(-self.shift))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inverse()?)
    }

    /// Division by a nonzero integer.
    pub fn div_int(&self, m: &BigInt) -> Result<Self> {
        if m.is_zero() {
            return Err(PadicError::DivisionByZero);
        }
        let field = &self.field;
        let mut m = m.clone();
        let mut k = 0;
        while (&m % &field.prime).is_zero() {
            m /= &field.prime;
            k += 1;
        }
        let out = self.mul_p_power(-k);
        if m.is_one() {
            return Ok(out);
        }
        if out.is_zero() && out.is_exact() {
            return Ok(out);
        }
        let target = if out.is_exact() {
            out.val_floor() + field.default_abs_precision()
        } else {
            out.prec
        };
        let inv = Self::int_inverse(field, &m, target - out.val_floor().min(target));
        Ok(&out * &inv)
    }

    /// The Teichmüller representative: the `(q−1)`-th root of unity congruent
    /// to `self` modulo the maximal ideal, at the field's precision.
    pub fn teichmuller(&self) -> Result<Self> {
        match self.val_pi() {
            Some(0) => {}
            None if !self.is_exact() => return Err(PadicError::PrecisionExhausted),
            _ => return Err(PadicError::NotUnit),
        }
        let field = &self.field;
        let target = field.default_abs_precision();
        let q = field.residue_size();
        let mut y = self.truncated(1).exactified().truncated(target);
        for _ in 0..field.precision + 2 {
            let next = y.pow_big(&q);
            if next.coeffs == y.coeffs && next.shift == y.shift {
                break;
            }
            y = next;
        }
        Ok(y)
    }

    /// The Iwasawa branch of the p-adic logarithm (`log p = 0`).
    pub fn iwasawa_log(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(if self.is_exact() {
                PadicError::LogOfZero
            } else {
                PadicError::PrecisionExhausted
            });
        }
        let field = self.field.clone();
        let e = field.e as i64;
        let p = field.p;
        let v = self.val_pi().unwrap();
        let y = self.pow(e as u64).mul_p_power(-v);
        let q1 = field.residue_size() - 1;
        let one = Self::one(&field);
        let mut z = y.pow_big(&q1);
        let mut t = &z - &one;
        let mut k = 0i64;
        while let Some(vt) = t.val_pi() {
            if vt * (p as i64 - 1) > e {
                break;
            }
            z = z.pow(p);
            t = &z - &one;
            k += 1;
        }
        let scale = &q1 * BigInt::from(e);
        let loss = e * (k + field.vp(&scale));
        let target = if t.is_exact() {
            field.default_abs_precision() + loss
        } else {
            t.prec
        };
        let series = if t.is_zero() {
            t.clone()
        } else {
            log_series(&t, target)
        };
        series.mul_p_power(-k).div_int(&scale)
    }

    /// The exponential series, defined for `v(x) > 1/(p−1)`.
    pub fn exp(&self) -> Result<Self> {
        let field = self.field.clone();
        let e = field.e as i64;
        let p = field.p as i64;
        if self.is_zero() {
            return Ok(Self::one(&field).truncated(self.prec));
        }
        let v = self.val_pi().unwrap();
        if v * (p - 1) <= e {
            return Err(PadicError::Unsupported(
                "exponential outside its disc of convergence".into(),
            ));
        }
        let target = if self.is_exact() {
            field.default_abs_precision()
        } else {
            self.prec
        };
        let x = self.truncated(target);
        let mut sum = Self::one(&field).truncated(target);
        let mut power = Self::one(&field);
        let mut fact = BigInt::one();
        let mut n: i64 = 0;
        loop {
            n += 1;
            let bound = n * v - ceil_div(e * (n - 1), p - 1);
            if n > 1 && bound >= target {
                break;
            }
            fact *= n;
            let a = field.vp(&fact);
            power = (&power * &x).truncated(target + e * a);
            sum = &sum + &power.div_int(&fact)?;
        }
        Ok(sum)
    }

    /// The arithmetic Frobenius, acting on the unramified step and fixing π.
    pub fn frobenius(&self) -> Result<Self> {
        let field = self.field.clone();
        if !field.frobenius_supported() {
            return Err(PadicError::Unsupported(
                "Frobenius needs an Eisenstein polynomial over Z_p".into(),
            ));
        }
        if field.f == 1 || self.is_zero() {
            return Ok(self.clone());
        }
        let (e, f) = (field.e as i64, field.f);
        let rel = if self.is_exact() {
            field.default_abs_precision()
        } else {
            self.prec - e * self.shift
        };
        let digits = ceil_div(rel, e).max(1);
        let (sprec, sa) = sigma_alpha(&field, digits);
        let modulus = field.pow_p(sprec);
        let mut pows = vec![vec![BigInt::zero(); f]];
        pows[0][0] = BigInt::one();
        for i in 1..f {
            let mut next = field.mul_alpha(&pows[i - 1], &sa);
            for c in next.iter_mut() {
                *c = c.mod_floor(&modulus);
            }
            pows.push(next);
        }
        let mut coeffs = vec![BigInt::zero(); field.degree()];
        for j in 0..field.e {
            for i in 0..f {
                let c = &self.coeffs[j * f + i];
                if c.is_zero() {
                    continue;
                }
                for (l, x) in pows[i].iter().enumerate() {
                    coeffs[j * f + l] += c * x;
                }
            }
        }
        let prec = self.prec.min(e * self.shift + e * sprec);
        Ok(Self::build(&field, coeffs, self.shift, prec))
    }

    /// Coordinates of the `π^j` slot as an element of the unramified subfield.
    fn slot(&self, j: usize, sub: &Arc<LocalField>) -> Self {
        let f = self.field.f;
        let e = self.field.e as i64;
        let coeffs = self.coeffs[j * f..(j + 1) * f].to_vec();
        let prec = if self.is_exact() {
            EXACT
        } else {
            ceil_div(self.prec - j as i64, e)
        };
        Self::build(sub, coeffs, self.shift, prec)
    }

    fn into_base(self, base: &Arc<LocalField>) -> Result<Self> {
        if self.coeffs.iter().skip(1).any(|c| !c.is_zero()) {
            return Err(PadicError::Unsupported(
                "value does not lie in the base field".into(),
            ));
        }
        Ok(Self::build(base, vec![self.coeffs[0].clone()], self.shift, self.prec))
    }

    fn multiplication_matrix(&self, sub: &Arc<LocalField>) -> Vec<Vec<Self>> {
        let e = self.field.e;
        let pi = Self::uniformizer(&self.field);
        let mut col = self.clone();
        let mut cols = Vec::with_capacity(e);
        for _ in 0..e {
            cols.push(col.clone());
            col = &col * &pi;
        }
        (0..e)
            .map(|r| (0..e).map(|c| cols[c].slot(r, sub)).collect())
            .collect()
    }

    /// Sum of conjugates down to Q_p.
    pub fn trace_to_base(&self) -> Result<Self> {
        let sub = self.field.unramified_subfield();
        let tu = if self.field.e == 1 {
            self.slot(0, &sub)
        } else {
            let m = self.multiplication_matrix(&sub);
            let mut acc = Self::zero(&sub);
            for (r, row) in m.iter().enumerate() {
                acc = &acc + &row[r];
            }
            acc
        };
        let mut acc = tu.clone();
        let mut cur = tu;
        for _ in 1..sub.f {
            cur = cur.frobenius()?;
            acc = &acc + &cur;
        }
        acc.into_base(&self.field.base_field())
    }

    /// Product of conjugates down to Q_p.
    pub fn norm_to_base(&self) -> Result<Self> {
        let sub = self.field.unramified_subfield();
        let nu = if self.field.e == 1 {
            self.slot(0, &sub)
        } else {
            small_det(self.multiplication_matrix(&sub))?
        };
        let mut acc = nu.clone();
        let mut cur = nu;
        for _ in 1..sub.f {
            cur = cur.frobenius()?;
            acc = &acc * &cur;
        }
        acc.into_base(&self.field.base_field())
    }

    /// Image in a field of the same residue characteristic containing this one.
    pub fn embed(&self, map: &FieldEmbedding) -> Result<Self> {
        map.apply(self)
    }
}

fn unit_inverse(u: &FieldElement, target: i64) -> FieldElement {
    let field = &u.field;
    let q2 = field.residue_size() - 2;
    let mut x = u.truncated(1).pow_big(&q2).exactified();
    let ue = u.exactified();
    let two = FieldElement::from_int(field, 2);
    let mut cur = 1;
    while cur < target {
        cur = (cur * 2).min(target);
        let ux = &ue.truncated(cur) * &x;
        x = (&x * &(&two - &ux)).truncated(cur).exactified();
    }
    x.truncated(target.min(u.prec))
}

fn log_series(t: &FieldElement, target: i64) -> FieldElement {
    let field = t.field.clone();
    let e = field.e as i64;
    let p = field.p;
    let vt = t.val_pi().unwrap();
    let lnp = (p as f64).ln();
    let h = |n: i64| n as f64 * vt as f64 - e as f64 * (n as f64).ln() / lnp;
    let n0 = ((e as f64 / (vt as f64 * lnp)).ceil() as i64).max(1);
    let mut n_stop = 1i64;
    while !(n_stop >= n0 && h(n_stop) - 1e-9 >= target as f64) {
        n_stop += 1;
    }
    let mut extra = 0i64;
    let mut pk = 1i64;
    while pk.saturating_mul(p as i64) < n_stop {
        pk *= p as i64;
        extra += 1;
    }
    let cap = target + e * (extra + 1);
    let t = t.truncated(cap);
    let mut sum = FieldElement::zero_to(&field, target);
    let mut power = FieldElement::one(&field);
    for n in 1..n_stop {
        power = (&power * &t).truncated(cap);
        let mut term = power.div_int(&BigInt::from(n)).expect("nonzero");
        if n % 2 == 0 {
            term = -&term;
        }
        sum = &sum + &term;
    }
    sum
}

fn small_det(mut m: Vec<Vec<FieldElement>>) -> Result<FieldElement> {
    let n = m.len();
    let field = m[0][0].field.clone();
    let mut det = FieldElement::one(&field);
    for c in 0..n {
        let mut best: Option<(usize, i64)> = None;
        let mut ambiguous = false;
        for (r, row) in m.iter().enumerate().skip(c) {
            match row[c].val_pi() {
                Some(v) if best.is_none_or(|(_, b)| v < b) => best = Some((r, v)),
                None if !row[c].is_exact() => ambiguous = true,
                _ => {}
            }
        }
        let Some((r, _)) = best else {
            return if ambiguous {
                Err(PadicError::PrecisionExhausted)
            } else {
                Ok(FieldElement::zero(&field))
            };
        };
        if r != c {
            m.swap(r, c);
            det = -&det;
        }
        let piv = m[c][c].clone();
        let inv = piv.inverse()?;
        det = &det * &piv;
        for r in c + 1..n {
            let factor = &m[r][c] * &inv;
            if factor.is_zero() && factor.is_exact() {
                continue;
            }
            for k in c..n {
                let t = &factor * &m[c][k];
                m[r][k] = &m[r][k] - &t;
            }
        }
    }
    Ok(det)
}

fn sigma_alpha(field: &Arc<LocalField>, digits: i64) -> (i64, Vec<BigInt>) {
    let cap = 4 * field.precision + 32;
    if digits <= cap {
        if let Some(hit) = field
            .sigma
            .get_or_init(|| compute_sigma_alpha(field, cap).ok())
            .clone()
        {
            return hit;
        }
    }
    compute_sigma_alpha(field, digits).expect("Frobenius image of the generator")
}

fn compute_sigma_alpha(field: &Arc<LocalField>, digits: i64) -> Result<(i64, Vec<BigInt>)> {
    let sub = field.unramified_subfield();
    let start = FieldElement::alpha(&sub).pow(field.p);
    let root = hensel_root(&field.unram, start, digits)?;
    let mut coeffs = root.coeffs.clone();
    if root.shift > 0 {
        let s = sub.pow_p(root.shift);
        for c in coeffs.iter_mut() {
            *c *= &s;
        }
    }
    Ok((digits, coeffs))
}

fn eval_poly(poly: &[BigInt], x: &FieldElement) -> FieldElement {
    let field = &x.field;
    let mut acc = FieldElement::zero(field);
    for c in poly.iter().rev() {
        acc = &(&acc * x) + &FieldElement::from_int(field, c.clone());
    }
    acc
}

/// Newton lift of a simple root known modulo p, in an unramified field.
fn hensel_root(poly: &[BigInt], start: FieldElement, digits: i64) -> Result<FieldElement> {
    let deriv: Vec<BigInt> = poly
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect();
    let mut r = start.truncated(1).exactified();
    let d0 = eval_poly(&deriv, &r.truncated(1));
    if !d0.is_unit() {
        return Err(PadicError::Unsupported("root is not simple".into()));
    }
    let mut cur = 1;
    while cur < digits {
        cur = (cur * 2).min(digits);
        let rt = r.truncated(cur);
        let g = eval_poly(poly, &rt);
        let dinv = eval_poly(&deriv, &rt).inverse()?;
        r = (&rt - &(&g * &dinv)).truncated(cur).exactified();
    }
    Ok(r.truncated(digits))
}

/// An embedding of an unramified field into a field with larger unramified step.
#[derive(Debug, Clone)]
pub struct FieldEmbedding {
    source: Arc<LocalField>,
    target: Arc<LocalField>,
    image: Option<(i64, Vec<BigInt>)>,
}

impl FieldEmbedding {
    pub fn new(source: &Arc<LocalField>, target: &Arc<LocalField>) -> Result<Self> {
        if source.p != target.p {
            return Err(PadicError::FieldMismatch);
        }
        let identity = source.same_as(target) || (source.e == 1 && source.f == target.f);
        if identity || source.f == 1 {
            if source.e != 1 && !source.same_as(target) {
                return Err(PadicError::FieldMismatch);
            }
            return Ok(FieldEmbedding {
                source: source.clone(),
                target: target.clone(),
                image: None,
            });
        }
        if source.e != 1 || !target.f.is_multiple_of(source.f) {
            return Err(PadicError::FieldMismatch);
        }
        let sub = target.unramified_subfield();
        let root = residue_root(&source.unram, &sub)?;
        let digits = 2 * source.precision.max(target.precision) + 16;
        let lifted = hensel_root(&source.unram, root, digits)?;
        let mut coeffs = lifted.coeffs.clone();
        let s = sub.pow_p(lifted.shift.max(0));
        for c in coeffs.iter_mut() {
            *c *= &s;
        }
        Ok(FieldEmbedding {
            source: source.clone(),
            target: target.clone(),
            image: Some((digits, coeffs)),
        })
    }

    pub fn source(&self) -> &Arc<LocalField> {
        &self.source
    }

    pub fn target(&self) -> &Arc<LocalField> {
        &self.target
    }

    pub fn apply(&self, x: &FieldElement) -> Result<FieldElement> {
        if !x.field.same_as(&self.source) {
            return Err(PadicError::FieldMismatch);
        }
        if self.source.same_as(&self.target) {
            return Ok(FieldElement {
                field: self.target.clone(),
                ..x.clone()
            });
        }
        let target = &self.target;
        let et = target.e as i64;
        let prec = if x.is_exact() { EXACT } else { x.prec * et };
        let mut coeffs = vec![BigInt::zero(); target.degree()];
        match &self.image {
            None if self.source.f == 1 => coeffs[0] = x.coeffs[0].clone(),
            None => coeffs[..target.f].clone_from_slice(&x.coeffs),
            Some((digits, r)) => {
                let modulus = target.pow_p(*digits);
                let mut pw = vec![BigInt::zero(); target.f];
                pw[0] = BigInt::one();
                for (i, c) in x.coeffs.iter().enumerate() {
                    if i > 0 {
                        pw = target.mul_alpha(&pw, r);
                        for v in pw.iter_mut() {
                            *v = v.mod_floor(&modulus);
                        }
                    }
                    for (l, v) in pw.iter().enumerate() {
                        coeffs[l] += c * v;
                    }
                }
                let prec = prec.min(et * (x.shift + digits));
                return Ok(FieldElement::build(target, coeffs, x.shift, prec));
            }
        }
        Ok(FieldElement::build(target, coeffs, x.shift, prec))
    }
}

fn residue_root(poly: &[BigInt], sub: &Arc<LocalField>) -> Result<FieldElement> {
    let f = sub.f;
    let p = sub.p;
    let total = num_traits::pow(BigInt::from(p), f);
    let mut idx = BigInt::zero();
    while idx < total {
        let mut coeffs = vec![BigInt::zero(); f];
        let mut x = idx.clone();
        for c in coeffs.iter_mut() {
            let (q, r) = x.div_rem(&sub.prime);
            *c = r;
            x = q;
        }
        let cand = FieldElement::build(sub, coeffs, 0, 1);
        if eval_poly(poly, &cand).is_zero() {
            return Ok(cand.exactified());
        }
        idx += 1;
    }
    Err(PadicError::FieldMismatch)
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &'a FieldElement) -> FieldElement {
        self.add_impl(rhs, false)
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &'a FieldElement) -> FieldElement {
        self.add_impl(rhs, true)
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &'a FieldElement) -> FieldElement {
        self.mul_impl(rhs)
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let coeffs = self.coeffs.iter().map(|c| -c).collect();
        FieldElement::build(&self.field, coeffs, self.shift, self.prec)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        &self + &rhs
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        &self - &rhs
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        &self * &rhs
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

fn series_string(c: &BigInt, shift: i64, p: &BigInt, ndigits: Option<i64>) -> String {
    let mut terms = Vec::new();
    let mut x = c.clone();
    let mut k = shift;
    let mut count = 0;
    while !x.is_zero() && ndigits.is_none_or(|n| count < n) {
        let (q, r) = x.div_rem(p);
        if !r.is_zero() {
            terms.push(match k {
                0 => format!("{r}"),
                1 => format!("{r}*{p}"),
                _ => format!("{r}*{p}^{k}"),
            });
        }
        x = q;
        k += 1;
        count += 1;
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = &self.field;
        let (e, f) = (field.e, field.f);
        let p = &field.prime;
        let exact_negative = self.is_exact() && self.coeffs.iter().any(Signed::is_negative);
        let mut parts = Vec::new();
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let body = if exact_negative {
                if self.shift == 0 {
                    format!("{c}")
                } else {
                    format!("{c}*{p}^{}", self.shift)
                }
            } else {
                series_string(c, self.shift, p, None)
            };
            let (i, j) = (idx % f, idx / f);
            let mut basis = String::new();
            if i > 0 {
                basis.push_str(&if i == 1 { "*a".to_string() } else { format!("*a^{i}") });
            }
            if j > 0 {
                basis.push_str(&if j == 1 { "*pi".to_string() } else { format!("*pi^{j}") });
            }
            if basis.is_empty() {
                parts.push(body);
            } else {
                parts.push(format!("({body}){basis}"));
            }
        }
        let mut s = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        if !self.is_exact() {
            if e == 1 {
                s.push_str(&format!(" + O({p}^{})", self.prec));
            } else {
                s.push_str(&format!(" + O(pi^{})", self.prec));
            }
        }
        write!(out, "{s}")
    }
}

mod fp {
    //! Polynomials over F_p, coefficients low to high.

    fn trim(a: &mut Vec<u64>) {
        while a.len() > 1 && *a.last().unwrap() == 0 {
            a.pop();
        }
    }

    fn inv(a: u64, p: u64) -> u64 {
        pow(a, p - 2, p)
    }

    fn pow(mut a: u64, mut n: u64, p: u64) -> u64 {
        let mut r = 1u64;
        a %= p;
        while n > 0 {
            if n & 1 == 1 {
                r = (r as u128 * a as u128 % p as u128) as u64;
            }
            a = (a as u128 * a as u128 % p as u128) as u64;
            n >>= 1;
        }
        r
    }

    fn rem(a: &[u64], g: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        trim(&mut a);
        let dg = g.len() - 1;
        let lead = inv(g[dg], p);
        while a.len() > dg && !(a.len() == 1 && a[0] == 0) {
            let da = a.len() - 1;
            let c = (a[da] as u128 * lead as u128 % p as u128) as u64;
            for i in 0..=dg {
                let sub = (c as u128 * g[i] as u128 % p as u128) as u64;
                a[da - dg + i] = (a[da - dg + i] + p - sub) % p;
            }
            a.pop();
            trim(&mut a);
        }
        a
    }

    fn mulmod(a: &[u64], b: &[u64], g: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = ((out[i + j] as u128 + x as u128 * y as u128) % p as u128) as u64;
            }
        }
        rem(&out, g, p)
    }

    fn powmod(a: &[u64], mut n: u64, g: &[u64], p: u64) -> Vec<u64> {
        let mut r = vec![1u64];
        let mut b = rem(a, g, p);
        while n > 0 {
            if n & 1 == 1 {
                r = mulmod(&r, &b, g, p);
            }
            b = mulmod(&b, &b, g, p);
            n >>= 1;
        }
        r
    }

    fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !(b.len() == 1 && b[0] == 0) {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    fn frobenius_iterate(k: usize, g: &[u64], p: u64) -> Vec<u64> {
        let mut h = vec![0u64, 1];
        for _ in 0..k {
            h = powmod(&h, p, g, p);
        }
        h
    }

    fn sub_x(h: &[u64], p: u64) -> Vec<u64> {
        let mut h = h.to_vec();
        h.resize(h.len().max(2), 0);
        h[1] = (h[1] + p - 1) % p;
        trim(&mut h);
        h
    }

    /// Rabin's irreducibility test.
    pub fn is_irreducible(g: &[u64], p: u64) -> bool {
        let n = g.len() - 1;
        if n == 0 || g[n].is_multiple_of(p) {
            return false;
        }
        let full = sub_x(&frobenius_iterate(n, g, p), p);
        if !(full.len() == 1 && full[0] == 0) {
            return false;
        }
        let mut m = n;
        let mut primes = Vec::new();
        let mut d = 2;
        while d * d <= m {
            if m.is_multiple_of(d) {
                primes.push(d);
                while m.is_multiple_of(d) {
                    m /= d;
                }
            }
            d += 1;
        }
        if m > 1 {
            primes.push(m);
        }
        primes.iter().all(|&r| {
            let h = sub_x(&frobenius_iterate(n / r, g, p), p);
            let d = gcd(g, &h, p);
            d.len() == 1
        })
    }
}
