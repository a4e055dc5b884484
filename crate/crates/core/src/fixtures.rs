//! JSON fixtures: the Galois group, the representation, the unit module with
//! its p-adic data, and candidate refinements.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::galois::{
    equivariant_homs, fixed_dimension, rat_int, rat_mul, validate_group, FiniteGroup, Representation,
};
use crate::linalg::{PMatrix, Span, Vector};
use crate::padic::{FieldElement, FieldEmbedding, LocalField, PadicError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DigitList {
    Flat(Vec<u64>),
    Nested(Vec<Vec<u64>>),
}

/// An integer, a rational `[num, den]`, or base-p digits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementJson {
    Int(i64),
    Rational([i64; 2]),
    Digits {
        digits: DigitList,
        #[serde(default, skip_serializing_if = "is_zero_i64")]
        shift: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        known_precision: Option<i64>,
    },
}

fn is_zero_i64(x: &i64) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub unramified_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffFieldSpec {
    pub unramified_degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eisenstein: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    pub order: usize,
    pub mult: Vec<Vec<usize>>,
    pub frobenius: usize,
    pub conjugation: usize,
    #[serde(rename = "Gp")]
    pub gp: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WJson {
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<ElementJson>>>,
    #[serde(default)]
    pub motivic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitsJson {
    pub rank_units: usize,
    pub rank_total: usize,
    pub action: Vec<Vec<Vec<ElementJson>>>,
    pub ord_p: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<Vec<ElementJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logs: Option<Vec<ElementJson>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementJson {
    pub name: String,
    pub basis: Vec<Vec<ElementJson>>,
    #[serde(default)]
    pub motivic: bool,
}

/// `W⁺(s, t) = span(base + s·s_dir + t·t_dir)`, and `span(s_dir + t·t_dir)` at `s = ∞`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub base: Vec<ElementJson>,
    pub s_dir: Vec<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_dir: Option<Vec<ElementJson>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmJson {
    pub e1: Vec<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_bar: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_psi: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_psi_bar: Option<ElementJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjointCmJson {
    pub w1: Vec<ElementJson>,
    pub w2: Vec<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_frak_p: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_phi: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_phi_bar: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_phi: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_phi_bar: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<ElementJson>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cm: Option<CmJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint_cm: Option<AdjointCmJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureJson {
    pub p: u64,
    pub precision: i64,
    #[serde(rename = "E")]
    pub e_field: FieldSpec,
    pub coeff_field: CoeffFieldSpec,
    pub group: GroupJson,
    #[serde(rename = "W")]
    pub w: WJson,
    pub units: UnitsJson,
    #[serde(default)]
    pub refinements: Vec<RefinementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub special: Option<SpecialJson>,
    #[serde(rename = "H_polynomial", default, skip_serializing_if = "Option::is_none")]
    pub h_polynomial: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub field: String,
    pub check: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.check)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixtureError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Issue>),
}

impl FixtureError {
    pub fn issues(&self) -> &[Issue] {
        match self {
            FixtureError::Invalid(v) => v,
            FixtureError::Schema(_) => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnitModule {
    pub rank_units: usize,
    pub rank_total: usize,
    /// Column `k` of `action[g]` is `g·u_k`.
    pub action: Vec<Vec<Vec<BigRational>>>,
    pub ord_p: Vec<i64>,
    /// `ι_p(u_k)` in `E`.
    pub embeddings: Option<Vec<FieldElement>>,
    /// `log_p ι_p(u_k)` in `E`.
    pub logs_e: Vec<FieldElement>,
    /// The same logs in the working field.
    pub logs: Vec<FieldElement>,
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub name: String,
    pub basis: Vec<Vector>,
    pub motivic: bool,
}

/// A point of the projective parameter line.
#[derive(Debug, Clone)]
pub enum Param {
    Finite(FieldElement),
    Infinity,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Finite(x) => write!(f, "{x}"),
            Param::Infinity => write!(f, "∞"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Family {
    pub base: Vector,
    pub s_dir: Vector,
    pub t_dir: Option<Vector>,
}

impl Family {
    pub fn line(&self, s: &Param, t: Option<&FieldElement>) -> Vector {
        let mut v: Vector = match s {
            Param::Finite(s) => self
                .base
                .iter()
                .zip(&self.s_dir)
                .map(|(a, b)| a + &(s * b))
                .collect(),
            Param::Infinity => self.s_dir.clone(),
        };
        if let (Some(t), Some(td)) = (t, &self.t_dir) {
            for (x, y) in v.iter_mut().zip(td) {
                *x = &*x + &(t * y);
            }
        }
        v
    }

    /// Parameters `(s, t)` of a vector on the family, up to scaling.
    pub fn locate(&self, v: &[FieldElement]) -> Option<(Param, Option<FieldElement>)> {
        let field = v.first()?.field().clone();
        let mut cols = vec![self.base.clone(), self.s_dir.clone()];
        cols.extend(self.t_dir.clone());
        let k = cols.len();
        let m = PMatrix::from_cols(&field, v.len(), &cols);
        let rows = m.pivot_rows(k).ok()?;
        let sub = PMatrix::from_rows(&field, &rows.iter().map(|&i| m.row(i)).collect::<Vec<_>>());
        let rhs = PMatrix::from_cols(&field, k, &[rows.iter().map(|&i| v[i].clone()).collect()]);
        let x = sub.solve(&rhs).ok()?.col(0);
        let back = m.mul_vec(&x);
        if !back.iter().zip(v).all(|(a, b)| (a - b).is_zero()) {
            return None;
        }
        let t = |scale: &FieldElement| x.get(2).map(|c| c.div(scale).unwrap());
        if !x[0].is_zero() {
            Some((Param::Finite(x[1].div(&x[0]).ok()?), t(&x[0])))
        } else if !x[1].is_zero() {
            Some((Param::Infinity, t(&x[1])))
        } else {
            None
        }
    }

    pub fn refinement(&self, s: &Param, t: Option<&FieldElement>) -> Refinement {
        let name = match t {
            Some(t) => format!("s={s},t={t}"),
            None => format!("s={s}"),
        };
        Refinement {
            name,
            basis: vec![self.line(s, t)],
            motivic: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CmSpec {
    pub e1: Vector,
    pub slope: Option<FieldElement>,
    pub slope_bar: Option<FieldElement>,
    pub l_psi: Option<FieldElement>,
    pub l_psi_bar: Option<FieldElement>,
}

#[derive(Debug, Clone, Default)]
pub struct AdjointCmSpec {
    pub w1: Vector,
    pub w2: Vector,
    pub l_frak_p: Option<FieldElement>,
    pub l_phi: Option<FieldElement>,
    pub l_phi_bar: Option<FieldElement>,
    pub slope_phi: Option<FieldElement>,
    pub slope_phi_bar: Option<FieldElement>,
    pub xi: Option<FieldElement>,
}

#[derive(Debug, Clone, Default)]
pub struct SpecialData {
    pub family: Option<Family>,
    pub cm: Option<CmSpec>,
    pub adjoint_cm: Option<AdjointCmSpec>,
}

#[derive(Debug, Clone)]
pub struct GaloisProblem {
    pub p: u64,
    pub precision: i64,
    pub field_e: Arc<LocalField>,
    pub coeff_field: Arc<LocalField>,
    /// The field holding both the coefficients and `E`; all engine arithmetic happens here.
    pub working: Arc<LocalField>,
    pub group: FiniteGroup,
    /// `W` over the working field.
    pub w: Representation,
    pub w_motivic: bool,
    pub units: UnitModule,
    pub refinements: Vec<Refinement>,
    pub special: SpecialData,
    pub h_polynomial: Option<Vec<i64>>,
    pub source: FixtureJson,
}

pub fn load_fixture(source: &[u8]) -> Result<GaloisProblem, FixtureError> {
    load_fixture_with_precision(source, None)
}

pub fn load_fixture_with_precision(source: &[u8], precision: Option<i64>) -> Result<GaloisProblem, FixtureError> {
    let json: FixtureJson = serde_json::from_slice(source).map_err(|e| FixtureError::Schema(e.to_string()))?;
    from_json(json, precision)
}

impl GaloisProblem {
    pub fn d(&self) -> usize {
        self.w.dim()
    }

    pub fn d_plus(&self) -> usize {
        self.w
            .d_plus(&self.group)
            .expect("d⁺ certified at load")
    }

    /// `f = dim W₁`, the Frobenius-fixed part of `W`.
    pub fn f(&self) -> usize {
        fixed_dimension(&self.w, &self.group, &[self.group.frobenius()]).expect("f certified at load")
    }

    pub fn refinement(&self, name: &str) -> Option<&Refinement> {
        self.refinements.iter().find(|r| r.name == name)
    }

    pub fn unit_representation(&self) -> Representation {
        let r = self.units.rank_units;
        let mats = self
            .units
            .action
            .iter()
            .map(|m| m[..r].iter().map(|row| row[..r].to_vec()).collect())
            .collect();
        Representation::from_rational("U_H", &self.working, r, mats)
    }

    pub fn p_unit_representation(&self) -> Representation {
        Representation::from_rational(
            "U_H^(p)",
            &self.working,
            self.units.rank_total,
            self.units.action.clone(),
        )
    }

    pub fn ord_vector(&self) -> Vector {
        self.units
            .ord_p
            .iter()
            .map(|&o| FieldElement::from_int(&self.working, o))
            .collect()
    }

    /// Reloads the same fixture at another precision.
    pub fn with_precision(&self, precision: i64) -> Result<GaloisProblem, FixtureError> {
        from_json(self.source.clone(), Some(precision))
    }

    pub fn to_json(&self) -> FixtureJson {
        self.source.clone()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.source).unwrap_or_default()
    }
}

struct Collector(Vec<Issue>);

impl Collector {
    fn push(&mut self, field: impl Into<String>, check: impl Into<String>) {
        self.0.push(Issue {
            field: field.into(),
            check: check.into(),
        });
    }
}

fn parse_rational(x: &ElementJson) -> Option<BigRational> {
    match x {
        ElementJson::Int(n) => Some(rat_int(*n)),
        ElementJson::Rational([n, d]) if *d != 0 => Some(BigRational::new(BigInt::from(*n), BigInt::from(*d))),
        _ => None,
    }
}

pub fn parse_element(field: &Arc<LocalField>, x: &ElementJson) -> Result<FieldElement, String> {
    match x {
        ElementJson::Int(n) => Ok(FieldElement::from_int(field, *n)),
        ElementJson::Rational([_, 0]) => Err("zero denominator".into()),
        ElementJson::Rational(_) => Ok(FieldElement::from_rational(field, &parse_rational(x).unwrap())),
        ElementJson::Digits {
            digits,
            shift,
            known_precision,
        } => {
            let coords = match digits {
                DigitList::Flat(d) => vec![d.clone()],
                DigitList::Nested(d) => d.clone(),
            };
            let e = field.ramification_index() as i64;
            let len = coords.iter().map(Vec::len).max().unwrap_or(0) as i64;
            let prec = known_precision.unwrap_or(e * (shift + len));
            let x = FieldElement::from_digits(field, &coords, *shift, Some(prec)).map_err(|e| e.to_string())?;
            Ok(clamp(&x))
        }
    }
}

/// Drops digits beyond the field's working precision.
fn clamp(x: &FieldElement) -> FieldElement {
    if x.is_exact() {
        return x.clone();
    }
    let v = x.val_pi().unwrap_or(0);
    x.truncated(v + x.field().default_abs_precision())
}

pub fn element_to_json(x: &FieldElement) -> ElementJson {
    if x.is_exact() && x.shift() >= 0 && x.coeffs().iter().skip(1).all(Zero::is_zero) {
        let n = &x.coeffs()[0] * num_traits::pow(BigInt::from(x.field().p()), x.shift() as usize);
        if let Some(n) = n.to_i64() {
            return ElementJson::Int(n);
        }
    }
    let (digits, shift, prec) = x.to_digits();
    let digits = if x.field().degree() == 1 {
        DigitList::Flat(digits.into_iter().next().unwrap_or_default())
    } else {
        DigitList::Nested(digits)
    };
    ElementJson::Digits {
        digits,
        shift,
        known_precision: prec,
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a.lcm(&b)
}

fn from_json(json: FixtureJson, precision: Option<i64>) -> Result<GaloisProblem, FixtureError> {
    let mut issues = Collector(Vec::new());
    let n = precision.unwrap_or(json.precision);
    let p = json.p;
    let field_e = LocalField::unramified(p, json.e_field.unramified_degree, n);
    let coeff_field = match &json.coeff_field.eisenstein {
        None => LocalField::unramified(p, json.coeff_field.unramified_degree, n),
        Some(eis) => LocalField::new(
            p,
            json.coeff_field.unramified_degree,
            Some(eis.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect()),
            n,
        ),
    };
    let (field_e, coeff_field) = match (field_e, coeff_field) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            if let Err(e) = a {
                issues.push("E", e.to_string());
            }
            if let Err(e) = b {
                issues.push("coeff_field", e.to_string());
            }
            return Err(FixtureError::Invalid(issues.0));
        }
    };
    let working = if coeff_field.ramification_index() == 1 {
        let f = lcm(field_e.residue_degree(), coeff_field.residue_degree());
        if f == coeff_field.residue_degree() {
            coeff_field.clone()
        } else {
            LocalField::unramified(p, f, n).map_err(|e| FixtureError::Invalid(vec![Issue {
                field: "coeff_field".into(),
                check: e.to_string(),
            }]))?
        }
    } else if coeff_field.residue_degree() % field_e.residue_degree() == 0 {
        coeff_field.clone()
    } else {
        issues.push(
            "coeff_field",
            "a ramified coefficient field must contain E: unramified_degree of E must divide that of coeff_field",
        );
        return Err(FixtureError::Invalid(issues.0));
    };
    let embed_err = |what: &str, e: PadicError| FixtureError::Invalid(vec![Issue {
        field: what.into(),
        check: e.to_string(),
    }]);
    let c_to_k = FieldEmbedding::new(&coeff_field, &working).map_err(|e| embed_err("coeff_field", e))?;
    let e_to_k = FieldEmbedding::new(&field_e, &working).map_err(|e| embed_err("E", e))?;

    let g = &json.group;
    if g.mult.len() != g.order {
        issues.push("group.order", format!("order {} but mult has {} rows", g.order, g.mult.len()));
    }
    let group = FiniteGroup::unchecked(g.mult.clone(), g.frobenius, g.conjugation, g.gp.clone());
    let report = validate_group(&group);
    for v in &report.violations {
        issues.push("group", v.clone());
    }
    if !issues.0.is_empty() {
        return Err(FixtureError::Invalid(issues.0));
    }
    let order = group.order();

    let d = json.w.dim;
    if json.w.matrices.len() != order {
        issues.push("W.matrices", format!("{} matrices for a group of order {order}", json.w.matrices.len()));
        return Err(FixtureError::Invalid(issues.0));
    }
    for (gi, m) in json.w.matrices.iter().enumerate() {
        if m.len() != d || m.iter().any(|r| r.len() != d) {
            issues.push(format!("W.matrices[{gi}]"), format!("not a {d}x{d} matrix"));
        }
    }
    if !issues.0.is_empty() {
        return Err(FixtureError::Invalid(issues.0));
    }
    let rational: Option<Vec<Vec<Vec<BigRational>>>> = json
        .w
        .matrices
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(parse_rational).collect()).collect())
        .collect();
    let w = match rational {
        Some(mats) => Representation::from_rational("W", &working, d, mats),
        None => {
            let mut mats = Vec::with_capacity(order);
            for (gi, m) in json.w.matrices.iter().enumerate() {
                let mut entries = Vec::with_capacity(d * d);
                for (i, row) in m.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        match parse_element(&coeff_field, x).and_then(|x| c_to_k.apply(&x).map_err(|e| e.to_string())) {
                            Ok(x) => entries.push(x),
                            Err(e) => {
                                issues.push(format!("W.matrices[{gi}][{i}][{j}]"), e);
                                entries.push(FieldElement::zero(&working));
                            }
                        }
                    }
                }
                mats.push(PMatrix::new(&working, d, d, entries));
            }
            Representation::new("W", &working, d, mats)
        }
    };
    if !issues.0.is_empty() {
        return Err(FixtureError::Invalid(issues.0));
    }
    if let Err(e) = w.check_homomorphism(&group) {
        issues.push("W.matrices", e.to_string());
        return Err(FixtureError::Invalid(issues.0));
    }
    match fixed_dimension(&w, &group, &group.generators()) {
        Ok(0) => {}
        Ok(k) => issues.push("W", format!("contains the trivial representation with multiplicity {k}")),
        Err(e) => issues.push("W", e.to_string()),
    }
    let d_plus = match w.d_plus(&group) {
        Ok(x) => x,
        Err(e) => {
            issues.push("W", format!("d⁺ not certified: {e}"));
            return Err(FixtureError::Invalid(issues.0));
        }
    };
    if let Err(e) = fixed_dimension(&w, &group, &[group.frobenius()]) {
        issues.push("W", format!("dim W₁ not certified: {e}"));
    }

    let u = &json.units;
    let (r, big_r) = (u.rank_units, u.rank_total);
    if r > big_r {
        issues.push("units.rank_units", format!("rank_units {r} exceeds rank_total {big_r}"));
        return Err(FixtureError::Invalid(issues.0));
    }
    if u.action.len() != order {
        issues.push("units.action", format!("{} matrices for a group of order {order}", u.action.len()));
        return Err(FixtureError::Invalid(issues.0));
    }
    let mut action = Vec::with_capacity(order);
    for (gi, m) in u.action.iter().enumerate() {
        if m.len() != big_r || m.iter().any(|row| row.len() != big_r) {
            issues.push(format!("units.action[{gi}]"), format!("not a {big_r}x{big_r} matrix"));
            continue;
        }
        let parsed: Option<Vec<Vec<BigRational>>> =
            m.iter().map(|row| row.iter().map(parse_rational).collect()).collect();
        match parsed {
            Some(x) => action.push(x),
            None => issues.push(format!("units.action[{gi}]"), "entries must be rational"),
        }
    }
    if !issues.0.is_empty() {
        return Err(FixtureError::Invalid(issues.0));
    }
    let id: Vec<Vec<BigRational>> = (0..big_r)
        .map(|i| (0..big_r).map(|j| rat_int(i64::from(i == j))).collect())
        .collect();
    if action[0] != id {
        issues.push("units.action[0]", "identity does not act trivially");
    }
    'comp: for a in 0..order {
        for b in 0..order {
            if rat_mul(&action[a], &action[b]) != action[group.mul(a, b)] {
                issues.push("units.action", format!("composition fails at (g, h) = ({a}, {b})"));
                break 'comp;
            }
        }
    }
    for (gi, m) in action.iter().enumerate() {
        if m[r..].iter().any(|row| row[..r].iter().any(|x| !x.is_zero())) {
            issues.push(format!("units.action[{gi}]"), "does not preserve the span of the global units");
        }
    }
    if u.ord_p.len() != big_r {
        issues.push("units.ord_p", format!("{} entries, expected {big_r}", u.ord_p.len()));
    } else {
        for (i, &o) in u.ord_p.iter().enumerate().take(r) {
            if o != 0 {
                issues.push(format!("units.ord_p[{i}]"), format!("global unit has ord_p = {o}"));
            }
        }
    }
    let embeddings = match &u.embeddings {
        Some(list) => {
            if list.len() != big_r {
                issues.push("units.embeddings", format!("{} entries, expected {big_r}", list.len()));
                None
            } else {
                let mut out = Vec::new();
                for (i, x) in list.iter().enumerate() {
                    match parse_element(&field_e, x) {
                        Ok(x) if x.is_zero() => issues.push(format!("units.embeddings[{i}]"), "zero"),
                        Ok(x) => out.push(x),
                        Err(e) => issues.push(format!("units.embeddings[{i}]"), e),
                    }
                }
                Some(out)
            }
        }
        None => None,
    };
    let logs_e: Vec<FieldElement> = match (&embeddings, &u.logs) {
        (Some(emb), _) => {
            let mut out = Vec::new();
            for (i, x) in emb.iter().enumerate() {
                match x.iwasawa_log() {
                    Ok(l) => out.push(l),
                    Err(e) => issues.push(format!("units.embeddings[{i}]"), format!("log: {e}")),
                }
            }
            out
        }
        (None, Some(logs)) => {
            if logs.len() != big_r {
                issues.push("units.logs", format!("{} entries, expected {big_r}", logs.len()));
            }
            let mut out = Vec::new();
            for (i, x) in logs.iter().enumerate() {
                match parse_element(&field_e, x) {
                    Ok(x) => out.push(x),
                    Err(e) => issues.push(format!("units.logs[{i}]"), e),
                }
            }
            out
        }
        (None, None) => {
            issues.push("units", "one of embeddings or logs is required");
            Vec::new()
        }
    };
    if !issues.0.is_empty() {
        return Err(FixtureError::Invalid(issues.0));
    }
    let logs: Vec<FieldElement> = logs_e
        .iter()
        .map(|x| e_to_k.apply(x))
        .collect::<Result<_, _>>()
        .map_err(|e| embed_err("units.logs", e))?;

    let parse_vec = |issues: &mut Collector, what: &str, v: &[ElementJson]| -> Vector {
        if v.len() != d {
            issues.push(what, format!("vector of length {}, expected {d}", v.len()));
        }
        v.iter()
            .enumerate()
            .map(|(i, x)| {
                match parse_element(&coeff_field, x).and_then(|x| c_to_k.apply(&x).map_err(|e| e.to_string())) {
                    Ok(x) => x,
                    Err(e) => {
                        issues.push(format!("{what}[{i}]"), e);
                        FieldElement::zero(&working)
                    }
                }
            })
            .collect()
    };

    let frob = w.matrix(group.frobenius()).clone();
    let mut refinements = Vec::new();
    for (ri, rj) in json.refinements.iter().enumerate() {
        let label = format!("refinements[{ri}] ({})", rj.name);
        if rj.basis.len() != d_plus {
            issues.push(label.clone(), format!("refinement dim ≠ d⁺ ({} ≠ {d_plus})", rj.basis.len()));
            continue;
        }
        let basis: Vec<Vector> = rj
            .basis
            .iter()
            .enumerate()
            .map(|(k, v)| parse_vec(&mut issues, &format!("{label}.basis[{k}]"), v))
            .collect();
        if basis.iter().any(|v| v.len() != d) {
            continue;
        }
        let mut span = Span::new(&working, d);
        let mut independent = true;
        for v in &basis {
            match span.try_add(v) {
                Ok(true) => {}
                Ok(false) => independent = false,
                Err(e) => {
                    issues.push(label.clone(), format!("independence undecided: {e}"));
                    independent = false;
                }
            }
        }
        if !independent {
            issues.push(label.clone(), "basis vectors are linearly dependent");
            continue;
        }
        for (k, v) in basis.iter().enumerate() {
            let image = frob.mul_vec(v);
            if !span.residual(&image).iter().all(FieldElement::is_zero) {
                issues.push(label.clone(), format!("not G_p-stable: Frob·basis[{k}] leaves the span"));
            }
        }
        if rj.name.is_empty() {
            issues.push(label.clone(), "empty name");
        }
        refinements.push(Refinement {
            name: rj.name.clone(),
            basis,
            motivic: rj.motivic,
        });
    }

    let mut special = SpecialData::default();
    if let Some(sp) = &json.special {
        let parse_opt = |issues: &mut Collector, what: &str, x: &Option<ElementJson>| -> Option<FieldElement> {
            x.as_ref().and_then(|x| {
                match parse_element(&coeff_field, x).and_then(|x| c_to_k.apply(&x).map_err(|e| e.to_string())) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        issues.push(what, e);
                        None
                    }
                }
            })
        };
        if let Some(f) = &sp.family {
            let base = parse_vec(&mut issues, "special.family.base", &f.base);
            let s_dir = parse_vec(&mut issues, "special.family.s_dir", &f.s_dir);
            let t_dir = f.t_dir.as_ref().map(|v| parse_vec(&mut issues, "special.family.t_dir", v));
            if d_plus != 1 {
                issues.push("special.family", format!("line families need d⁺ = 1, found {d_plus}"));
            }
            special.family = Some(Family { base, s_dir, t_dir });
        }
        if let Some(c) = &sp.cm {
            special.cm = Some(CmSpec {
                e1: parse_vec(&mut issues, "special.cm.e1", &c.e1),
                slope: parse_opt(&mut issues, "special.cm.slope", &c.slope),
                slope_bar: parse_opt(&mut issues, "special.cm.slope_bar", &c.slope_bar),
                l_psi: parse_opt(&mut issues, "special.cm.l_psi", &c.l_psi),
                l_psi_bar: parse_opt(&mut issues, "special.cm.l_psi_bar", &c.l_psi_bar),
            });
        }
        if let Some(a) = &sp.adjoint_cm {
            special.adjoint_cm = Some(AdjointCmSpec {
                w1: parse_vec(&mut issues, "special.adjoint_cm.w1", &a.w1),
                w2: parse_vec(&mut issues, "special.adjoint_cm.w2", &a.w2),
                l_frak_p: parse_opt(&mut issues, "special.adjoint_cm.l_frak_p", &a.l_frak_p),
                l_phi: parse_opt(&mut issues, "special.adjoint_cm.l_phi", &a.l_phi),
                l_phi_bar: parse_opt(&mut issues, "special.adjoint_cm.l_phi_bar", &a.l_phi_bar),
                slope_phi: parse_opt(&mut issues, "special.adjoint_cm.slope_phi", &a.slope_phi),
                slope_phi_bar: parse_opt(&mut issues, "special.adjoint_cm.slope_phi_bar", &a.slope_phi_bar),
                xi: parse_opt(&mut issues, "special.adjoint_cm.xi", &a.xi),
            });
        }
    }
    if !issues.0.is_empty() {
        return Err(FixtureError::Invalid(issues.0));
    }
    Ok(GaloisProblem {
        p,
        precision: n,
        field_e,
        coeff_field,
        working,
        group,
        w,
        w_motivic: json.w.motivic,
        units: UnitModule {
            rank_units: r,
            rank_total: big_r,
            action,
            ord_p: u.ord_p.clone(),
            embeddings,
            logs_e,
            logs,
        },
        refinements,
        special,
        h_polynomial: json.h_polynomial.clone(),
        source: json,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithmeticReport {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ArithmeticReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn add(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for ArithmeticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        if self.passed() {
            write!(f, "all checks pass")
        } else {
            write!(f, "{} check(s) failed", self.checks.iter().filter(|c| !c.passed).count())
        }
    }
}

/// Dirichlet counts, rank accounting, valuations of the embeddings and Frobenius compatibility.
pub fn validate_arithmetic(prob: &GaloisProblem) -> ArithmeticReport {
    let mut report = ArithmeticReport::default();
    let d_plus = prob.d_plus();
    let f = prob.f();
    match equivariant_homs(&prob.w, &prob.unit_representation(), &prob.group) {
        Ok(h) => report.add(
            "dim Hom_G(W, U_H) = d⁺",
            h.len() == d_plus,
            format!("found {}, d⁺ = {d_plus}", h.len()),
        ),
        Err(e) => report.add("dim Hom_G(W, U_H) = d⁺", false, e.to_string()),
    }
    match equivariant_homs(&prob.w, &prob.p_unit_representation(), &prob.group) {
        Ok(h) => report.add(
            "dim Hom_G(W, U_H^(p)) = d⁺ + f",
            h.len() == d_plus + f,
            format!("found {}, d⁺ + f = {}", h.len(), d_plus + f),
        ),
        Err(e) => report.add("dim Hom_G(W, U_H^(p)) = d⁺ + f", false, e.to_string()),
    }
    let diff = prob.units.rank_total - prob.units.rank_units;
    let index = prob.group.gp_index();
    report.add(
        "rank accounting",
        diff == index,
        format!("rank_total − rank_units = {diff}, [G : G_p] = {index}"),
    );
    match &prob.units.embeddings {
        Some(emb) => {
            let bad: Vec<String> = emb
                .iter()
                .zip(&prob.units.ord_p)
                .enumerate()
                .filter_map(|(i, (x, &o))| match x.valuation() {
                    Ok(v) if v == num_rational::Ratio::from_integer(o) => None,
                    Ok(v) => Some(format!("index {i}: valuation {v} ≠ ord_p {o}")),
                    Err(e) => Some(format!("index {i}: {e}")),
                })
                .collect();
            report.add(
                "ord/embedding consistency",
                bad.is_empty(),
                if bad.is_empty() {
                    format!("{} embeddings", emb.len())
                } else {
                    bad.join("; ")
                },
            );
        }
        None => report.warnings.push("embedding consistency unverifiable".into()),
    }
    let fr = &prob.units.action[prob.group.frobenius()];
    let logs = &prob.units.logs_e;
    let mut bad = Vec::new();
    for k in 0..prob.units.rank_total {
        let mut expect = FieldElement::zero(&prob.field_e);
        let mut ord = BigRational::zero();
        for j in 0..prob.units.rank_total {
            if !fr[j][k].is_zero() {
                expect = &expect + &(&FieldElement::from_rational(&prob.field_e, &fr[j][k]) * &logs[j]);
                ord += &fr[j][k] * rat_int(prob.units.ord_p[j]);
            }
        }
        match logs[k].frobenius() {
            Ok(s) if s.agrees_with(&expect) => {}
            Ok(_) => bad.push(format!("σ(log u_{k}) ≠ log(Frob·u_{k})")),
            Err(e) => bad.push(format!("index {k}: {e}")),
        }
        if ord != rat_int(prob.units.ord_p[k]) {
            bad.push(format!("ord_p(Frob·u_{k}) ≠ ord_p(u_{k})"));
        }
    }
    report.add(
        "Frobenius compatibility",
        bad.is_empty(),
        if bad.is_empty() {
            "logs and valuations are Frobenius-equivariant".into()
        } else {
            bad.join("; ")
        },
    );
    report
}
