//! W°, regulators, regularity, the extra-zero order, the κ′ basis and the
//! ℒ-invariant by the block-determinant and Schur-complement routes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fixtures::{element_to_json, ElementJson, GaloisProblem, Refinement};
use crate::galois::{certify_integer, equivariant_homs, fixed_subspace, GaloisError};
use crate::linalg::{complete_from, dot, LinalgError, PMatrix, Span, Vector};
use crate::padic::{FieldElement, LocalField, PadicError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("refinement {name}: {reason}")]
    InvalidRefinement { name: String, reason: String },
    #[error("no regular refinement exists: dim W° = {found}, expected d⁻ = {expected}")]
    NoRegularRefinement { expected: usize, found: usize },
    #[error("{what} has dimension {found}, expected {expected}")]
    HomDimension { what: String, expected: usize, found: usize },
    #[error("refinement {0} is singular")]
    Singular(String),
    #[error("O⁻ singular after {0} basis choice(s)")]
    OMinusSingular(usize),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("invalid basis override: {0}")]
    InvalidBasis(String),
    #[error("J_c is singular")]
    SingularJc,
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

pub type Result<T> = std::result::Result<T, EngineError>;

const O_MINUS_ATTEMPTS: usize = 4;

/// A determinant together with its zero/nonzero decision.
#[derive(Debug, Clone)]
pub struct DetEvidence {
    /// `None` when every pivot vanished to precision.
    pub value: Option<FieldElement>,
    pub zero: bool,
}

impl DetEvidence {
    fn of(m: &PMatrix) -> Result<Self> {
        match m.determinant() {
            Ok(x) => Ok(DetEvidence {
                zero: x.is_zero(),
                value: Some(x),
            }),
            Err(LinalgError::Padic(PadicError::PrecisionExhausted)) => Ok(DetEvidence {
                value: None,
                zero: true,
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn describe(&self) -> String {
        match &self.value {
            Some(x) if x.is_zero() && x.is_exact() => "exactly 0".into(),
            Some(x) if x.is_zero() => format!("0 to precision {}", x.precision().unwrap_or(0)),
            Some(x) => format!("{x}"),
            None => "0 to working precision".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Regularity {
    pub regular: bool,
    /// `Reg_p(W, W⁺)` in the refinement's given basis.
    pub reg: DetEvidence,
    /// `det[W⁺ ; W°]`.
    pub direct_sum: DetEvidence,
}

/// Explicit bases replacing the deterministic defaults.
#[derive(Debug, Clone, Default)]
pub struct BasisChoice {
    pub w_plus: Option<Vec<Vector>>,
    pub w_minus: Option<Vec<Vector>>,
    pub kappa: Option<Vec<PMatrix>>,
    pub kappa_prime: Option<Vec<PMatrix>>,
    /// Take `w⁻` inside `W₁ ∩ W°`, which makes `A⁻` vanish.
    pub w_minus_in_w_circle: bool,
}

#[derive(Debug, Clone)]
pub struct BasesUsed {
    pub w_plus: Vec<Vector>,
    pub w_minus: Vec<Vector>,
    pub kappa: Vec<PMatrix>,
    pub kappa_prime: Vec<PMatrix>,
}

#[derive(Debug, Clone)]
pub struct LInvariantReport {
    pub refinement: String,
    pub p: u64,
    pub precision: i64,
    pub d: usize,
    pub d_plus: usize,
    pub f: usize,
    pub e: usize,
    pub regularity: Regularity,
    pub a_plus: PMatrix,
    pub a_minus: PMatrix,
    pub b_plus: PMatrix,
    pub b_minus: PMatrix,
    pub o_minus: PMatrix,
    pub value_block: FieldElement,
    pub value_schur: FieldElement,
    /// Relative precision of the value, in units of the uniformizer.
    pub certified_precision: i64,
    pub basis_audit: Vec<String>,
    pub bases: BasesUsed,
}

impl LInvariantReport {
    pub fn value(&self) -> &FieldElement {
        &self.value_block
    }

    pub fn summary(&self) -> ReportSummary {
        let mat = |m: &PMatrix| -> Vec<Vec<ElementJson>> {
            m.row_vectors().iter().map(|r| r.iter().map(element_to_json).collect()).collect()
        };
        ReportSummary {
            refinement: self.refinement.clone(),
            p: self.p,
            precision: self.precision,
            d: self.d,
            d_plus: self.d_plus,
            f: self.f,
            e: self.e,
            regular: true,
            reg: self.regularity.reg.describe(),
            direct_sum: self.regularity.direct_sum.describe(),
            value: Some(self.value_block.to_string()),
            value_block: Some(element_to_json(&self.value_block)),
            value_schur: Some(element_to_json(&self.value_schur)),
            certified_precision: Some(self.certified_precision),
            a_plus: mat(&self.a_plus),
            a_minus: mat(&self.a_minus),
            b_plus: mat(&self.b_plus),
            b_minus: mat(&self.b_minus),
            o_minus: mat(&self.o_minus),
            basis_audit: self.basis_audit.clone(),
        }
    }
}

/// Serializable form of an engine run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub refinement: String,
    pub p: u64,
    pub precision: i64,
    pub d: usize,
    pub d_plus: usize,
    pub f: usize,
    pub e: usize,
    pub regular: bool,
    pub reg: String,
    pub direct_sum: String,
    pub value: Option<String>,
    pub value_block: Option<ElementJson>,
    pub value_schur: Option<ElementJson>,
    pub certified_precision: Option<i64>,
    pub a_plus: Vec<Vec<ElementJson>>,
    pub a_minus: Vec<Vec<ElementJson>>,
    pub b_plus: Vec<Vec<ElementJson>>,
    pub b_minus: Vec<Vec<ElementJson>>,
    pub o_minus: Vec<Vec<ElementJson>>,
    pub basis_audit: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Regular(Box<LInvariantReport>),
    Singular { refinement: String, regularity: Regularity },
}

impl Verdict {
    pub fn report(&self) -> Option<&LInvariantReport> {
        match self {
            Verdict::Regular(r) => Some(r),
            Verdict::Singular { .. } => None,
        }
    }

    pub fn into_report(self) -> Result<LInvariantReport> {
        match self {
            Verdict::Regular(r) => Ok(*r),
            Verdict::Singular { refinement, .. } => Err(EngineError::Singular(refinement)),
        }
    }

    pub fn summary(&self, prob: &GaloisProblem) -> ReportSummary {
        match self {
            Verdict::Regular(r) => r.summary(),
            Verdict::Singular { refinement, regularity } => ReportSummary {
                refinement: refinement.clone(),
                p: prob.p,
                precision: prob.precision,
                d: prob.d(),
                d_plus: prob.d_plus(),
                f: prob.f(),
                e: 0,
                regular: false,
                reg: regularity.reg.describe(),
                direct_sum: regularity.direct_sum.describe(),
                value: None,
                value_block: None,
                value_schur: None,
                certified_precision: None,
                a_plus: vec![],
                a_minus: vec![],
                b_plus: vec![],
                b_minus: vec![],
                o_minus: vec![],
                basis_audit: vec![],
            },
        }
    }
}

/// `w ↦ (ℓᵀ X w, oᵀ X w)` for one `X ∈ Hom_G(W, U_H^(p))`.
#[derive(Debug, Clone)]
struct Functionals {
    log: Vector,
    ord: Vector,
}

/// Refinement-independent data of a problem.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    pub prob: &'a GaloisProblem,
    field: Arc<LocalField>,
    d: usize,
    d_plus: usize,
    f: usize,
    kappa: Vec<PMatrix>,
    beta: Vec<PMatrix>,
    w_circle: Vec<Vector>,
    w_one: Vec<Vector>,
}

fn functionals(prob: &GaloisProblem, x: &PMatrix) -> Functionals {
    let ord = prob.ord_vector();
    let t = x.transpose();
    Functionals {
        log: t.mul_vec(&prob.units.logs),
        ord: t.mul_vec(&ord),
    }
}

fn hom_vec(x: &PMatrix) -> Vector {
    x.entries().to_vec()
}

fn pad(field: &Arc<LocalField>, x: &PMatrix, rows: usize) -> PMatrix {
    let mut out = PMatrix::zeros(field, rows, x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            out.set(i, j, x.get(i, j).clone());
        }
    }
    out
}

fn combine(field: &Arc<LocalField>, mats: &[PMatrix], coeffs: &[FieldElement]) -> PMatrix {
    let (r, c) = (mats[0].rows(), mats[0].cols());
    let mut out = PMatrix::zeros(field, r, c);
    for (m, a) in mats.iter().zip(coeffs) {
        if a.is_zero() && a.is_exact() {
            continue;
        }
        out = out.add(&m.scale(a)).expect("same shape");
    }
    out
}

fn pairing(field: &Arc<LocalField>, rows: &[Vector], cols: &[Vector]) -> PMatrix {
    let entries = rows
        .iter()
        .flat_map(|w| cols.iter().map(move |l| dot(l, w)))
        .collect();
    PMatrix::new(field, rows.len(), cols.len(), entries)
}

fn independent(field: &Arc<LocalField>, dim: usize, vs: &[Vector]) -> Result<bool> {
    let mut span = Span::new(field, dim);
    for v in vs {
        if !span.try_add(v)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sign(e: usize, x: FieldElement) -> FieldElement {
    if e % 2 == 1 {
        -x
    } else {
        x
    }
}

/// Matching digits of `a` and `b` beyond the valuation of `a`, in units of `p`.
pub fn agreement_digits(a: &FieldElement, b: &FieldElement) -> i64 {
    let e = a.field().ramification_index() as i64;
    let diff = a - b;
    let top = match diff.val_pi() {
        Some(v) => v,
        None => diff.precision().unwrap_or(i64::MAX / 2),
    };
    (top - a.val_pi().unwrap_or(0)) / e
}

impl<'a> Engine<'a> {
    pub fn new(prob: &'a GaloisProblem) -> Result<Self> {
        let field = prob.working.clone();
        let d = prob.d();
        let d_plus = prob.d_plus();
        let f = prob.f();
        let big_r = prob.units.rank_total;
        let homs_h = equivariant_homs(&prob.w, &prob.unit_representation(), &prob.group)?;
        if homs_h.len() != d_plus {
            return Err(EngineError::HomDimension {
                what: "Hom_G(W, U_H)".into(),
                expected: d_plus,
                found: homs_h.len(),
            });
        }
        let kappa: Vec<PMatrix> = homs_h.iter().map(|x| pad(&field, x, big_r)).collect();
        let homs_full = equivariant_homs(&prob.w, &prob.p_unit_representation(), &prob.group)?;
        if homs_full.len() != d_plus + f {
            return Err(EngineError::HomDimension {
                what: "Hom_G(W, U_H^(p))".into(),
                expected: d_plus + f,
                found: homs_full.len(),
            });
        }
        let sub: Vec<Vector> = kappa.iter().map(hom_vec).collect();
        let cand: Vec<Vector> = homs_full.iter().map(hom_vec).collect();
        let comp = complete_from(&field, big_r * d, &sub, &cand, d_plus + f)?;
        let beta: Vec<PMatrix> = comp.chosen.iter().map(|&i| homs_full[i].clone()).collect();
        let mut eng = Engine {
            prob,
            field,
            d,
            d_plus,
            f,
            kappa,
            beta,
            w_circle: Vec::new(),
            w_one: Vec::new(),
        };
        eng.w_circle = eng.compute_w_circle()?;
        eng.w_one = fixed_subspace(&prob.w, &prob.group, &[prob.group.frobenius()])?;
        if eng.w_one.len() != f {
            return Err(EngineError::Internal(format!(
                "W₁ has {} basis vectors but trace count {f}",
                eng.w_one.len()
            )));
        }
        Ok(eng)
    }

    pub fn d_plus(&self) -> usize {
        self.d_plus
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn kappa(&self) -> &[PMatrix] {
        &self.kappa
    }

    /// The complement of `Hom_G(W, U_H)` inside `Hom_G(W, U_H^(p))`.
    pub fn beta(&self) -> &[PMatrix] {
        &self.beta
    }

    pub fn w_circle(&self) -> &[Vector] {
        &self.w_circle
    }

    pub fn w_one(&self) -> &[Vector] {
        &self.w_one
    }

    /// `w ↦ log_p ι_p(X w)` as a row vector.
    pub fn log_functional(&self, x: &PMatrix) -> Vector {
        functionals(self.prob, x).log
    }

    /// `w ↦ ord_p(X w)` as a row vector.
    pub fn ord_functional(&self, x: &PMatrix) -> Vector {
        functionals(self.prob, x).ord
    }

    fn compute_w_circle(&self) -> Result<Vec<Vector>> {
        let rows: Vec<Vector> = self.kappa.iter().map(|k| self.log_functional(k)).collect();
        let m = PMatrix::new(&self.field, rows.len(), self.d, rows.concat());
        let expected = self.d - self.d_plus;
        match m.kernel_basis_expecting(Some(expected)) {
            Ok(v) => Ok(v),
            Err(LinalgError::RankMismatch { .. }) | Err(LinalgError::AmbiguousRank { .. }) => {
                let found = match m.row_reduce_expecting(Some(0)) {
                    Ok(e) => self.d - e.rank,
                    Err(_) => self.d - m.rank().unwrap_or(0),
                };
                Err(EngineError::NoRegularRefinement { expected, found })
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn validate_refinement(&self, r: &Refinement) -> Result<()> {
        let bad = |reason: String| EngineError::InvalidRefinement {
            name: r.name.clone(),
            reason,
        };
        if r.basis.len() != self.d_plus {
            return Err(bad(format!("dimension {} ≠ d⁺ = {}", r.basis.len(), self.d_plus)));
        }
        if r.basis.iter().any(|v| v.len() != self.d) {
            return Err(bad(format!("vectors must have length {}", self.d)));
        }
        let mut span = Span::new(&self.field, self.d);
        for v in &r.basis {
            if !span.try_add(v)? {
                return Err(bad("basis vectors are dependent".into()));
            }
        }
        let frob = self.prob.w.matrix(self.prob.group.frobenius());
        for v in &r.basis {
            if !span.residual(&frob.mul_vec(v)).iter().all(FieldElement::is_zero) {
                return Err(bad("not G_p-stable".into()));
            }
        }
        Ok(())
    }

    /// `Reg_p(W, W⁺) = det(log_p κ_j(w⁺_i))`.
    pub fn regulator(&self, r: &Refinement) -> Result<DetEvidence> {
        self.validate_refinement(r)?;
        let logs: Vec<Vector> = self.kappa.iter().map(|k| self.log_functional(k)).collect();
        DetEvidence::of(&pairing(&self.field, &r.basis, &logs))
    }

    pub fn is_regular(&self, r: &Refinement) -> Result<Regularity> {
        let reg = self.regulator(r)?;
        let rows: Vec<Vector> = r.basis.iter().chain(&self.w_circle).cloned().collect();
        let direct_sum = DetEvidence::of(&PMatrix::new(&self.field, self.d, self.d, rows.concat()))?;
        if reg.zero != direct_sum.zero {
            return Err(EngineError::Internal(format!(
                "regularity criteria disagree on {}: Reg = {}, det[W⁺; W°] = {}",
                r.name,
                reg.describe(),
                direct_sum.describe()
            )));
        }
        Ok(Regularity {
            regular: !reg.zero,
            reg,
            direct_sum,
        })
    }

    /// Coordinates of Frobenius on the basis `w⁺`.
    fn frobenius_on(&self, basis: &[Vector]) -> Result<PMatrix> {
        let k = basis.len();
        let frob = self.prob.w.matrix(self.prob.group.frobenius());
        let cols = PMatrix::new(&self.field, k, self.d, basis.concat()).transpose();
        let piv = cols.pivot_rows(k)?;
        let square = PMatrix::new(
            &self.field,
            k,
            k,
            piv.iter().flat_map(|&i| cols.row(i)).collect(),
        );
        let images: Vec<Vector> = basis.iter().map(|v| frob.mul_vec(v)).collect();
        let rhs = PMatrix::new(
            &self.field,
            k,
            k,
            piv.iter().flat_map(|&i| images.iter().map(move |im| im[i].clone())).collect(),
        );
        Ok(square.solve(&rhs)?)
    }

    /// `(e, W₁⁺)`: the extra-zero order and a basis of the Frobenius-fixed part of `W⁺`.
    pub fn extra_zero_order(&self, r: &Refinement) -> Result<(usize, Vec<Vector>)> {
        self.validate_refinement(r)?;
        let k = self.d_plus;
        if k == 0 {
            return Ok((self.f, Vec::new()));
        }
        let c = self.frobenius_on(&r.basis)?;
        let m = self.prob.group.element_order(self.prob.group.frobenius());
        let mut power = PMatrix::identity(&self.field, k);
        let mut trace = FieldElement::zero(&self.field);
        for _ in 0..m {
            for i in 0..k {
                trace = &trace + power.get(i, i);
            }
            power = power.mul(&c)?;
        }
        let dim = certify_integer(&trace, m, k, "dim W₁⁺")?;
        if dim > self.f {
            return Err(EngineError::Internal(format!("dim W₁⁺ = {dim} exceeds f = {}", self.f)));
        }
        let shifted = c.sub(&PMatrix::identity(&self.field, k))?;
        let coords = shifted.kernel_basis_expecting(Some(dim))?;
        let fixed = coords
            .iter()
            .map(|x| {
                (0..self.d)
                    .map(|i| {
                        x.iter()
                            .zip(&r.basis)
                            .fold(FieldElement::zero(&self.field), |acc, (a, v)| &acc + &(a * &v[i]))
                    })
                    .collect()
            })
            .collect();
        Ok((self.f - dim, fixed))
    }

    pub fn l_invariant(&self, r: &Refinement) -> Result<Verdict> {
        self.l_invariant_with(r, &BasisChoice::default())
    }

    pub fn l_invariant_with(&self, r: &Refinement, choice: &BasisChoice) -> Result<Verdict> {
        let regularity = self.is_regular(r)?;
        if !regularity.regular {
            return Ok(Verdict::Singular {
                refinement: r.name.clone(),
                regularity,
            });
        }
        let (e, w1_plus) = self.extra_zero_order(r)?;
        let mut audit = Vec::new();
        let field = &self.field;
        let frob = self.prob.w.matrix(self.prob.group.frobenius());

        let w_plus = match &choice.w_plus {
            Some(b) => {
                let mut span = Span::new(field, self.d);
                for v in &r.basis {
                    span.try_add(v)?;
                }
                if b.len() != self.d_plus
                    || !independent(field, self.d, b)?
                    || b.iter().any(|v| !span.residual(v).iter().all(FieldElement::is_zero))
                {
                    return Err(EngineError::InvalidBasis("w⁺ is not a basis of the refinement".into()));
                }
                audit.push("w⁺: supplied".into());
                b.clone()
            }
            None => {
                let comp = complete_from(field, self.d, &w1_plus, &r.basis, self.d_plus)?;
                audit.push(format!(
                    "w⁺: W₁⁺ basis of dimension {} completed by refinement vectors {:?}",
                    w1_plus.len(),
                    comp.chosen
                ));
                comp.basis
            }
        };

        let kappa = match &choice.kappa {
            Some(k) => {
                self.check_homs(k, self.d_plus, true)?;
                let vs: Vec<Vector> = k.iter().map(hom_vec).collect();
                if !independent(field, vs.first().map_or(0, Vec::len), &vs)? {
                    return Err(EngineError::InvalidBasis("κ are dependent".into()));
                }
                audit.push("κ: supplied".into());
                k.clone()
            }
            None => {
                audit.push(format!("κ: {} exact kernel vectors of the equivariance system", self.kappa.len()));
                self.kappa.clone()
            }
        };
        let kappa_logs: Vec<Vector> = kappa.iter().map(|k| self.log_functional(k)).collect();

        let kappa_prime = match &choice.kappa_prime {
            Some(kp) => {
                self.check_homs(kp, e, false)?;
                let mut vs: Vec<Vector> = kappa.iter().map(hom_vec).collect();
                vs.extend(kp.iter().map(hom_vec));
                if !independent(field, self.prob.units.rank_total * self.d, &vs)? {
                    return Err(EngineError::InvalidBasis("κ′ not independent of κ".into()));
                }
                for k in kp {
                    let o = self.ord_functional(k);
                    if w_plus.iter().any(|w| !dot(&o, w).is_zero()) {
                        return Err(EngineError::InvalidBasis("ord_p κ′ does not vanish on W⁺".into()));
                    }
                }
                audit.push("κ′: supplied".into());
                kp.clone()
            }
            None => {
                let ords: Vec<Vector> = self.beta.iter().map(|b| self.ord_functional(b)).collect();
                let m = pairing(field, &w_plus, &ords);
                let ker = m.kernel_basis_expecting(Some(e)).map_err(|err| match err {
                    LinalgError::RankMismatch { .. } => EngineError::HomDimension {
                        what: "ker(ord_p on W⁺) in Hom_G(W, U_H^(p)) modulo Hom_G(W, U_H)".into(),
                        expected: e,
                        found: self.f - m.rank().unwrap_or(0),
                    },
                    other => other.into(),
                })?;
                audit.push(format!(
                    "κ′: kernel of ord_p on W⁺ over {} completion homs, nullity {}",
                    self.beta.len(),
                    ker.len()
                ));
                ker.iter().map(|y| combine(field, &self.beta, y)).collect()
            }
        };
        let kp_logs: Vec<Vector> = kappa_prime.iter().map(|k| self.log_functional(k)).collect();
        let kp_ords: Vec<Vector> = kappa_prime.iter().map(|k| self.ord_functional(k)).collect();

        let a_plus = pairing(field, &w_plus, &kappa_logs);
        let b_plus = pairing(field, &w_plus, &kp_logs);
        let det_a_plus = a_plus.determinant()?;

        let w_minus_candidates: Vec<Vec<Vector>> = match (&choice.w_minus, choice.w_minus_in_w_circle) {
            (Some(wm), _) => {
                if wm.len() != e {
                    return Err(EngineError::InvalidBasis(format!("{} w⁻ vectors, e = {e}", wm.len())));
                }
                for v in wm {
                    let diff: Vector = frob.mul_vec(v).iter().zip(v).map(|(a, b)| a - b).collect();
                    if !diff.iter().all(FieldElement::is_zero) {
                        return Err(EngineError::InvalidBasis("w⁻ not Frobenius-fixed".into()));
                    }
                }
                let all: Vec<Vector> = w_plus.iter().chain(wm).cloned().collect();
                if !independent(field, self.d, &all)? {
                    return Err(EngineError::InvalidBasis("w⁻ not independent modulo W⁺".into()));
                }
                audit.push("w⁻: supplied".into());
                vec![wm.clone()]
            }
            (None, true) => {
                let m = pairing(field, &self.w_one, &kappa_logs).transpose();
                let coords = m.kernel_basis_expecting(Some(e))?;
                let basis: Vec<Vector> = coords
                    .iter()
                    .map(|x| {
                        (0..self.d)
                            .map(|i| {
                                x.iter()
                                    .zip(&self.w_one)
                                    .fold(FieldElement::zero(field), |acc, (a, v)| &acc + &(a * &v[i]))
                            })
                            .collect()
                    })
                    .collect();
                audit.push("w⁻: basis of W₁ ∩ W°".into());
                vec![basis]
            }
            (None, false) => (0..O_MINUS_ATTEMPTS.min(self.f.max(1)))
                .map(|shift| {
                    let mut cand = self.w_one.clone();
                    cand.rotate_left(shift);
                    complete_from(field, self.d, &w1_plus, &cand, self.f)
                        .map(|c| c.basis[w1_plus.len()..].to_vec())
                })
                .collect::<std::result::Result<_, _>>()?,
        };

        let mut attempts = 0;
        for w_minus in w_minus_candidates {
            attempts += 1;
            let o_minus = pairing(field, &w_minus, &kp_ords);
            let det_o = DetEvidence::of(&o_minus)?;
            if det_o.zero {
                audit.push(format!("attempt {attempts}: det O⁻ = {}, next W₁ completion", det_o.describe()));
                continue;
            }
            if choice.w_minus.is_none() && !choice.w_minus_in_w_circle {
                audit.push(format!("w⁻: W₁ completion, attempt {attempts}"));
            }
            let det_o = det_o.value.expect("nonzero determinant");
            let a_minus = pairing(field, &w_minus, &kappa_logs);
            let b_minus = pairing(field, &w_minus, &kp_logs);

            let top = PMatrix::from_blocks(&a_plus, &b_plus, &a_minus, &b_minus)?;
            let block = top.determinant()?.div(&(&det_a_plus * &det_o))?;
            let value_block = sign(e, block);

            let correction = a_minus.mul(&a_plus.solve(&b_plus)?)?;
            let schur = b_minus.sub(&correction)?;
            let value_schur = sign(e, schur.determinant()?.div(&det_o)?);

            if !value_block.agrees_with(&value_schur) {
                return Err(EngineError::Internal(format!(
                    "block route {value_block} and Schur route {value_schur} disagree"
                )));
            }
            let certified_precision = match (value_block.relative_precision(), value_schur.relative_precision()) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => i64::MAX,
            };
            return Ok(Verdict::Regular(Box::new(LInvariantReport {
                refinement: r.name.clone(),
                p: self.prob.p,
                precision: self.prob.precision,
                d: self.d,
                d_plus: self.d_plus,
                f: self.f,
                e,
                regularity,
                a_plus,
                a_minus,
                b_plus,
                b_minus,
                o_minus,
                value_block,
                value_schur,
                certified_precision,
                basis_audit: audit,
                bases: BasesUsed {
                    w_plus,
                    w_minus,
                    kappa,
                    kappa_prime,
                },
            })));
        }
        Err(EngineError::OMinusSingular(attempts))
    }

    fn check_homs(&self, homs: &[PMatrix], count: usize, global: bool) -> Result<()> {
        let big_r = self.prob.units.rank_total;
        let r = self.prob.units.rank_units;
        if homs.len() != count {
            return Err(EngineError::InvalidBasis(format!("{} homs, expected {count}", homs.len())));
        }
        let u = self.prob.p_unit_representation();
        for x in homs {
            if x.rows() != big_r || x.cols() != self.d {
                return Err(EngineError::InvalidBasis(format!("homs must be {big_r}x{}", self.d)));
            }
            for g in self.prob.group.generators() {
                let lhs = u.matrix(g).mul(x)?;
                let rhs = x.mul(self.prob.w.matrix(g))?;
                if !lhs.sub(&rhs)?.is_zero() {
                    return Err(EngineError::InvalidBasis(format!("hom not equivariant at g = {g}")));
                }
            }
            if global && (r..big_r).any(|i| (0..self.d).any(|j| !x.get(i, j).is_zero())) {
                return Err(EngineError::InvalidBasis("κ must take values in the global units".into()));
            }
        }
        Ok(())
    }
}

/// `(−1)^e det(J_f · J_c⁻¹)` with `e` the size of the matrices.
pub fn dual_l_invariant(jf: &PMatrix, jc: &PMatrix) -> Result<FieldElement> {
    let e = jc.rows();
    let inv = jc.inverse().map_err(|err| match err {
        LinalgError::Singular | LinalgError::Padic(PadicError::PrecisionExhausted) => EngineError::SingularJc,
        other => other.into(),
    })?;
    Ok(sign(e, jf.mul(&inv)?.determinant()?))
}

/// One-shot evaluation of a refinement.
pub fn l_invariant(prob: &GaloisProblem, r: &Refinement) -> Result<Verdict> {
    Engine::new(prob)?.l_invariant(r)
}
