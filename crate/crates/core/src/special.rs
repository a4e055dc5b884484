//! Closed forms: Gross' regulator, CM slopes and character invariants, the
//! CM refinement line, the adjoint CM family and the weight-one expressions.

use std::sync::Arc;

use crate::engine::{agreement_digits, dual_l_invariant, EngineError, LInvariantReport};
use crate::fixtures::{GaloisProblem, Param, Refinement};
use crate::galois::{certify_integer, equivariant_homs, fixed_subspace, GaloisError};
use crate::linalg::{dot, LinalgError, PMatrix, Span, Vector};
use crate::padic::{FieldElement, LocalField, PadicError};

#[derive(Debug, thiserror::Error)]
pub enum SpecialError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("{what} has dimension {found}, expected {expected}")]
    Dimension { what: String, expected: usize, found: usize },
    #[error("{0} vanishes")]
    Vanishing(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

pub type Result<T> = std::result::Result<T, SpecialError>;

fn nonzero(x: &FieldElement, what: &str) -> Result<()> {
    if x.is_zero() {
        Err(SpecialError::Vanishing(what.into()))
    } else {
        Ok(())
    }
}

fn quotient(a: &FieldElement, b: &FieldElement, what: &str) -> Result<FieldElement> {
    nonzero(b, what)?;
    Ok(a.div(b)?)
}

/// Gross' regulator `det(λ_p ∘ o_p⁻¹)` for `d⁺ = 0`, with the order `e = dim W₁`.
pub fn gross_regulator(prob: &GaloisProblem) -> Result<(FieldElement, usize)> {
    if prob.d_plus() != 0 {
        return Err(SpecialError::NotApplicable(format!("d⁺ = {} ≠ 0", prob.d_plus())));
    }
    let field = &prob.working;
    let homs = equivariant_homs(&prob.w, &prob.p_unit_representation(), &prob.group)?;
    let w1 = fixed_subspace(&prob.w, &prob.group, &[prob.group.frobenius()])?;
    if homs.len() != w1.len() {
        return Err(SpecialError::Dimension {
            what: "Hom_G(W, U_H^(p))".into(),
            expected: w1.len(),
            found: homs.len(),
        });
    }
    let e = w1.len();
    let ords = prob.ord_vector();
    let mut logs = Vec::new();
    let mut orders = Vec::new();
    for w in &w1 {
        for x in &homs {
            let image = x.mul_vec(w);
            logs.push(dot(&prob.units.logs, &image));
            orders.push(dot(&ords, &image));
        }
    }
    let l = PMatrix::new(field, e, e, logs);
    let o = PMatrix::new(field, e, e, orders);
    let ratio = o.solve(&l).map_err(|err| match err {
        LinalgError::Singular => SpecialError::Vanishing("det o_p".into()),
        other => other.into(),
    })?;
    Ok((ratio.determinant()?, e))
}

/// `g ↦ χ(g)` on the stabilizer of the line through `v`.
fn line_character(prob: &GaloisProblem, v: &[FieldElement]) -> Result<Vec<(usize, FieldElement)>> {
    let (i0, _) = v
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .min_by_key(|(_, x)| x.val_pi().unwrap_or(i64::MAX))
        .ok_or_else(|| SpecialError::Vanishing("eigenvector".into()))?;
    let mut out = Vec::new();
    for g in 0..prob.group.order() {
        let image = prob.w.matrix(g).mul_vec(v);
        let c = image[i0].div(&v[i0])?;
        if image.iter().zip(v).all(|(a, b)| (a - &(&c * b)).is_zero()) {
            out.push((g, c));
        }
    }
    Ok(out)
}

/// Basis of the `χ`-eigenspace of the first `rows` unit coordinates.
fn eigenspace(prob: &GaloisProblem, chi: &[(usize, FieldElement)], rows: usize) -> Result<Vec<Vector>> {
    let field = &prob.working;
    if rows == 0 {
        return Ok(Vec::new());
    }
    let mut trace = FieldElement::zero(field);
    let mut system = Vec::new();
    for (g, c) in chi {
        let a = PMatrix::from_rationals(
            field,
            &prob.units.action[*g][..rows].iter().map(|r| r[..rows].to_vec()).collect::<Vec<_>>(),
        );
        let mut t = FieldElement::zero(field);
        for i in 0..rows {
            t = &t + a.get(i, i);
        }
        trace = &trace + &(&t * &c.inverse()?);
        let shifted = a.sub(&PMatrix::identity(field, rows).scale(c))?;
        system.extend(shifted.row_vectors());
    }
    let dim = certify_integer(&trace, chi.len(), rows, "isotypic dimension")?;
    let m = PMatrix::new(field, system.len(), rows, system.concat());
    Ok(m.kernel_basis_expecting(Some(dim))?)
}

fn padded(v: &[FieldElement], n: usize) -> Vector {
    let field = v.first().map(|x| x.field().clone());
    let mut out = v.to_vec();
    if let Some(f) = field {
        out.resize(n, FieldElement::zero(&f));
    }
    out
}

/// A character line of the unit module: its unit `ε`, a `p`-unit `u` with
/// `ord_p(u) = 0`, and their conjugates under `τ`.
#[derive(Debug, Clone)]
struct CharacterUnits {
    log_eps: FieldElement,
    log_tau_eps: FieldElement,
    log_u: FieldElement,
    log_tau_u: FieldElement,
    ord_tau_u: FieldElement,
}

fn character_units(prob: &GaloisProblem, v: &[FieldElement]) -> Result<CharacterUnits> {
    let field = &prob.working;
    let big_r = prob.units.rank_total;
    let chi = line_character(prob, v)?;
    let global = eigenspace(prob, &chi, prob.units.rank_units)?;
    if global.len() != 1 {
        return Err(SpecialError::Dimension {
            what: "unit eigenline".into(),
            expected: 1,
            found: global.len(),
        });
    }
    let eps = padded(&global[0], big_r);
    let full = eigenspace(prob, &chi, big_r)?;
    let ords = prob.ord_vector();
    let ord_row: Vector = full.iter().map(|m| dot(&ords, m)).collect();
    let plane_coords = PMatrix::new(field, 1, full.len(), ord_row).kernel_basis_expecting(Some(full.len() - 1))?;
    let plane: Vec<Vector> = plane_coords
        .iter()
        .map(|x| {
            (0..big_r)
                .map(|i| {
                    x.iter()
                        .zip(&full)
                        .fold(FieldElement::zero(field), |acc, (a, m)| &acc + &(a * &m[i]))
                })
                .collect()
        })
        .collect();
    let mut span = Span::new(field, big_r);
    span.try_add(&eps)?;
    let mut u = None;
    for cand in &plane {
        if span.try_add(cand)? {
            u = Some(cand.clone());
            break;
        }
    }
    let u = u.ok_or_else(|| SpecialError::Dimension {
        what: "ord_p = 0 plane modulo units".into(),
        expected: 1,
        found: 0,
    })?;
    let tau = PMatrix::from_rationals(field, &prob.units.action[prob.group.conjugation()]);
    let tau_eps = tau.mul_vec(&eps);
    let tau_u = tau.mul_vec(&u);
    let logs = &prob.units.logs;
    Ok(CharacterUnits {
        log_eps: dot(logs, &eps),
        log_tau_eps: dot(logs, &tau_eps),
        log_u: dot(logs, &u),
        log_tau_u: dot(logs, &tau_u),
        ord_tau_u: dot(&ords, &tau_u),
    })
}

/// Slopes and cyclotomic invariants of a character `ψ` and its conjugate.
#[derive(Debug, Clone)]
pub struct CmData {
    pub slope: FieldElement,
    pub slope_bar: FieldElement,
    /// `ℒ(ψ)` from a `p̄`-unit and the conjugate slope.
    pub l_psi: FieldElement,
    pub l_psi_bar: FieldElement,
    /// `ℒ(ψ)` from the element with vanishing log and ord.
    pub l_psi_circle: FieldElement,
    pub l_psi_bar_circle: FieldElement,
}

fn slope(c: &CharacterUnits) -> Result<FieldElement> {
    Ok(-quotient(&c.log_eps, &c.log_tau_eps, "log τ(ε)")?)
}

fn l_bis(c: &CharacterUnits, slope_bar: &FieldElement) -> Result<FieldElement> {
    let num = &c.log_tau_u + &(slope_bar * &c.log_u);
    Ok(-quotient(&num, &c.ord_tau_u, "ord_p τ(u)")?)
}

fn l_circle(c: &CharacterUnits) -> Result<FieldElement> {
    let num = &(&c.log_tau_u * &c.log_eps) - &(&c.log_tau_eps * &c.log_u);
    let den = &c.ord_tau_u * &c.log_eps;
    Ok(-quotient(&num, &den, "ord_p τ(u°)")?)
}

/// The CM data of the line through `e1` and `e2 = τ·e1`.
pub fn cm_character(prob: &GaloisProblem, e1: &[FieldElement]) -> Result<CmData> {
    let e2 = prob.w.matrix(prob.group.conjugation()).mul_vec(e1);
    let psi = character_units(prob, e1)?;
    let psi_bar = character_units(prob, &e2)?;
    let s = slope(&psi)?;
    let s_bar = slope(&psi_bar)?;
    Ok(CmData {
        l_psi: l_bis(&psi, &s_bar)?,
        l_psi_bar: l_bis(&psi_bar, &s)?,
        l_psi_circle: l_circle(&psi)?,
        l_psi_bar_circle: l_circle(&psi_bar)?,
        slope: s,
        slope_bar: s_bar,
    })
}

/// CM data from the fixture, with any supplied scalars taking precedence.
pub fn cm_data(prob: &GaloisProblem) -> Result<CmData> {
    let spec = prob
        .special
        .cm
        .as_ref()
        .ok_or_else(|| SpecialError::NotApplicable("fixture has no CM data".into()))?;
    let mut data = cm_character(prob, &spec.e1)?;
    if let Some(x) = &spec.slope {
        data.slope = x.clone();
    }
    if let Some(x) = &spec.slope_bar {
        data.slope_bar = x.clone();
    }
    if let Some(x) = &spec.l_psi {
        data.l_psi = x.clone();
    }
    if let Some(x) = &spec.l_psi_bar {
        data.l_psi_bar = x.clone();
    }
    Ok(data)
}

#[derive(Debug, Clone)]
pub enum LineValue {
    Value(FieldElement),
    Singular,
}

impl LineValue {
    pub fn value(&self) -> Option<&FieldElement> {
        match self {
            LineValue::Value(x) => Some(x),
            LineValue::Singular => None,
        }
    }
}

/// `(s·ℒ(ψ̄) − S_ψ·ℒ(ψ)) / (s − S_ψ)`, and `ℒ(ψ̄)` at `s = ∞`.
pub fn cm_line(data: &CmData, s: &Param) -> Result<LineValue> {
    match s {
        Param::Infinity => Ok(LineValue::Value(data.l_psi_bar.clone())),
        Param::Finite(s) => {
            let den = s - &data.slope;
            if den.is_zero() {
                return Ok(LineValue::Singular);
            }
            let num = &(s * &data.l_psi_bar) - &(&data.slope * &data.l_psi);
            Ok(LineValue::Value(num.div(&den)?))
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdjointCmData {
    /// `2ℒ_𝔭`.
    pub two_l_p: FieldElement,
    pub phi: CmData,
    pub l_minus_phi: FieldElement,
    pub l_minus_phi_bar: FieldElement,
    /// A square root of `ℒ⁻(φ̄)·ℒ⁻(φ)⁻¹·S_φ̄`, when it lies in the working field.
    pub xi: Option<FieldElement>,
}

#[derive(Debug, Clone)]
pub struct AdjointValue {
    pub jf: PMatrix,
    pub jc: PMatrix,
    /// `(−1)^e det(J_f·J_c⁻¹)`.
    pub dual: FieldElement,
    /// `2ℒ_𝔭·(S_φ·ℒ(φ) − s·ℒ(φ̄)) / (S_φ − s)`.
    pub closed: FieldElement,
}

pub fn adjoint_cm_data(prob: &GaloisProblem) -> Result<AdjointCmData> {
    let spec = prob
        .special
        .adjoint_cm
        .as_ref()
        .ok_or_else(|| SpecialError::NotApplicable("fixture has no adjoint CM data".into()))?;
    let field = &prob.working;
    let chi = line_character(prob, &spec.w1)?;
    let line = eigenspace(prob, &chi, prob.units.rank_total)?;
    if line.len() != 1 {
        return Err(SpecialError::Dimension {
            what: "p-unit line of w1".into(),
            expected: 1,
            found: line.len(),
        });
    }
    let ords = prob.ord_vector();
    let two_l_p = match &spec.l_frak_p {
        Some(x) => x.clone(),
        None => -quotient(&dot(&prob.units.logs, &line[0]), &dot(&ords, &line[0]), "ord_p of the w1 p-unit")?,
    };
    let mut phi = cm_character(prob, &spec.w2)?;
    if let Some(x) = &spec.l_phi {
        phi.l_psi = x.clone();
    }
    if let Some(x) = &spec.l_phi_bar {
        phi.l_psi_bar = x.clone();
    }
    if let Some(x) = &spec.slope_phi {
        phi.slope = x.clone();
    }
    if let Some(x) = &spec.slope_phi_bar {
        phi.slope_bar = x.clone();
    }
    let l_minus_phi = &phi.l_psi - &two_l_p;
    let l_minus_phi_bar = &phi.l_psi_bar - &two_l_p;
    let xi = match &spec.xi {
        Some(x) => Some(x.clone()),
        None => {
            let sq = &quotient(&l_minus_phi_bar, &l_minus_phi, "ℒ⁻(φ)")? * &phi.slope_bar;
            sq.sqrt()?
        }
    };
    let _ = field;
    Ok(AdjointCmData {
        two_l_p,
        phi,
        l_minus_phi,
        l_minus_phi_bar,
        xi,
    })
}

fn homogeneous(field: &Arc<LocalField>, s: &Param) -> (FieldElement, FieldElement) {
    match s {
        Param::Finite(s) => (FieldElement::one(field), s.clone()),
        Param::Infinity => (FieldElement::zero(field), FieldElement::one(field)),
    }
}

/// The value on `W⁺_{s,t} = span(t·w1 + w2 + s·w3)` by the dual cocycle matrices
/// and by the closed form.
pub fn adjoint_cm_value(data: &AdjointCmData, s: &Param, t: &FieldElement) -> Result<Option<AdjointValue>> {
    let field = t.field().clone();
    let (a, b) = homogeneous(&field, s);
    let sl = &data.phi.slope;
    let (l, lb) = (&data.phi.l_psi, &data.phi.l_psi_bar);
    let zero = FieldElement::zero(&field);
    let jf = PMatrix::new(
        &field,
        2,
        2,
        vec![
            data.two_l_p.clone(),
            -(t * lb),
            zero.clone(),
            &(&(sl * l) * &a) - &(&b * lb),
        ],
    );
    let den = &(sl * &a) - &b;
    if den.is_zero() {
        return Ok(None);
    }
    let jc = PMatrix::new(&field, 2, 2, vec![FieldElement::one(&field), -t, zero, den.clone()]);
    let dual = dual_l_invariant(&jf, &jc)?;
    let num = &(&(sl * l) * &a) - &(&b * lb);
    let closed = &data.two_l_p * &num.div(&den)?;
    Ok(Some(AdjointValue { jf, jc, dual, closed }))
}

/// The refinements `W⁺_{−ξ⁻², −ξ⁻¹}` and `W⁺_{−ξ⁻², ξ⁻¹}` of the two non-CM families.
pub fn family_refinements(prob: &GaloisProblem, data: &AdjointCmData) -> Result<[(Refinement, Param, FieldElement); 2]> {
    let xi = data
        .xi
        .as_ref()
        .ok_or_else(|| SpecialError::NotApplicable("ξ is not in the working field".into()))?;
    let family = prob
        .special
        .family
        .as_ref()
        .ok_or_else(|| SpecialError::NotApplicable("fixture has no refinement family".into()))?;
    let s = xi.inverse()?;
    let s_param = Param::Finite(-(&s * &s));
    let t_f = -s.clone();
    let mut f = family.refinement(&s_param, Some(&t_f));
    f.name = "F".into();
    let mut fe = family.refinement(&s_param, Some(&s));
    fe.name = "F_eps".into();
    Ok([(f, s_param.clone(), t_f), (fe, s_param, s)])
}

/// `2ℒ_𝔭·(ℒ⁻(φ̄)ℒ(φ) + ℒ⁻(φ)ℒ(φ̄)) / (ℒ⁻(φ̄) + ℒ⁻(φ))`.
pub fn family_closed_form(data: &AdjointCmData) -> Result<FieldElement> {
    let num = &(&data.l_minus_phi_bar * &data.phi.l_psi) + &(&data.l_minus_phi * &data.phi.l_psi_bar);
    let den = &data.l_minus_phi_bar + &data.l_minus_phi;
    Ok(&data.two_l_p * &quotient(&num, &den, "ℒ⁻(φ) + ℒ⁻(φ̄)")?)
}

/// `(log ε_α·log u_β − log ε_β·log u_α) / (log ε_β·ord u_α)`.
pub fn weight1_regular(
    log_eps_alpha: &FieldElement,
    log_eps_beta: &FieldElement,
    log_u_alpha: &FieldElement,
    log_u_beta: &FieldElement,
    ord_u_alpha: &FieldElement,
) -> Result<FieldElement> {
    let num = &(log_eps_alpha * log_u_beta) - &(log_eps_beta * log_u_alpha);
    quotient(&num, &(log_eps_beta * ord_u_alpha), "log ε_β·ord u_α")
}

/// `(log ε⁻·log u⁺ − log ε⁺·log u⁻) / (log ε⁺·ord u⁻)`.
pub fn weight1_irregular(
    log_eps_minus: &FieldElement,
    log_eps_plus: &FieldElement,
    log_u_minus: &FieldElement,
    log_u_plus: &FieldElement,
    ord_u_minus: &FieldElement,
) -> Result<FieldElement> {
    let num = &(log_eps_minus * log_u_plus) - &(log_eps_plus * log_u_minus);
    quotient(&num, &(log_eps_plus * ord_u_minus), "log ε⁺·ord u⁻")
}

/// One closed-form value compared against an engine run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub value: String,
    pub digits: i64,
    pub agrees: bool,
}

fn compare(name: &str, engine: &LInvariantReport, value: &FieldElement) -> CrossCheck {
    let digits = agreement_digits(engine.value(), value);
    let need = engine.certified_precision.min(value.relative_precision().unwrap_or(i64::MAX)) - 3;
    CrossCheck {
        name: name.into(),
        value: value.to_string(),
        digits,
        agrees: digits >= need.max(1),
    }
}

/// Every closed form applicable to the refinement of `report`.
pub fn cross_checks(prob: &GaloisProblem, r: &Refinement, report: &LInvariantReport) -> Vec<std::result::Result<CrossCheck, String>> {
    let mut out = Vec::new();
    if prob.d_plus() == 0 {
        out.push(
            gross_regulator(prob)
                .map(|(rp, e)| compare("gross", report, &if e % 2 == 1 { -rp } else { rp }))
                .map_err(|e| format!("gross: {e}")),
        );
    }
    let located = match (&prob.special.family, r.basis.as_slice()) {
        (Some(family), [v]) => family.locate(v),
        _ => None,
    };
    if let (Some(_), Some((s, _))) = (&prob.special.cm, &located) {
        out.push(
            cm_data(prob)
                .and_then(|d| cm_line(&d, s))
                .map_err(|e| format!("cm line: {e}"))
                .and_then(|v| match v {
                    LineValue::Value(x) => Ok(compare("cm line", report, &x)),
                    LineValue::Singular => Err("cm line: singular".into()),
                }),
        );
    }
    if let (Some(_), Some((s, t))) = (&prob.special.adjoint_cm, &located) {
        let value = adjoint_cm_data(prob).and_then(|d| {
            let t = t.clone().unwrap_or_else(|| FieldElement::zero(&prob.working));
            adjoint_cm_value(&d, s, &t)
        });
        match value {
            Ok(Some(v)) => {
                out.push(Ok(compare("adjoint closed form", report, &v.closed)));
                out.push(Ok(compare("adjoint dual", report, &v.dual)));
            }
            Ok(None) => out.push(Err("adjoint: singular".into())),
            Err(e) => out.push(Err(format!("adjoint: {e}"))),
        }
    }
    out
}
