//! Finite groups as multiplication tables, matrix representations, fixed
//! spaces, equivariant homomorphisms and group-algebra idempotents.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::linalg::{rational_kernel, LinalgError, PMatrix, Vector};
use crate::padic::{FieldElement, LocalField, PadicError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("invalid group: {}", .0.join("; "))]
    InvalidGroup(Vec<String>),
    #[error("{name}: matrix({g})·matrix({h}) ≠ matrix({g}·{h})")]
    NotHomomorphism { name: String, g: usize, h: usize },
    #[error("{name}: matrix of the identity is not the identity")]
    IdentityMatrix { name: String },
    #[error("{name}: expected {expected} matrices of size {dim}x{dim}")]
    Shape { name: String, expected: usize, dim: usize },
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{0} is not certifiably an integer")]
    NotInteger(String),
    #[error("idempotent parameter β must be nonzero")]
    ZeroBeta,
    #[error("character inconsistent with representation: {0}")]
    Character(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

pub type Result<T> = std::result::Result<T, GaloisError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    mult: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    gp: Vec<usize>,
    frobenius: usize,
    conjugation: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupReport {
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl FiniteGroup {
    /// Builds a group without validation; see [`validate_group`].
    pub fn unchecked(mult: Vec<Vec<usize>>, frobenius: usize, conjugation: usize, gp: Vec<usize>) -> Self {
        let order = mult.len();
        let inverse = (0..order)
            .map(|g| {
                mult.get(g)
                    .and_then(|row| row.iter().position(|&x| x == 0))
                    .unwrap_or(0)
            })
            .collect();
        let mut gp = gp;
        gp.sort_unstable();
        gp.dedup();
        FiniteGroup {
            order,
            mult,
            inverse,
            gp,
            frobenius,
            conjugation,
        }
    }

    pub fn new(mult: Vec<Vec<usize>>, frobenius: usize, conjugation: usize, gp: Vec<usize>) -> Result<Self> {
        let g = Self::unchecked(mult, frobenius, conjugation, gp);
        let report = validate_group(&g);
        if report.passed() {
            Ok(g)
        } else {
            Err(GaloisError::InvalidGroup(report.violations))
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.mult
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn frobenius(&self) -> usize {
        self.frobenius
    }

    pub fn conjugation(&self) -> usize {
        self.conjugation
    }

    pub fn decomposition_group(&self) -> &[usize] {
        &self.gp
    }

    pub fn power(&self, g: usize, k: usize) -> usize {
        (0..k).fold(0, |acc, _| self.mul(acc, g))
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut n = 1;
        while x != 0 {
            x = self.mul(x, g);
            n += 1;
            if n > self.order {
                break;
            }
        }
        n
    }

    /// `g, g², …, g^m = 1`.
    pub fn cyclic_powers(&self, g: usize) -> Vec<usize> {
        let m = self.element_order(g);
        let mut out = Vec::with_capacity(m);
        let mut x = g;
        for _ in 0..m {
            out.push(x);
            x = self.mul(x, g);
        }
        out
    }

    pub fn subgroup_generated(&self, elements: &[usize]) -> Vec<usize> {
        let mut members = vec![false; self.order];
        members[0] = true;
        let mut list = vec![0];
        let mut i = 0;
        while i < list.len() {
            let a = list[i];
            for &g in elements {
                let b = self.mul(a, g);
                if !members[b] {
                    members[b] = true;
                    list.push(b);
                }
            }
            i += 1;
        }
        list.sort_unstable();
        list
    }

    /// A generating set, chosen greedily in index order.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut sub = vec![0];
        for g in 1..self.order {
            if !sub.contains(&g) {
                gens.push(g);
                sub = self.subgroup_generated(&gens);
            }
        }
        gens
    }

    pub fn gp_index(&self) -> usize {
        self.order / self.gp.len().max(1)
    }

    /// Left cosets `g·G_p`, each listed by its sorted elements, ordered by smallest member.
    pub fn left_cosets(&self, sub: &[usize]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.order];
        let mut out = Vec::new();
        for g in 0..self.order {
            if seen[g] {
                continue;
            }
            let mut c: Vec<usize> = sub.iter().map(|&h| self.mul(g, h)).collect();
            c.sort_unstable();
            for &x in &c {
                seen[x] = true;
            }
            out.push(c);
        }
        out
    }
}

/// Checks every group-law invariant and the distinguished elements.
pub fn validate_group(g: &FiniteGroup) -> GroupReport {
    let mut report = GroupReport::default();
    let n = g.order;
    if n == 0 {
        report.violations.push("empty multiplication table".into());
        return report;
    }
    for (a, row) in g.mult.iter().enumerate() {
        if row.len() != n {
            report.violations.push(format!("row {a} has length {} instead of {n}", row.len()));
        }
        if let Some(&x) = row.iter().find(|&&x| x >= n) {
            report.violations.push(format!("row {a} contains out-of-range index {x}"));
        }
    }
    if !report.passed() {
        return report;
    }
    for a in 0..n {
        if g.mul(0, a) != a || g.mul(a, 0) != a {
            report.violations.push(format!("index 0 is not an identity for {a}"));
            break;
        }
    }
    for a in 0..n {
        let mut row_seen = vec![false; n];
        let mut col_seen = vec![false; n];
        for b in 0..n {
            row_seen[g.mul(a, b)] = true;
            col_seen[g.mul(b, a)] = true;
        }
        if row_seen.contains(&false) || col_seen.contains(&false) {
            report.violations.push(format!("element {a} has no two-sided inverse"));
        }
    }
    let mut assoc = 0;
    'outer: for a in 0..n {
        for b in 0..n {
            let ab = g.mul(a, b);
            for c in 0..n {
                if g.mul(ab, c) != g.mul(a, g.mul(b, c)) {
                    report
                        .violations
                        .push(format!("associativity fails at ({a}, {b}, {c})"));
                    assoc += 1;
                    if assoc >= 5 {
                        break 'outer;
                    }
                }
            }
        }
    }
    if !report.passed() {
        return report;
    }
    for a in 0..n {
        let i = g.inverse[a];
        if g.mul(a, i) != 0 || g.mul(i, a) != 0 {
            report.violations.push(format!("element {a} has no two-sided inverse"));
        }
    }
    if g.conjugation >= n {
        report.violations.push(format!("conjugation index {} out of range", g.conjugation));
    } else if g.mul(g.conjugation, g.conjugation) != 0 {
        report
            .violations
            .push(format!("conjugation {} does not square to the identity", g.conjugation));
    }
    if g.frobenius >= n {
        report.violations.push(format!("frobenius index {} out of range", g.frobenius));
    } else if g.gp.iter().any(|&x| x >= n) {
        report.violations.push("decomposition group has out-of-range indices".into());
    } else {
        let cyc = g.subgroup_generated(&[g.frobenius]);
        if cyc != g.gp {
            report.violations.push(format!(
                "decomposition group {:?} is not generated by frobenius {} (which generates {:?})",
                g.gp, g.frobenius, cyc
            ));
        } else {
            report.notes.push(format!(
                "decomposition group cyclic of order {} generated by frobenius",
                g.gp.len()
            ));
        }
    }
    report
}

/// A representation by matrices over one coefficient field.
#[derive(Debug, Clone)]
pub struct Representation {
    name: String,
    field: Arc<LocalField>,
    dim: usize,
    matrices: Vec<PMatrix>,
    rational: Option<Vec<Vec<Vec<BigRational>>>>,
}

impl Representation {
    pub fn new(name: &str, field: &Arc<LocalField>, dim: usize, matrices: Vec<PMatrix>) -> Self {
        Representation {
            name: name.into(),
            field: field.clone(),
            dim,
            matrices,
            rational: None,
        }
    }

    pub fn from_rational(
        name: &str,
        field: &Arc<LocalField>,
        dim: usize,
        mats: Vec<Vec<Vec<BigRational>>>,
    ) -> Self {
        let matrices = mats.iter().map(|m| PMatrix::from_rationals(field, m)).collect();
        Representation {
            name: name.into(),
            field: field.clone(),
            dim,
            matrices,
            rational: Some(mats),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> &Arc<LocalField> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, g: usize) -> &PMatrix {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[PMatrix] {
        &self.matrices
    }

    pub fn rational_matrices(&self) -> Option<&[Vec<Vec<BigRational>>]> {
        self.rational.as_deref()
    }

    pub fn character(&self, g: usize) -> FieldElement {
        let m = &self.matrices[g];
        let mut acc = FieldElement::zero(&self.field);
        for i in 0..self.dim {
            acc = &acc + m.get(i, i);
        }
        acc
    }

    /// Checks shapes, `ρ(1) = 1` and `ρ(g)ρ(h) = ρ(gh)` for all pairs.
    pub fn check_homomorphism(&self, group: &FiniteGroup) -> Result<()> {
        let n = group.order();
        let shape_err = || GaloisError::Shape {
            name: self.name.clone(),
            expected: n,
            dim: self.dim,
        };
        if self.matrices.len() != n {
            return Err(shape_err());
        }
        if self.matrices.iter().any(|m| m.rows() != self.dim || m.cols() != self.dim) {
            return Err(shape_err());
        }
        if let Some(rat) = &self.rational {
            let id: Vec<Vec<BigRational>> = (0..self.dim)
                .map(|i| (0..self.dim).map(|j| rat_int(i64::from(i == j))).collect())
                .collect();
            if rat[0] != id {
                return Err(GaloisError::IdentityMatrix {
                    name: self.name.clone(),
                });
            }
            for g in 0..n {
                for h in 0..n {
                    if rat_mul(&rat[g], &rat[h]) != rat[group.mul(g, h)] {
                        return Err(GaloisError::NotHomomorphism {
                            name: self.name.clone(),
                            g,
                            h,
                        });
                    }
                }
            }
            return Ok(());
        }
        if !self.matrices[0]
            .sub(&PMatrix::identity(&self.field, self.dim))?
            .is_zero()
        {
            return Err(GaloisError::IdentityMatrix {
                name: self.name.clone(),
            });
        }
        for g in 0..n {
            for h in 0..n {
                let prod = self.matrices[g].mul(&self.matrices[h])?;
                if !prod.sub(&self.matrices[group.mul(g, h)])?.is_zero() {
                    return Err(GaloisError::NotHomomorphism {
                        name: self.name.clone(),
                        g,
                        h,
                    });
                }
            }
        }
        Ok(())
    }

    /// `dim ker(ρ(τ) − 1)`, certified against the trace count.
    pub fn d_plus(&self, group: &FiniteGroup) -> Result<usize> {
        fixed_dimension(self, group, &[group.conjugation()])
    }
}

pub(crate) fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn rat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = BigRational::zero();
                    for (k, bk) in b.iter().enumerate() {
                        acc += &a[i][k] * &bk[j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// The unique integer in `0..=bound` equal to `x / denom`, if certified.
pub fn certify_integer(x: &FieldElement, denom: usize, bound: usize, what: &str) -> Result<usize> {
    let field = x.field();
    let d = FieldElement::from_int(field, denom as i64);
    let hits: Vec<usize> = (0..=bound)
        .filter(|&k| {
            let kk = &d * &FieldElement::from_int(field, k as i64);
            x.agrees_with(&kk)
        })
        .collect();
    match hits.as_slice() {
        [k] => Ok(*k),
        _ => Err(GaloisError::NotInteger(format!("{what} = {x} / {denom}"))),
    }
}

/// `dim` of the subspace fixed by the subgroup generated by `elements`, from traces.
pub fn fixed_dimension(rep: &Representation, group: &FiniteGroup, elements: &[usize]) -> Result<usize> {
    let sub = group.subgroup_generated(elements);
    if let Some(rat) = rep.rational_matrices() {
        let mut s = BigRational::zero();
        for &h in &sub {
            for i in 0..rep.dim() {
                s += &rat[h][i][i];
            }
        }
        let v = s / rat_int(sub.len() as i64);
        if !v.is_integer() {
            return Err(GaloisError::NotInteger(format!("fixed dimension {v}")));
        }
        return Ok(v.to_integer().try_into().unwrap_or(usize::MAX));
    }
    let mut s = FieldElement::zero(rep.field());
    for &h in &sub {
        s = &s + &rep.character(h);
    }
    certify_integer(&s, sub.len(), rep.dim(), "fixed dimension")
}

/// Basis of `∩ ker(ρ(g) − 1)` over `elements`.
pub fn fixed_subspace(rep: &Representation, group: &FiniteGroup, elements: &[usize]) -> Result<Vec<Vector>> {
    let expected = fixed_dimension(rep, group, elements)?;
    let d = rep.dim();
    let field = rep.field();
    let basis = if let Some(rat) = rep.rational_matrices() {
        let mut rows = Vec::new();
        for &g in elements {
            for i in 0..d {
                rows.push(
                    (0..d)
                        .map(|j| &rat[g][i][j] - rat_int(i64::from(i == j)))
                        .collect::<Vec<_>>(),
                );
            }
        }
        rational_kernel(&rows, d)
            .into_iter()
            .map(|v| v.into_iter().map(|x| FieldElement::from_int(field, x)).collect())
            .collect()
    } else {
        let mut rows = Vec::new();
        for &g in elements {
            let m = rep.matrix(g).sub(&PMatrix::identity(field, d))?;
            rows.extend(m.row_vectors());
        }
        if rows.is_empty() {
            return Ok((0..d).map(|i| crate::linalg::unit_vector(field, d, i)).collect());
        }
        PMatrix::from_rows(field, &rows).kernel_basis_expecting(Some(expected))?
    };
    if basis.len() != expected {
        return Err(GaloisError::DimensionMismatch {
            what: format!("fixed space of {} under {:?}", rep.name(), elements),
            expected,
            found: basis.len(),
        });
    }
    Ok(basis)
}

/// `dim Hom_G(W, U)` from characters.
pub fn hom_dimension(w: &Representation, u: &Representation, group: &FiniteGroup) -> Result<usize> {
    if let (Some(rw), Some(ru)) = (w.rational_matrices(), u.rational_matrices()) {
        let mut s = BigRational::zero();
        for g in 0..group.order() {
            let gi = group.inv(g);
            let tw: BigRational = (0..w.dim()).map(|i| rw[gi][i][i].clone()).sum();
            let tu: BigRational = (0..u.dim()).map(|i| ru[g][i][i].clone()).sum();
            s += tw * tu;
        }
        let v = s / rat_int(group.order() as i64);
        if !v.is_integer() {
            return Err(GaloisError::NotInteger(format!("Hom dimension {v}")));
        }
        return Ok(v.to_integer().try_into().unwrap_or(usize::MAX));
    }
    let mut s = FieldElement::zero(w.field());
    for g in 0..group.order() {
        s = &s + &(&w.character(group.inv(g)) * &u.character(g));
    }
    certify_integer(&s, group.order(), w.dim() * u.dim(), "Hom dimension")
}

/// Basis of `{X : U(g)·X = X·W(g) for all g}` as `dim U × dim W` matrices.
pub fn equivariant_homs(w: &Representation, u: &Representation, group: &FiniteGroup) -> Result<Vec<PMatrix>> {
    let expected = hom_dimension(w, u, group)?;
    let (dw, du) = (w.dim(), u.dim());
    let field = w.field();
    let gens = group.generators();
    let nvars = du * dw;
    let basis: Vec<Vector> =
        if let (Some(rw), Some(ru)) = (w.rational_matrices(), u.rational_matrices()) {
            let mut rows = Vec::new();
            for &g in &gens {
                for i in 0..du {
                    for j in 0..dw {
                        let mut row = vec![BigRational::zero(); nvars];
                        for k in 0..du {
                            row[k * dw + j] += &ru[g][i][k];
                        }
                        for k in 0..dw {
                            row[i * dw + k] -= &rw[g][k][j];
                        }
                        rows.push(row);
                    }
                }
            }
            rational_kernel(&rows, nvars)
                .into_iter()
                .map(|v| v.into_iter().map(|x| FieldElement::from_int(field, x)).collect())
                .collect()
        } else {
            let mut rows = Vec::new();
            for &g in &gens {
                let (ug, wg) = (u.matrix(g), w.matrix(g));
                for i in 0..du {
                    for j in 0..dw {
                        let mut row = vec![FieldElement::zero(field); nvars];
                        for k in 0..du {
                            row[k * dw + j] = &row[k * dw + j] + ug.get(i, k);
                        }
                        for k in 0..dw {
                            row[i * dw + k] = &row[i * dw + k] - wg.get(k, j);
                        }
                        rows.push(row);
                    }
                }
            }
            if rows.is_empty() {
                (0..nvars).map(|i| crate::linalg::unit_vector(field, nvars, i)).collect()
            } else {
                PMatrix::from_rows(field, &rows).kernel_basis_expecting(Some(expected))?
            }
        };
    if basis.len() != expected {
        return Err(GaloisError::DimensionMismatch {
            what: format!("Hom_G({}, {})", w.name(), u.name()),
            expected,
            found: basis.len(),
        });
    }
    let homs: Vec<PMatrix> = basis
        .into_iter()
        .map(|v| PMatrix::new(field, du, dw, v))
        .collect();
    for x in &homs {
        for g in 0..group.order() {
            let lhs = u.matrix(g).mul(x)?;
            let rhs = x.mul(w.matrix(g))?;
            if !lhs.sub(&rhs)?.is_zero() {
                return Err(GaloisError::Linalg(LinalgError::Shape(format!(
                    "equivariance residual nonzero at g = {g}"
                ))));
            }
        }
    }
    Ok(homs)
}

pub enum Idempotent<'a> {
    /// `(dim ρ/|G|) Σ χ_ρ(g⁻¹) g`.
    Isotypic(&'a Representation),
    /// `Σ_{i=1}^{m} β^{−i} Frob^i`.
    WPlus(FieldElement),
    /// `Σ_{i=1}^{m} Frob^i`.
    WOne,
}

/// Applies a group-algebra element through the action on a module.
pub fn apply_idempotent(
    group: &FiniteGroup,
    action: &Representation,
    kind: &Idempotent<'_>,
    u: &[FieldElement],
) -> Result<Vector> {
    let field = action.field();
    let d = action.dim();
    let mut acc = vec![FieldElement::zero(field); d];
    let mut add_term = |c: &FieldElement, g: usize| {
        let v = action.matrix(g).mul_vec(u);
        for (a, x) in acc.iter_mut().zip(v) {
            *a = &*a + &(c * &x);
        }
    };
    match kind {
        Idempotent::Isotypic(rho) => {
            rho.check_homomorphism(group)
                .map_err(|e| GaloisError::Character(e.to_string()))?;
            if !rho.field().same_as(field) {
                return Err(GaloisError::Character("coefficient fields differ".into()));
            }
            let scale = FieldElement::from_rational(
                field,
                &BigRational::new(BigInt::from(rho.dim()), BigInt::from(group.order())),
            );
            for g in 0..group.order() {
                let c = &scale * &rho.character(group.inv(g));
                add_term(&c, g);
            }
        }
        Idempotent::WPlus(beta) => {
            if beta.is_zero() {
                return Err(GaloisError::ZeroBeta);
            }
            let binv = beta.inverse()?;
            let mut c = FieldElement::one(field);
            for g in group.cyclic_powers(group.frobenius()) {
                c = &c * &binv;
                add_term(&c, g);
            }
        }
        Idempotent::WOne => {
            let one = FieldElement::one(field);
            for g in group.cyclic_powers(group.frobenius()) {
                add_term(&one, g);
            }
        }
    }
    Ok(acc)
}

/// Closes a set of permutations under composition, `(ab)(x) = a(b(x))`.
///
/// Returns the multiplication table and the permutations in index order, identity first.
pub fn permutation_table(generators: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n = generators.first().map_or(0, Vec::len);
    let compose = |a: &[usize], b: &[usize]| -> Vec<usize> { b.iter().map(|&x| a[x]).collect() };
    let mut elems: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut i = 0;
    while i < elems.len() {
        for g in generators {
            let c = compose(g, &elems[i]);
            if !elems.contains(&c) {
                elems.push(c);
            }
        }
        i += 1;
    }
    let mult = elems
        .iter()
        .map(|a| {
            elems
                .iter()
                .map(|b| {
                    let c = compose(a, b);
                    elems.iter().position(|x| *x == c).unwrap_or(0)
                })
                .collect()
        })
        .collect();
    (mult, elems)
}
