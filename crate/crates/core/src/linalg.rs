//! Linear algebra over a [`LocalField`] with certified pivot decisions.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::padic::{FieldElement, LocalField, PadicError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("ambiguous rank: column {column} is zero to precision {precision} but not provably zero")]
    AmbiguousRank { column: usize, precision: i64 },
    #[error("certified rank {found} differs from expected rank {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("vectors are dependent at known precision")]
    Dependent,
    #[error("only {reached} of {target} basis vectors could be certified")]
    Incomplete { reached: usize, target: usize },
    #[error("singular matrix")]
    Singular,
    #[error(transparent)]
    Padic(#[from] PadicError),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub type Vector = Vec<FieldElement>;

#[derive(Clone)]
pub struct PMatrix {
    field: Arc<LocalField>,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

#[derive(Debug, Clone)]
pub struct Echelon {
    pub matrix: PMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub basis: Vec<Vector>,
    /// Indices into the candidate list of the vectors that were kept.
    pub chosen: Vec<usize>,
}

pub fn dot(a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
    assert_eq!(a.len(), b.len());
    let mut acc = FieldElement::zero(a[0].field());
    for (x, y) in a.iter().zip(b) {
        acc = &acc + &(x * y);
    }
    acc
}

pub fn scale_vec(c: &FieldElement, v: &[FieldElement]) -> Vector {
    v.iter().map(|x| c * x).collect()
}

pub fn add_vec(a: &[FieldElement], b: &[FieldElement]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_vec(a: &[FieldElement], b: &[FieldElement]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn unit_vector(field: &Arc<LocalField>, dim: usize, i: usize) -> Vector {
    (0..dim)
        .map(|k| FieldElement::from_int(field, i64::from(k == i)))
        .collect()
}

pub fn vector_is_zero(v: &[FieldElement]) -> bool {
    v.iter().all(FieldElement::is_zero)
}

fn min_valuation_entry<'a>(
    items: impl Iterator<Item = (usize, &'a FieldElement)>,
) -> (Option<(usize, i64)>, Option<i64>) {
    let mut best: Option<(usize, i64)> = None;
    let mut zeroish: Option<i64> = None;
    for (i, x) in items {
        match x.val_pi() {
            Some(v) => {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
            None => {
                if let Some(p) = x.precision() {
                    zeroish = Some(zeroish.map_or(p, |q: i64| q.min(p)));
                }
            }
        }
    }
    (best, zeroish)
}

impl PMatrix {
    pub fn new(field: &Arc<LocalField>, rows: usize, cols: usize, entries: Vec<FieldElement>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        PMatrix {
            field: field.clone(),
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(field: &Arc<LocalField>, rows: usize, cols: usize) -> Self {
        Self::new(field, rows, cols, vec![FieldElement::zero(field); rows * cols])
    }

    pub fn identity(field: &Arc<LocalField>, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::one(field));
        }
        m
    }

    pub fn from_rows(field: &Arc<LocalField>, rows: &[Vector]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let entries = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged rows");
                r.iter().cloned()
            })
            .collect();
        Self::new(field, rows.len(), cols, entries)
    }

    /// The matrix whose columns are the given vectors.
    pub fn from_cols(field: &Arc<LocalField>, rows: usize, cols: &[Vector]) -> Self {
        Self::from_rows(field, cols).transpose_with_rows(rows)
    }

    fn transpose_with_rows(&self, rows: usize) -> Self {
        if self.rows == 0 {
            return Self::zeros(&self.field, rows, 0);
        }
        self.transpose()
    }

    pub fn from_ints(field: &Arc<LocalField>, rows: &[Vec<i64>]) -> Self {
        let rows: Vec<Vector> = rows
            .iter()
            .map(|r| r.iter().map(|&x| FieldElement::from_int(field, x)).collect())
            .collect();
        Self::from_rows(field, &rows)
    }

    pub fn from_rationals(field: &Arc<LocalField>, rows: &[Vec<BigRational>]) -> Self {
        let rows: Vec<Vector> = rows
            .iter()
            .map(|r| r.iter().map(|x| FieldElement::from_rational(field, x)).collect())
            .collect();
        Self::from_rows(field, &rows)
    }

    pub fn field(&self) -> &Arc<LocalField> {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: FieldElement) {
        self.entries[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> Vector {
        self.entries[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vectors(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn col_vectors(&self) -> Vec<Vector> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        Self::new(&self.field, self.cols, self.rows, entries)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = FieldElement::zero(&self.field);
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * other.get(k, j));
                }
                out.push(acc);
            }
        }
        Ok(Self::new(&self.field, self.rows, other.cols, out))
    }

    pub fn mul_vec(&self, v: &[FieldElement]) -> Vector {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = FieldElement::zero(&self.field);
                for (k, x) in v.iter().enumerate() {
                    acc = &acc + &(self.get(i, k) * x);
                }
                acc
            })
            .collect()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::Shape("difference of unequal shapes".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(Self::new(&self.field, self.rows, self.cols, entries))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::Shape("sum of unequal shapes".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(Self::new(&self.field, self.rows, self.cols, entries))
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        let entries = self.entries.iter().map(|x| c * x).collect();
        Self::new(&self.field, self.rows, self.cols, entries)
    }

    /// Rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        let mut entries = Vec::new();
        for i in r0..r1 {
            for j in c0..c1 {
                entries.push(self.get(i, j).clone());
            }
        }
        Self::new(&self.field, r1 - r0, c1 - c0, entries)
    }

    /// `[[a, b], [c, d]]` from four blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(LinalgError::Shape("incompatible blocks".into()));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        let mut m = Self::zeros(&a.field, rows, cols);
        for (blk, r0, c0) in [(a, 0, 0), (b, 0, a.cols), (c, a.rows, 0), (d, a.rows, a.cols)] {
            for i in 0..blk.rows {
                for j in 0..blk.cols {
                    m.set(r0 + i, c0 + j, blk.get(i, j).clone());
                }
            }
        }
        Ok(m)
    }

    /// Smallest absolute precision among the entries; `None` if all are exact.
    pub fn min_precision(&self) -> Option<i64> {
        self.entries.iter().filter_map(FieldElement::precision).min()
    }

    /// True when every entry is zero to its known precision.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FieldElement::is_zero)
    }

    pub fn row_reduce(&self) -> Result<Echelon> {
        self.row_reduce_expecting(None)
    }

    /// Reduced row echelon form. With an expected rank, columns that are zero
    /// to known precision are skipped and the certified rank must match.
    pub fn row_reduce_expecting(&self, expected: Option<usize>) -> Result<Echelon> {
        let mut m: Vec<Vector> = self.row_vectors();
        let mut pivots = Vec::new();
        let mut ambiguous: Option<(usize, i64)> = None;
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let (best, zeroish) = min_valuation_entry((r..self.rows).map(|i| (i, &m[i][c])));
            let Some((i, _)) = best else {
                if let Some(p) = zeroish {
                    ambiguous.get_or_insert((c, p));
                }
                continue;
            };
            m.swap(i, r);
            let piv = m[r][c].clone();
            for k in 0..self.rows {
                if k == r {
                    continue;
                }
                let factor = m[k][c].clone();
                if factor.is_zero() && factor.is_exact() {
                    continue;
                }
                for j in 0..self.cols {
                    let t = &factor * &m[r][j];
                    m[k][j] = &(&piv * &m[k][j]) - &t;
                }
                m[k][c] = FieldElement::zero(&self.field);
            }
            pivots.push(c);
            r += 1;
        }
        for (i, &c) in pivots.iter().enumerate() {
            let inv = m[i][c].inverse()?;
            let row: Vector = m[i].iter().map(|x| x * &inv).collect();
            m[i] = row;
            m[i][c] = FieldElement::one(&self.field);
        }
        let rank = pivots.len();
        match expected {
            None => {
                if let Some((column, precision)) = ambiguous {
                    return Err(LinalgError::AmbiguousRank { column, precision });
                }
            }
            Some(k) if rank < k => {
                let (column, precision) = ambiguous.unwrap_or((self.cols, 0));
                return Err(LinalgError::AmbiguousRank { column, precision });
            }
            Some(k) if rank > k => {
                return Err(LinalgError::RankMismatch {
                    expected: k,
                    found: rank,
                })
            }
            _ => {}
        }
        Ok(Echelon {
            matrix: Self::from_rows_shaped(&self.field, self.rows, self.cols, &m),
            rank,
            pivots,
        })
    }

    fn from_rows_shaped(field: &Arc<LocalField>, rows: usize, cols: usize, m: &[Vector]) -> Self {
        if rows == 0 {
            return Self::zeros(field, 0, cols);
        }
        Self::from_rows(field, m)
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(self.row_reduce()?.rank)
    }

    pub fn kernel_basis(&self) -> Result<Vec<Vector>> {
        self.kernel_basis_expecting(None)
    }

    /// Right kernel; an expected dimension certifies the rank decision.
    pub fn kernel_basis_expecting(&self, nullity: Option<usize>) -> Result<Vec<Vector>> {
        let expected = match nullity {
            Some(n) if n > self.cols => {
                return Err(LinalgError::RankMismatch {
                    expected: 0,
                    found: 0,
                })
            }
            Some(n) => Some(self.cols - n),
            None => None,
        };
        let ech = self.row_reduce_expecting(expected)?;
        let free: Vec<usize> = (0..self.cols).filter(|c| !ech.pivots.contains(c)).collect();
        Ok(free
            .iter()
            .map(|&fc| {
                let mut v = vec![FieldElement::zero(&self.field); self.cols];
                v[fc] = FieldElement::one(&self.field);
                for (i, &pc) in ech.pivots.iter().enumerate() {
                    v[pc] = -ech.matrix.get(i, fc);
                }
                v
            })
            .collect())
    }

    /// Determinant by fraction-free elimination with full valuation pivoting.
    pub fn determinant(&self) -> Result<FieldElement> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut m = self.row_vectors();
        let mut det = FieldElement::one(&self.field);
        let mut scale = FieldElement::one(&self.field);
        for k in 0..n {
            let mut best: Option<(usize, usize, i64)> = None;
            let mut ambiguous = false;
            for (i, row) in m.iter().enumerate().skip(k) {
                for (j, x) in row.iter().enumerate().skip(k) {
                    match x.val_pi() {
                        Some(v) if best.is_none_or(|(_, _, b)| v < b) => best = Some((i, j, v)),
                        None if !x.is_exact() => ambiguous = true,
                        _ => {}
                    }
                }
            }
            let Some((i, j, _)) = best else {
                return if ambiguous {
                    Err(LinalgError::Padic(PadicError::PrecisionExhausted))
                } else {
                    Ok(FieldElement::zero(&self.field))
                };
            };
            if i != k {
                m.swap(i, k);
                det = -&det;
            }
            if j != k {
                for row in m.iter_mut() {
                    row.swap(j, k);
                }
                det = -&det;
            }
            let piv = m[k][k].clone();
            det = &det * &piv;
            for r in k + 1..n {
                let factor = m[r][k].clone();
                if factor.is_zero() && factor.is_exact() {
                    continue;
                }
                for c in k + 1..n {
                    let t = &factor * &m[k][c];
                    m[r][c] = &(&piv * &m[r][c]) - &t;
                }
                scale = &scale * &piv;
            }
        }
        Ok(det.div(&scale)?)
    }

    /// Solves `self · X = b` for square `self`.
    pub fn solve(&self, b: &Self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if b.rows != self.rows {
            return Err(LinalgError::Shape("right-hand side rows".into()));
        }
        let n = self.rows;
        let w = b.cols;
        let mut a = self.row_vectors();
        let mut rhs = b.row_vectors();
        for k in 0..n {
            let (best, zeroish) = min_valuation_entry((k..n).map(|i| (i, &a[i][k])));
            let Some((i, _)) = best else {
                return Err(if zeroish.is_some() {
                    LinalgError::Padic(PadicError::PrecisionExhausted)
                } else {
                    LinalgError::Singular
                });
            };
            a.swap(i, k);
            rhs.swap(i, k);
            let inv = a[k][k].inverse()?;
            for r in k + 1..n {
                let factor = &a[r][k] * &inv;
                if factor.is_zero() && factor.is_exact() {
                    continue;
                }
                for c in k..n {
                    let t = &factor * &a[k][c];
                    a[r][c] = &a[r][c] - &t;
                }
                for c in 0..w {
                    let t = &factor * &rhs[k][c];
                    rhs[r][c] = &rhs[r][c] - &t;
                }
            }
        }
        let mut x = vec![vec![FieldElement::zero(&self.field); w]; n];
        for k in (0..n).rev() {
            let inv = a[k][k].inverse()?;
            for c in 0..w {
                let mut acc = rhs[k][c].clone();
                for j in k + 1..n {
                    acc = &acc - &(&a[k][j] * &x[j][c]);
                }
                x[k][c] = &acc * &inv;
            }
        }
        Ok(Self::from_rows_shaped(&self.field, n, w, &x))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(&self.field, self.rows))
    }

    /// Rows of `self` forming a certified invertible `rank × rank` minor.
    pub fn pivot_rows(&self, rank: usize) -> Result<Vec<usize>> {
        let ech = self.transpose().row_reduce_expecting(Some(rank))?;
        Ok(ech.pivots)
    }
}

impl fmt::Debug for PMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Incremental span used for greedy completions.
pub struct Span {
    field: Arc<LocalField>,
    dim: usize,
    rows: Vec<(usize, Vector)>,
}

impl Span {
    pub fn new(field: &Arc<LocalField>, dim: usize) -> Self {
        Span {
            field: field.clone(),
            dim,
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `v` reduced against the span, up to a nonzero scalar.
    pub fn residual(&self, v: &[FieldElement]) -> Vector {
        assert_eq!(v.len(), self.dim);
        let mut r = v.to_vec();
        for (pc, row) in &self.rows {
            let c = r[*pc].clone();
            if c.is_zero() && c.is_exact() {
                continue;
            }
            let piv = &row[*pc];
            for (x, y) in r.iter_mut().zip(row) {
                *x = &(piv * &*x) - &(&c * y);
            }
            r[*pc] = FieldElement::zero(&self.field);
        }
        r
    }

    /// Adds `v` if its residual has a certified nonzero entry.
    pub fn try_add(&mut self, v: &[FieldElement]) -> Result<bool> {
        let r = self.residual(v);
        let (best, _) = min_valuation_entry(r.iter().enumerate());
        let Some((pc, _)) = best else {
            return Ok(false);
        };
        self.rows.push((pc, r));
        Ok(true)
    }
}

/// Extends independent `sub` greedily by the candidates, in order, up to `target` vectors.
pub fn complete_from(
    field: &Arc<LocalField>,
    dim: usize,
    sub: &[Vector],
    candidates: &[Vector],
    target: usize,
) -> Result<Completion> {
    let mut span = Span::new(field, dim);
    for v in sub {
        if !span.try_add(v)? {
            return Err(LinalgError::Dependent);
        }
    }
    let mut basis = sub.to_vec();
    let mut chosen = Vec::new();
    for (i, v) in candidates.iter().enumerate() {
        if basis.len() >= target {
            break;
        }
        if span.try_add(v)? {
            basis.push(v.clone());
            chosen.push(i);
        }
    }
    if basis.len() < target {
        return Err(LinalgError::Incomplete {
            reached: basis.len(),
            target,
        });
    }
    Ok(Completion { basis, chosen })
}

/// Completes `sub` to a basis of the whole space with standard basis vectors.
pub fn complete_basis(field: &Arc<LocalField>, sub: &[Vector], dim: usize) -> Result<Completion> {
    let std: Vec<Vector> = (0..dim).map(|i| unit_vector(field, dim, i)).collect();
    complete_from(field, dim, sub, &std, dim)
}

/// Exact right kernel of a rational matrix, as integer vectors.
pub fn rational_kernel(rows: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigInt>> {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(i) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(i, r);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for k in 0..m.len() {
            if k != r && !m[k][c].is_zero() {
                let factor = m[k][c].clone();
                for j in 0..cols {
                    let t = &factor * &m[r][j];
                    m[k][j] = &m[k][j] - &t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|fc| {
            let mut v = vec![BigRational::zero(); cols];
            v[fc] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[i][fc].clone();
            }
            integer_vector(&v)
        })
        .collect()
}

/// Clears denominators and content.
pub fn integer_vector(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    let g = if g.is_negative() { -g } else { g };
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn rational_rank(rows: &[Vec<BigRational>], cols: usize) -> usize {
    cols - rational_kernel(rows, cols).len()
}
