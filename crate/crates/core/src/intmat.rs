//! Exact integer matrices, Smith normal form and finite abelian groups.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(BigInt),
    #[error("groups are not isomorphic: {0} vs {1}")]
    NotIsomorphic(FiniteAbelianGroup, FiniteAbelianGroup),
    #[error("entry does not fit in 64 bits")]
    Overflow,
    #[error("internal check failed: {0}")]
    Check(String),
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn diag<T: Into<BigInt> + Clone>(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone().into();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatrixError::Shape("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|row| row.iter().cloned().map(Into::into)).collect();
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row_major(&self) -> &[BigInt] {
        &self.data
    }

    pub fn to_i64_rows(&self) -> Result<Vec<Vec<i64>>, MatrixError> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)].to_i64().ok_or(MatrixError::Overflow))
                    .collect()
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<BigInt, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                let Some(swap) = (k + 1..n).find(|&i| !a[(i, k)].is_zero()) else {
                    return Ok(BigInt::zero());
                };
                a.swap_rows(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
                a[(i, k)] = BigInt::zero();
            }
            prev = a[(k, k)].clone();
        }
        Ok(sign * &a[(n - 1, n - 1)])
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().map_or(false, |d| d.abs().is_one())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[target] += factor * row[source]
    fn add_row(&mut self, target: usize, source: usize, factor: &BigInt) {
        for j in 0..self.cols {
            let v = factor * &self[(source, j)];
            self[(target, j)] += v;
        }
    }

    /// col[target] += factor * col[source]
    fn add_col(&mut self, target: usize, source: usize, factor: &BigInt) {
        for i in 0..self.rows {
            let v = factor * &self[(i, source)];
            self[(i, target)] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self[(r, j)];
            self[(r, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_string()).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(deserializer)?;
        let parsed: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| r.iter().map(|s| s.parse::<BigInt>()).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()
            .map_err(serde::de::Error::custom)?;
        IntMatrix::from_rows(&parsed).map_err(serde::de::Error::custom)
    }
}

/// `u · a · v = s` with `u`, `v` unimodular and `s` in Smith normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
}

impl SmithDecomposition {
    /// Nonzero-or-zero diagonal `d_1 | d_2 | ...` of `s`.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.s.diagonal()
    }
}

/// Smith normal form with minimal-absolute-value pivoting.
///
/// Each pivot step moves the smallest nonzero entry of the trailing block to
/// the diagonal, clears its column then its row by Euclidean reduction, and
/// folds in any row whose entries the pivot does not divide. Diagonal entries
/// come out non-negative; signs are absorbed into `u`.
pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let (r, c) = (a.rows, a.cols);
    let mut s = a.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);

    for t in 0..r.min(c) {
        loop {
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    let e = &s[(i, j)];
                    if e.is_zero() {
                        continue;
                    }
                    if pivot.map_or(true, |(pi, pj)| e.abs() < s[(pi, pj)].abs()) {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                return SmithDecomposition { u, s, v };
            };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let p = s[(t, t)].clone();
            let mut dirty = false;
            for i in t + 1..r {
                if s[(i, t)].is_zero() {
                    continue;
                }
                let q = -s[(i, t)].div_floor(&p);
                s.add_row(i, t, &q);
                u.add_row(i, t, &q);
                dirty |= !s[(i, t)].is_zero();
            }
            for j in t + 1..c {
                if s[(t, j)].is_zero() {
                    continue;
                }
                let q = -s[(t, j)].div_floor(&p);
                s.add_col(j, t, &q);
                v.add_col(j, t, &q);
                dirty |= !s[(t, j)].is_zero();
            }
            if dirty {
                continue;
            }
            let offender = (t + 1..r).find(|&i| (t + 1..c).any(|j| !s[(i, j)].is_multiple_of(&p)));
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    s.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithDecomposition { u, s, v }
}

/// Inverse of a unimodular matrix via the adjugate.
pub fn invert_unimodular(m: &IntMatrix) -> Result<IntMatrix, MatrixError> {
    if !m.is_square() {
        return Err(MatrixError::Shape("inverse of a non-square matrix".into()));
    }
    let det = m.det()?;
    if !det.abs().is_one() {
        return Err(MatrixError::NotUnimodular(det));
    }
    let n = m.rows;
    let mut inv = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = minor_without(m, i, j);
            let cof = minor.det()?;
            let signed = if (i + j) % 2 == 0 { cof } else { -cof };
            // adj(m)[j][i] = cofactor(i, j); det = ±1 so division is multiplication.
            inv[(j, i)] = signed * &det;
        }
    }
    let check = m.mul(&inv)?;
    if check != IntMatrix::identity(n) {
        return Err(MatrixError::Check("adjugate inverse failed".into()));
    }
    Ok(inv)
}

fn minor_without(m: &IntMatrix, row: usize, col: usize) -> IntMatrix {
    let n = m.rows;
    let mut data = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != row) {
        for j in (0..n).filter(|&j| j != col) {
            data.push(m[(i, j)].clone());
        }
    }
    IntMatrix { rows: n - 1, cols: n - 1, data }
}

/// A finite abelian group `∏ Z/d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteAbelianGroup {
    orders: Vec<u64>,
}

impl FiniteAbelianGroup {
    /// Orders must be `≥ 1`.
    pub fn new(orders: Vec<u64>) -> Self {
        assert!(orders.iter().all(|&d| d >= 1), "cyclic orders must be at least 1");
        Self { orders }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn order(&self) -> Option<u64> {
        self.orders.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d))
    }

    /// Invariant factors `d_1 | ... | d_t`, all `> 1`, from the Smith form of
    /// the diagonal presentation matrix.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let snf = smith_normal_form(&IntMatrix::diag(&self.orders));
        snf.invariant_factors().into_iter().filter(|d| !d.is_one()).collect()
    }

    pub fn is_isomorphic(&self, other: &Self) -> bool {
        self.invariant_factors() == other.invariant_factors()
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.orders.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.orders.iter().map(|d| format!("Z/{d}")).collect();
        f.write_str(&parts.join(" x "))
    }
}

pub fn fab_isomorphic(a: &FiniteAbelianGroup, b: &FiniteAbelianGroup) -> bool {
    a.is_isomorphic(b)
}

/// Unimodular `(s, t)` with `s · diag(m) · t = diag(n)`.
///
/// Both diagonals are brought to Smith form, `u_m diag(m) v_m = d = u_n diag(n) v_n`,
/// and `s = u_n⁻¹ u_m`, `t = v_m v_n⁻¹`. The product is re-checked exactly.
pub fn solve_conjugator(m: &[u64], n: &[u64]) -> Result<(IntMatrix, IntMatrix), MatrixError> {
    if m.len() != n.len() {
        return Err(MatrixError::Shape(format!("{} vs {} diagonal entries", m.len(), n.len())));
    }
    let gm = FiniteAbelianGroup::new(m.to_vec());
    let gn = FiniteAbelianGroup::new(n.to_vec());
    let dm = IntMatrix::diag(m);
    let dn = IntMatrix::diag(n);
    let sm = smith_normal_form(&dm);
    let sn = smith_normal_form(&dn);
    if sm.s != sn.s {
        return Err(MatrixError::NotIsomorphic(gm, gn));
    }
    let s = invert_unimodular(&sn.u)?.mul(&sm.u)?;
    let t = sm.v.mul(&invert_unimodular(&sn.v)?)?;
    if s.mul(&dm)?.mul(&t)? != dn || !s.is_unimodular() || !t.is_unimodular() {
        return Err(MatrixError::Check("conjugator does not satisfy S diag(m) T = diag(n)".into()));
    }
    Ok((s, t))
}
