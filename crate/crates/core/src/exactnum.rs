//! Exact rational arithmetic, dense integer/rational matrices, inertia,
//! Smith normal form and lattice point enumeration for positive definite
//! quadratic forms.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("matrix is singular")]
    Singular,
    #[error("quadratic form is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Shorthand for an integer-valued rational.
pub fn ri(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n/d`, reduced.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rbig(n: BigInt) -> Rational {
    Rational::from_integer(n)
}

/// Always "p/q", integers included.
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses "p/q" or "p" into a rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// floor(sqrt(n)) for n >= 0.
pub fn isqrt(n: &BigInt) -> BigInt {
    if n.is_negative() {
        return BigInt::zero();
    }
    n.sqrt()
}

/// floor(sqrt(x)) for a nonnegative rational.
pub fn floor_sqrt(x: &Rational) -> BigInt {
    if x.is_negative() {
        return BigInt::zero();
    }
    isqrt(&x.floor().to_integer())
}

pub fn to_i64(x: &BigInt) -> i64 {
    x.to_i64().expect("integer out of i64 range")
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type IntMatrix = Matrix<BigInt>;
pub type RatMatrix = Matrix<Rational>;

impl<T: Clone + Zero> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// Principal submatrix on the given index set.
    pub fn principal(&self, idx: &[usize]) -> Self {
        self.submatrix(idx, idx)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut s = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                s[(a, b)] = self[(i, j)].clone();
            }
        }
        s
    }

    pub fn is_symmetric(&self) -> bool
    where
        T: PartialEq,
    {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }
}

impl<T: Clone + Zero + One> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Clone + Zero + std::ops::Mul<Output = T>> Matrix<T> {
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    let cell = &mut out[(i, j)];
                    *cell = cell.clone() + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (j, x) in v.iter().enumerate() {
                    acc = acc + self[(i, j)].clone() * x.clone();
                }
                acc
            })
            .collect()
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl IntMatrix {
    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        Matrix::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        )
    }

    pub fn to_rational(&self) -> RatMatrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().cloned().map(Rational::from_integer).collect(),
        }
    }
}

pub fn dot<T: Clone + Zero + std::ops::Mul<Output = T>>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Quadratic form (v, M v) for an integer matrix and integer vector.
pub fn quad_form_int(m: &IntMatrix, v: &[BigInt]) -> BigInt {
    dot(v, &m.mul_vec(v))
}

/// (v, M w) over the rationals.
pub fn bilinear(m: &RatMatrix, v: &[Rational], w: &[Rational]) -> Rational {
    dot(v, &m.mul_vec(w))
}

pub fn int_vec(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn rat_vec(v: &[BigInt]) -> Vec<Rational> {
    v.iter().cloned().map(Rational::from_integer).collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn det(m: &IntMatrix) -> Rational {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows;
    if n == 0 {
        return Rational::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(i) => {
                    a.swap_rows(i, k);
                    sign = -sign;
                }
                None => return Rational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                a[(i, j)] = v / &prev;
            }
        }
        prev = a[(k, k)].clone();
    }
    Rational::from_integer(sign * &a[(n - 1, n - 1)])
}

/// Determinant of a rational matrix by Gaussian elimination.
pub fn det_rat(m: &RatMatrix) -> Rational {
    assert!(m.is_square());
    let n = m.rows;
    let mut a = m.clone();
    let mut d = Rational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[(i, k)].is_zero()) else {
            return Rational::zero();
        };
        if p != k {
            a.swap_rows(p, k);
            d = -d;
        }
        let piv = a[(k, k)].clone();
        d *= &piv;
        for i in k + 1..n {
            if a[(i, k)].is_zero() {
                continue;
            }
            let f = &a[(i, k)] / &piv;
            for j in k..n {
                let v = &a[(k, j)] * &f;
                a[(i, j)] -= v;
            }
        }
    }
    d
}

/// Exact inverse of an integer matrix.
pub fn inverse(m: &IntMatrix) -> Result<RatMatrix, ExactError> {
    inverse_rat(&m.to_rational())
}

/// Exact inverse by Gauss-Jordan elimination.
pub fn inverse_rat(m: &RatMatrix) -> Result<RatMatrix, ExactError> {
    if !m.is_square() {
        return Err(ExactError::Dimension("inverse of a non-square matrix".into()));
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut inv = RatMatrix::identity(n);
    for k in 0..n {
        let p = (k..n).find(|&i| !a[(i, k)].is_zero()).ok_or(ExactError::Singular)?;
        a.swap_rows(p, k);
        inv.swap_rows(p, k);
        let piv = a[(k, k)].clone();
        for j in 0..n {
            a[(k, j)] /= &piv;
            inv[(k, j)] /= &piv;
        }
        for i in 0..n {
            if i == k || a[(i, k)].is_zero() {
                continue;
            }
            let f = a[(i, k)].clone();
            for j in 0..n {
                let x = &a[(k, j)] * &f;
                a[(i, j)] -= x;
                let y = &inv[(k, j)] * &f;
                inv[(i, j)] -= y;
            }
        }
    }
    Ok(inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Inertia {
    pub n_pos: usize,
    pub n_zero: usize,
    pub n_neg: usize,
}

impl Inertia {
    /// σ = n_pos − n_neg; zero eigenvalues do not contribute.
    pub fn signature(&self) -> i64 {
        self.n_pos as i64 - self.n_neg as i64
    }

    pub fn dim(&self) -> usize {
        self.n_pos + self.n_zero + self.n_neg
    }
}

/// Inertia of a symmetric matrix by exact symmetric elimination.
///
/// When every remaining diagonal entry vanishes but an off-diagonal entry
/// `b` at (j, k) does not, the congruence that adds row/column k to row/column
/// j produces the nonzero diagonal `2b`; this plays the role of a 2×2 pivot.
pub fn inertia(m: &IntMatrix) -> Inertia {
    inertia_rat(&m.to_rational())
}

pub fn inertia_rat(m: &RatMatrix) -> Inertia {
    assert!(m.is_symmetric(), "inertia requires a symmetric matrix");
    let mut a = m.clone();
    let mut n = a.rows;
    let mut res = Inertia::default();
    while n > 0 {
        let last = n - 1;
        let piv = match (0..n).find(|&i| !a[(i, i)].is_zero()) {
            Some(i) => i,
            None => {
                let off = (0..n).flat_map(|j| (0..j).map(move |k| (j, k))).find(|&(j, k)| !a[(j, k)].is_zero());
                match off {
                    None => {
                        res.n_zero += n;
                        break;
                    }
                    Some((j, k)) => {
                        for c in 0..n {
                            let v = a[(k, c)].clone();
                            a[(j, c)] += v;
                        }
                        for r in 0..n {
                            let v = a[(r, k)].clone();
                            a[(r, j)] += v;
                        }
                        j
                    }
                }
            }
        };
        a.swap_rows(piv, last);
        a.swap_cols(piv, last);
        let d = a[(last, last)].clone();
        if d.is_positive() {
            res.n_pos += 1;
        } else {
            res.n_neg += 1;
        }
        for i in 0..last {
            if a[(i, last)].is_zero() {
                continue;
            }
            let f = &a[(i, last)] / &d;
            for j in 0..last {
                let v = &a[(last, j)] * &f;
                a[(i, j)] -= v;
            }
        }
        let mut shrunk = RatMatrix::zeros(last, last);
        for i in 0..last {
            for j in 0..last {
                shrunk[(i, j)] = a[(i, j)].clone();
            }
        }
        a = shrunk;
        n = last;
    }
    res
}

pub fn is_negative_definite(m: &IntMatrix) -> bool {
    let i = inertia(m);
    i.n_neg == i.dim()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snf {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    /// Nonzero diagonal entries of D, in order.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.d.rows.min(self.d.cols))
            .map(|i| self.d[(i, i)].clone())
            .take_while(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

fn row_add(m: &mut IntMatrix, dst: usize, src: usize, f: &BigInt) {
    for j in 0..m.cols {
        let v = &m[(src, j)] * f;
        m[(dst, j)] += v;
    }
}

fn col_add(m: &mut IntMatrix, dst: usize, src: usize, f: &BigInt) {
    for i in 0..m.rows {
        let v = &m[(i, src)] * f;
        m[(i, dst)] += v;
    }
}

/// Smith normal form: unimodular U, V with U·M·V = D diagonal and each
/// diagonal entry dividing the next.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (r, c) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);
    for t in 0..r.min(c) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    if d[(i, j)].is_zero() {
                        continue;
                    }
                    if best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish_snf(u, d, v);
            };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            let mut clean = true;
            for i in t + 1..r {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = -d[(i, t)].div_floor(&d[(t, t)]);
                row_add(&mut d, i, t, &q);
                row_add(&mut u, i, t, &q);
                if !d[(i, t)].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..c {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = -d[(t, j)].div_floor(&d[(t, t)]);
                col_add(&mut d, j, t, &q);
                col_add(&mut v, j, t, &q);
                if !d[(t, j)].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            let piv = d[(t, t)].clone();
            let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !d[(i, j)].is_multiple_of(&piv)));
            match bad {
                Some(i) => {
                    row_add(&mut d, t, i, &BigInt::one());
                    row_add(&mut u, t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            for j in 0..c {
                d[(t, j)] = -d[(t, j)].clone();
            }
            for j in 0..r {
                u[(t, j)] = -u[(t, j)].clone();
            }
        }
    }
    finish_snf(u, d, v)
}

fn finish_snf(u: IntMatrix, d: IntMatrix, v: IntMatrix) -> Snf {
    Snf { u, d, v }
}

/// Integer solution set of A x = b: a particular solution and a basis of the
/// integer kernel, or None when no integer solution exists.
pub fn solve_integer(a: &IntMatrix, b: &[BigInt]) -> Option<(Vec<BigInt>, Vec<Vec<BigInt>>)> {
    let snf = smith_normal_form(a);
    solve_with_snf(&snf, b)
}

pub fn solve_with_snf(snf: &Snf, b: &[BigInt]) -> Option<(Vec<BigInt>, Vec<Vec<BigInt>>)> {
    let (r, c) = (snf.d.rows, snf.d.cols);
    assert_eq!(b.len(), r);
    let ub = snf.u.mul_vec(b);
    let rank = snf.rank();
    let mut y = vec![BigInt::zero(); c];
    for i in 0..r {
        if i < rank {
            let (q, rem) = ub[i].div_rem(&snf.d[(i, i)]);
            if !rem.is_zero() {
                return None;
            }
            y[i] = q;
        } else if !ub[i].is_zero() {
            return None;
        }
    }
    let x = snf.v.mul_vec(&y);
    let kernel = (rank..c).map(|j| (0..c).map(|i| snf.v[(i, j)].clone()).collect()).collect();
    Some((x, kernel))
}

/// Outcome of an exact linear solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinearSolution {
    Unique(Vec<Rational>),
    /// Consistent but with free variables; the particular solution sets them to zero.
    Underdetermined(Vec<Rational>),
    Inconsistent,
}

/// Solves A x = b over the rationals. Rows are scaled to integers and reduced
/// by fraction-free (Bareiss) elimination. Works for overdetermined systems:
/// surplus equations are checked for consistency.
pub fn solve_linear(a: &RatMatrix, b: &[Rational]) -> LinearSolution {
    let (r, c) = (a.rows, a.cols);
    assert_eq!(b.len(), r);
    let mut m: Vec<Vec<BigInt>> = (0..r)
        .map(|i| {
            let row: Vec<&Rational> = (0..c).map(|j| &a[(i, j)]).chain(std::iter::once(&b[i])).collect();
            let den = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (&den / v.denom())).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..c {
        if row == r {
            break;
        }
        let Some(p) = (row..r).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(p, row);
        let (top, rest) = m.split_at_mut(row + 1);
        let prow = &top[row];
        for other in rest.iter_mut() {
            let f = std::mem::take(&mut other[col]);
            for j in col + 1..=c {
                let v = &other[j] * &prow[col] - &f * &prow[j];
                other[j] = if prev.is_one() { v } else { v / &prev };
            }
        }
        prev = m[row][col].clone();
        pivots.push(col);
        row += 1;
    }
    if (row..r).any(|i| !m[i][c].is_zero()) {
        return LinearSolution::Inconsistent;
    }
    let mut x = vec![Rational::zero(); c];
    for (i, &col) in pivots.iter().enumerate().rev() {
        let mut acc = Rational::from_integer(m[i][c].clone());
        for j in col + 1..c {
            if !m[i][j].is_zero() && !x[j].is_zero() {
                acc -= Rational::from_integer(m[i][j].clone()) * &x[j];
            }
        }
        x[col] = acc / Rational::from_integer(m[i][col].clone());
    }
    if pivots.len() == c {
        LinearSolution::Unique(x)
    } else {
        LinearSolution::Underdetermined(x)
    }
}

/// Decomposition q(w) = Σ_i d_i (w_i + Σ_{j>i} u_ij w_j)^2.
fn ldl_upper(q: &RatMatrix) -> Result<(Vec<Rational>, RatMatrix), ExactError> {
    let n = q.rows;
    let mut d = vec![Rational::zero(); n];
    let mut u = RatMatrix::identity(n);
    for i in 0..n {
        let mut di = q[(i, i)].clone();
        for k in 0..i {
            di -= &d[k] * &u[(k, i)] * &u[(k, i)];
        }
        if !di.is_positive() {
            return Err(ExactError::NotPositiveDefinite);
        }
        for j in i + 1..n {
            let mut s = q[(i, j)].clone();
            for k in 0..i {
                s -= &d[k] * &u[(k, i)] * &u[(k, j)];
            }
            u[(i, j)] = s / &di;
        }
        d[i] = di;
    }
    Ok((d, u))
}

/// All integer vectors v with (v, Q v) + (L, v) + c ≤ B, sorted
/// lexicographically.
pub fn sublevel_points(
    q: &RatMatrix,
    l: &[Rational],
    c: &Rational,
    bound: &Rational,
) -> Result<Vec<Vec<i64>>, ExactError> {
    let n = q.rows;
    if !q.is_square() || l.len() != n {
        return Err(ExactError::Dimension("sublevel_points".into()));
    }
    if n == 0 {
        return Ok(if c <= bound { vec![vec![]] } else { vec![] });
    }
    let (d, u) = ldl_upper(q)?;
    let qinv = inverse_rat(q)?;
    let two = ri(2);
    let center: Vec<Rational> = qinv.mul_vec(l).into_iter().map(|x| -x / &two).collect();
    let radius = bound - c + bilinear(q, &center, &center);
    if radius.is_negative() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    let mut w = vec![Rational::zero(); n];
    enumerate_level(n - 1, &d, &u, &center, radius, &mut cur, &mut w, &mut out);
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_level(
    k: usize,
    d: &[Rational],
    u: &RatMatrix,
    center: &[Rational],
    budget: Rational,
    cur: &mut Vec<i64>,
    w: &mut Vec<Rational>,
    out: &mut Vec<Vec<i64>>,
) {
    let n = d.len();
    // v_k must satisfy d_k (v_k - c_k + s)^2 <= budget, s = Σ_{j>k} u_kj w_j
    let mut shift = Rational::zero();
    for j in k + 1..n {
        shift += &u[(k, j)] * &w[j];
    }
    let mid = &center[k] - &shift;
    let half: BigInt = floor_sqrt(&(&budget / &d[k])) + 1;
    let lo: BigInt = mid.floor().to_integer() - &half;
    let hi: BigInt = mid.ceil().to_integer() + &half;
    let mut x = lo;
    while x <= hi {
        let wk = rbig(x.clone()) - &center[k];
        let t = &wk + &shift;
        let used = &d[k] * &t * &t;
        if used <= budget {
            cur[k] = to_i64(&x);
            w[k] = wk;
            if k == 0 {
                out.push(cur.clone());
            } else {
                enumerate_level(k - 1, d, u, center, &budget - &used, cur, w, out);
            }
        }
        x += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(center: i64, legs: &[i64]) -> IntMatrix {
        let n = legs.len() + 1;
        let mut m = vec![vec![0i64; n]; n];
        m[0][0] = center;
        for (i, &w) in legs.iter().enumerate() {
            m[i + 1][i + 1] = w;
            m[0][i + 1] = 1;
            m[i + 1][0] = 1;
        }
        IntMatrix::from_i64(&m)
    }

    /// Cofactor expansion along the first row.
    fn det_cofactor(m: &[Vec<i64>]) -> i64 {
        let n = m.len();
        if n == 0 {
            return 1;
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det_cofactor(&minor)
            })
            .sum()
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&IntMatrix::from_i64(&[vec![-1]])), ri(-1));
        let s237 = star(-1, &[-2, -3, -7]);
        assert_eq!(det(&s237), ri(1));
        let rows: Vec<Vec<i64>> = (0..4).map(|i| (0..4).map(|j| to_i64(&s237[(i, j)])).collect()).collect();
        assert_eq!(det_cofactor(&rows), 1);
        assert_eq!(det(&star(-1, &[-2, -3, -6])), ri(0));
    }

    #[test]
    fn inverse_examples() {
        let m = IntMatrix::from_i64(&[vec![-1, 1], vec![1, -2]]);
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, IntMatrix::from_i64(&[vec![-2, -1], vec![-1, -1]]).to_rational());
        assert_eq!(inverse(&IntMatrix::identity(3)).unwrap(), RatMatrix::identity(3));
        assert_eq!(inverse(&star(-1, &[-2, -3, -6])), Err(ExactError::Singular));
    }

    #[test]
    fn inertia_examples() {
        let i1 = inertia(&IntMatrix::from_i64(&[vec![-1]]));
        assert_eq!((i1.n_pos, i1.n_zero, i1.n_neg), (0, 0, 1));
        let i2 = inertia(&star(-1, &[-2, -3, -7]));
        assert_eq!((i2.n_pos, i2.n_zero, i2.n_neg), (0, 0, 4));
        let i3 = inertia(&star(-1, &[-2, -3, -6]));
        assert_eq!((i3.n_pos, i3.n_zero, i3.n_neg), (0, 1, 3));
        let hyp = inertia(&IntMatrix::from_i64(&[vec![0, 1], vec![1, 0]]));
        assert_eq!((hyp.n_pos, hyp.n_zero, hyp.n_neg), (1, 0, 1));
    }

    #[test]
    fn snf_examples() {
        let m = IntMatrix::from_i64(&[vec![2, 0], vec![0, 3]]);
        let s = smith_normal_form(&m);
        assert_eq!(s.d, IntMatrix::from_i64(&[vec![1, 0], vec![0, 6]]));
        assert_eq!(s.u.mul(&m).mul(&s.v), s.d);
        let id = smith_normal_form(&IntMatrix::identity(3));
        assert_eq!(id.d, IntMatrix::identity(3));
        let l83 = IntMatrix::from_i64(&[vec![-3, 1], vec![1, -3]]);
        assert_eq!(smith_normal_form(&l83).d, IntMatrix::from_i64(&[vec![1, 0], vec![0, 8]]));
    }

    #[test]
    fn solve_integer_kernel() {
        let a = IntMatrix::from_i64(&[vec![2, 4, 6]]);
        let (x, k) = solve_integer(&a, &int_vec(&[8])).unwrap();
        assert_eq!(a.mul_vec(&x), int_vec(&[8]));
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(a.mul_vec(v), int_vec(&[0]));
        }
        assert!(solve_integer(&a, &int_vec(&[3])).is_none());
    }

    #[test]
    fn sublevel_examples() {
        let q1 = RatMatrix::identity(1);
        let pts = sublevel_points(&q1, &[ri(0)], &ri(0), &ri(4)).unwrap();
        assert_eq!(pts, vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]);
        let q2 = RatMatrix::identity(2);
        assert_eq!(sublevel_points(&q2, &[ri(0), ri(0)], &ri(0), &ri(1)).unwrap().len(), 5);
        let neg = RatMatrix::from_rows(vec![vec![ri(-1)]]);
        assert_eq!(sublevel_points(&neg, &[ri(0)], &ri(0), &ri(1)), Err(ExactError::NotPositiveDefinite));
    }

    #[test]
    fn sublevel_matches_box_scan() {
        // -Mhat^{-1} style form from the L(8,3) matrix
        let m = IntMatrix::from_i64(&[vec![-3, 1], vec![1, -3]]);
        let q = inverse(&m).unwrap();
        let q = RatMatrix::from_rows((0..2).map(|i| (0..2).map(|j| -q[(i, j)].clone()).collect()).collect());
        let l = vec![rat(1, 3), rat(-2, 5)];
        let c = rat(1, 7);
        let b = ri(3);
        let pts = sublevel_points(&q, &l, &c, &b).unwrap();
        let mut scan = Vec::new();
        for x in -50i64..=50 {
            for y in -50i64..=50 {
                let v = vec![ri(x), ri(y)];
                if bilinear(&q, &v, &v) + dot(&l, &v) + &c <= b {
                    scan.push(vec![x, y]);
                }
            }
        }
        assert_eq!(pts, scan);
    }
}
