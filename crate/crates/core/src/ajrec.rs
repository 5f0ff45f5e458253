//! Colored Jones polynomials, their ħ-expansions, quantum A-polynomial
//! operators, the Melvin–Morton polynomials P_k(x), and the recursion that
//! extends F_K(x, q) slice by slice for the trefoil and the figure-eight.
//!
//! F_K is written as ½ Σ_{m odd} f_m(q) (x^{m/2} − x^{−m/2}). Functions that
//! return an [`XSeries`] store slice m = f_m / 2, matching
//! [`crate::knotinv::torus_fk`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactnum::{rat, ri, solve_linear, LinearSolution, RatMatrix, Rational};
use crate::qseries::{
    recognize_exp_sum, symmetric_expansion, Laurent, QSeries, SeriesError, XRationalFunction, XSeries,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AjError {
    #[error("the hbar^{order} coefficient is not a polynomial of degree <= {order} in n")]
    DegreeOverflow { order: usize },
    #[error("no quantum A-polynomial is available for {0}")]
    UnsupportedKnot(Knot),
    #[error("no symmetric Laurent solution for P_{k} with degree <= {window}")]
    AnsatzTooSmall { k: usize, window: i64 },
    #[error("the order-by-order equations for P_{0} are inconsistent")]
    Inconsistent(usize),
    #[error("could not recognize {0} as a Laurent polynomial")]
    RecognitionFailed(String),
    #[error("recursion step producing f_{0} leaves a nonzero remainder")]
    NonzeroRemainder(i64),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Knot {
    Unknot,
    TrefoilRight,
    TrefoilLeft,
    Fig8,
}

impl fmt::Display for Knot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Knot::Unknot => "unknot",
            Knot::TrefoilRight => "right-handed trefoil",
            Knot::TrefoilLeft => "left-handed trefoil",
            Knot::Fig8 => "figure-eight",
        };
        write!(f, "{s}")
    }
}

/// Δ_K(x), normalized so that Δ(1) = 1 and Δ(x) = Δ(1/x).
pub fn alexander(knot: Knot) -> Laurent {
    match knot {
        Knot::Unknot => Laurent::one(),
        Knot::TrefoilRight | Knot::TrefoilLeft => Laurent::from_int_terms(&[(-1, 1), (0, -1), (1, 1)]),
        Knot::Fig8 => Laurent::from_int_terms(&[(-1, -1), (0, 3), (1, -1)]),
    }
}

fn half_exp(e: i64) -> String {
    if e % 2 == 0 {
        format!("{}", e / 2)
    } else {
        format!("{e}/2")
    }
}

/// Laurent polynomial in x^{1/2} and q^{1/2}; the key (a, b) stands for
/// x^{a/2} q^{b/2}.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct XqPoly {
    terms: BTreeMap<(i64, i64), Rational>,
}

impl XqPoly {
    pub fn zero() -> Self {
        XqPoly::default()
    }

    pub fn constant(c: i64) -> Self {
        XqPoly::monomial(ri(c), 0, 0)
    }

    /// c x^{a/2} q^{b/2}
    pub fn monomial(c: Rational, a: i64, b: i64) -> Self {
        let mut p = XqPoly::zero();
        p.add_term(a, b, c);
        p
    }

    pub fn x() -> Self {
        XqPoly::monomial(ri(1), 2, 0)
    }

    pub fn q() -> Self {
        XqPoly::monomial(ri(1), 0, 2)
    }

    pub fn add_term(&mut self, a: i64, b: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((a, b)).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> &BTreeMap<(i64, i64), Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(XqPoly::constant(1), |acc, _| &acc * self)
    }

    /// Coefficient of ħ^l in self(x, e^ħ), as a Laurent polynomial in x.
    pub fn hbar_coefficient(&self, l: usize) -> Result<Laurent, AjError> {
        let fact = Rational::from_integer(crate::qseries::factorial(l as u64));
        let mut out = Laurent::zero();
        for ((a, b), c) in &self.terms {
            if a % 2 != 0 {
                return Err(AjError::BadInput("half-integer power of x in an operator coefficient".into()));
            }
            let w = num_traits::pow(rat(*b, 2), l);
            out.add_term(a / 2, c * w / &fact);
        }
        Ok(out)
    }

    /// The x-exponents (doubled) that occur.
    fn x_range(&self) -> Option<(i64, i64)> {
        let lo = self.terms.keys().map(|k| k.0).min()?;
        let hi = self.terms.keys().map(|k| k.0).max()?;
        Some((lo, hi))
    }
}

impl Add for &XqPoly {
    type Output = XqPoly;
    fn add(self, rhs: &XqPoly) -> XqPoly {
        let mut out = self.clone();
        for ((a, b), c) in &rhs.terms {
            out.add_term(*a, *b, c.clone());
        }
        out
    }
}

impl Sub for &XqPoly {
    type Output = XqPoly;
    fn sub(self, rhs: &XqPoly) -> XqPoly {
        self + &(-rhs)
    }
}

impl Neg for &XqPoly {
    type Output = XqPoly;
    fn neg(self) -> XqPoly {
        XqPoly { terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect() }
    }
}

impl Mul for &XqPoly {
    type Output = XqPoly;
    fn mul(self, rhs: &XqPoly) -> XqPoly {
        let mut out = XqPoly::zero();
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &rhs.terms {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for XqPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, ((a, b), c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mag = c.abs();
            let mut parts = Vec::new();
            if !mag.is_one() || (*a == 0 && *b == 0) {
                parts.push(mag.to_string());
            }
            if *b != 0 {
                parts.push(format!("q^{{{}}}", half_exp(*b)));
            }
            if *a != 0 {
                parts.push(format!("x^{{{}}}", half_exp(*a)));
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// The rational coefficients as displayed, before clearing denominators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawOperator {
    /// (numerator, denominator) for each shift.
    pub coefficients: Vec<(XqPoly, XqPoly)>,
    /// Common multiple of the denominators used for clearing.
    pub clearing: XqPoly,
}

/// Σ_j C_j(x, q) F(q^j x), where y acts by x ↦ qx.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QDifferenceOperator {
    pub terms: Vec<(usize, XqPoly)>,
    pub raw_form: Option<RawOperator>,
}

impl QDifferenceOperator {
    pub fn new(terms: Vec<(usize, XqPoly)>) -> Result<Self, AjError> {
        if terms.len() < 2 {
            return Err(AjError::BadInput("an operator needs at least two terms".into()));
        }
        if terms.iter().any(|(_, c)| c.is_zero()) {
            return Err(AjError::BadInput("zero operator coefficient".into()));
        }
        Ok(QDifferenceOperator { terms, raw_form: None })
    }

    fn x_range(&self) -> (i64, i64) {
        self.terms.iter().filter_map(|(_, c)| c.x_range()).fold((i64::MAX, i64::MIN), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        })
    }
}

impl fmt::Display for QDifferenceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in &self.terms {
            writeln!(f, "F(q^{j} x): {c}")?;
        }
        Ok(())
    }
}

/// The unnormalized operator Ã annihilating F_K(x, q), denominators cleared.
pub fn ahat_operator(knot: Knot) -> Result<QDifferenceOperator, AjError> {
    let x = XqPoly::x();
    let q = XqPoly::q();
    let one = XqPoly::constant(1);
    let qh = XqPoly::monomial(ri(1), 0, 1);
    let qp = |k: u32| q.pow(k);
    let xp = |k: u32| x.pow(k);
    match knot {
        Knot::Unknot => {
            // conjugate of y − 1 by x^{1/2} − x^{−1/2}
            let c0 = &one - &(&q * &x);
            let c1 = &qh * &(&x - &one);
            QDifferenceOperator::new(vec![(0, c0), (1, c1)])
        }
        Knot::TrefoilRight => {
            let qx2m1 = &(&q * &xp(2)) - &one;
            let a_num = &(&qp(3) * &xp(2)) - &one;
            let a_den = &(&(&qp(4) * &xp(3)) * &qx2m1);
            let b_num = &(&(&(&qp(5) * &xp(5)) - &(&qp(2) * &xp(3))) - &(&q * &xp(2))) + &one;
            let b_den = &(&(&qp(4) * &qh) * &xp(3)) * &qx2m1;
            let g_num = XqPoly::constant(-1);
            let clearing = b_den.clone();
            let terms = vec![(0, &a_num * &qh), (1, b_num.clone()), (2, -&clearing)];
            let mut op = QDifferenceOperator::new(terms)?;
            op.raw_form = Some(RawOperator {
                coefficients: vec![(a_num, a_den.clone()), (b_num, b_den), (g_num, one.clone())],
                clearing,
            });
            Ok(op)
        }
        Knot::Fig8 => {
            let q2x1 = &(&qp(2) * &x) + &one;
            let q5x2m1 = &(&qp(5) * &xp(2)) - &one;
            let qx1 = &(&q * &x) + &one;
            let qx2m1 = &(&q * &xp(2)) - &one;
            // q x (q x (q (x (q x − 2) − 1) + x + 1) + q − x − 2) + 1
            let two = XqPoly::constant(2);
            let inner = &(&x * &(&(&q * &x) - &two)) - &one;
            let inner = &(&(&q * &inner) + &x) + &one;
            let inner = &(&(&(&(&q * &x) * &inner) + &q) - &x) - &two;
            let poly1 = &(&(&q * &x) * &inner) + &one;
            // q x (q (q x (q (q² x − 1)(q² x + q − 1) − 1) − 2) + 1) + 1
            let f1 = &(&qp(2) * &x) - &one;
            let f2 = &(&(&qp(2) * &x) + &q) - &one;
            let poly2 = {
                let a = &(&q * &(&f1 * &f2)) - &one;
                let b = &(&(&q * &x) * &a) - &two;
                let c = &(&q * &b) + &one;
                &(&(&q * &x) * &c) + &one
            };
            let a_num = -&(&q2x1 * &q5x2m1);
            let a_den = &(&(&qp(2) * &qh) * &qx1) * &qx2m1;
            let b_num = &q5x2m1 * &poly1;
            let b_den = &(&qp(4) * &xp(2)) * &qx2m1;
            let g_num = -&(&q2x1 * &poly2);
            let g_den = &(&(&qp(4) * &qh) * &xp(2)) * &qx1;
            let clearing = &(&(&(&qp(4) * &qh) * &xp(2)) * &qx1) * &qx2m1;
            let c0 = &(&a_num * &qp(2)) * &xp(2);
            let c1 = &(&b_num * &qh) * &qx1;
            let c2 = &g_num * &qx2m1;
            let terms = vec![(0, c0), (1, c1), (2, c2), (3, clearing.clone())];
            let mut op = QDifferenceOperator::new(terms)?;
            op.raw_form = Some(RawOperator {
                coefficients: vec![(a_num, a_den), (b_num, b_den), (g_num, g_den), (one.clone(), one)],
                clearing,
            });
            Ok(op)
        }
        Knot::TrefoilLeft => Err(AjError::UnsupportedKnot(knot)),
    }
}

/// Normalized colored Jones polynomial of the left-handed trefoil,
/// q^{n−1} Σ_{m<n} q^{mn} (1 − q^{n−1}) ⋯ (1 − q^{n−m}).
///
/// # Panics
/// If n = 0.
pub fn jones_trefoil(n: u32) -> Laurent {
    assert!(n >= 1, "colors start at 1");
    let n = n as i64;
    let mut sum = Laurent::zero();
    let mut poch = Laurent::one();
    for m in 0..n {
        if m > 0 {
            poch = &poch * &Laurent::from_int_terms(&[(0, 1), (n - m, -1)]);
        }
        sum = &sum + &poch.shift(m * n);
    }
    sum.shift(n - 1)
}

/// Normalized colored Jones polynomial of the figure-eight,
/// 1 + Σ_{m<n} Π_{j≤m} (qⁿ + q⁻ⁿ − q^j − q^{−j}).
///
/// # Panics
/// If n = 0.
pub fn jones_fig8(n: u32) -> Laurent {
    assert!(n >= 1, "colors start at 1");
    let n = n as i64;
    let mut sum = Laurent::one();
    let mut prod = Laurent::one();
    for j in 1..n {
        let mut f = Laurent::from_int_terms(&[(n, 1), (-n, 1)]);
        f.add_term(j, ri(-1));
        f.add_term(-j, ri(-1));
        prod = &prod * &f;
        sum = &sum + &prod;
    }
    sum
}

/// Normalized colored Jones polynomial J_n(q).
pub fn jones(knot: Knot, n: u32) -> Laurent {
    match knot {
        Knot::Unknot => Laurent::one(),
        Knot::TrefoilLeft => jones_trefoil(n),
        Knot::TrefoilRight => jones_trefoil(n).invert(),
        Knot::Fig8 => jones_fig8(n),
    }
}

/// J_n(e^ħ) = Σ_{m} Σ_{j≤m} c[m][j] n^j ħ^m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VassilievTable {
    pub c: Vec<Vec<Rational>>,
}

impl VassilievTable {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn get(&self, m: usize, j: usize) -> Rational {
        self.c.get(m).and_then(|row| row.get(j)).cloned().unwrap_or_else(Rational::zero)
    }

    /// u-coefficients of R_k(u) = Σ_j c[k+j][j] u^j for j < len.
    pub fn diagonal(&self, k: usize, len: usize) -> Result<Vec<Rational>, AjError> {
        if k + len > self.c.len() {
            return Err(AjError::BadInput(format!("diagonal {k} needs order {}", k + len - 1)));
        }
        Ok((0..len).map(|j| self.get(k + j, j)).collect())
    }
}

/// Expands J_n(e^ħ) for n = 1..=n_max up to ħ^order and interpolates every
/// ħ-coefficient as a polynomial in n. The surplus nodes must agree exactly.
pub fn hbar_expand_family(knot: Knot, n_max: u32, order: usize) -> Result<VassilievTable, AjError> {
    if (n_max as usize) < order + 2 {
        return Err(AjError::BadInput(format!("n_max = {n_max} is below order + 2 = {}", order + 2)));
    }
    let values: Vec<Vec<Rational>> = (1..=n_max).map(|n| jones(knot, n).exp_series(order)).collect();
    let mut c = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut a = RatMatrix::zeros(n_max as usize, m + 1);
        let mut b = Vec::with_capacity(n_max as usize);
        for (row, vals) in values.iter().enumerate() {
            let n = BigInt::from(row + 1);
            let mut p = BigInt::one();
            for j in 0..=m {
                a[(row, j)] = Rational::from_integer(p.clone());
                p *= &n;
            }
            b.push(vals[m].clone());
        }
        match solve_linear(&a, &b) {
            LinearSolution::Unique(x) => c.push(x),
            _ => return Err(AjError::DegreeOverflow { order: m }),
        }
    }
    Ok(VassilievTable { c })
}

/// P₀, P₁, … with J_n(e^ħ) = Σ_k P_k(x) ħ^k / Δ(x)^{2k+1}, x = e^{nħ}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PkList {
    pub knot: Knot,
    pub alexander: Laurent,
    pub p: Vec<Laurent>,
}

/// The operator expanded in ħ: e[r][l] = Σ_j j^r/r! [ħ^l](C_j(x, e^ħ)(x e^{jħ/2} − e^{−jħ/2})).
struct ExpandedOperator {
    e: Vec<Vec<Laurent>>,
}

impl ExpandedOperator {
    fn new(op: &QDifferenceOperator, max_total: usize) -> Result<Self, AjError> {
        let mut d: Vec<(usize, Vec<Laurent>)> = Vec::new();
        for (j, c) in &op.terms {
            let cs: Vec<Laurent> = (0..=max_total).map(|s| c.hbar_coefficient(s)).collect::<Result<_, _>>()?;
            let jh = rat(*j as i64, 2);
            let hs: Vec<Laurent> = (0..=max_total)
                .map(|t| {
                    let fact = Rational::from_integer(crate::qseries::factorial(t as u64));
                    let plus = num_traits::pow(jh.clone(), t) / &fact;
                    let minus = num_traits::pow(-jh.clone(), t) / &fact;
                    Laurent::from_terms([(1, plus), (0, -minus)])
                })
                .collect();
            let ds: Vec<Laurent> = (0..=max_total)
                .map(|l| (0..=l).fold(Laurent::zero(), |acc, s| &acc + &(&cs[s] * &hs[l - s])))
                .collect();
            d.push((*j, ds));
        }
        let mut e = Vec::with_capacity(max_total + 1);
        for r in 0..=max_total {
            let fact = Rational::from_integer(crate::qseries::factorial(r as u64));
            let row: Vec<Laurent> = (0..=max_total - r)
                .map(|l| {
                    d.iter().fold(Laurent::zero(), |acc, (j, ds)| {
                        let w = num_traits::pow(ri(*j as i64), r) / &fact;
                        &acc + &ds[l].scale(&w)
                    })
                })
                .collect();
            e.push(row);
        }
        Ok(ExpandedOperator { e })
    }
}

/// Solves for P_k order by order in ħ with a symmetric Laurent ansatz of
/// degree 3k, doubling the window when no solution fits. The integration
/// constant is fixed by P_k(1) = c[k][0].
pub fn solve_pk(knot: Knot, k_max: usize) -> Result<PkList, AjError> {
    let op = ahat_operator(knot)?;
    let table = hbar_expand_family(knot, k_max as u32 + 2, k_max)?;
    let c0: Vec<Rational> = (0..=k_max).map(|k| table.get(k, 0)).collect();
    solve_pk_with(knot, &op, &c0)
}

/// As [`solve_pk`] with explicit normalizations c0[k] = P_k(1).
pub fn solve_pk_with(knot: Knot, op: &QDifferenceOperator, c0: &[Rational]) -> Result<PkList, AjError> {
    let k_max = c0.len().saturating_sub(1);
    let delta = alexander(knot);
    let dtheta = delta.theta();
    let ex = ExpandedOperator::new(op, k_max + 1)?;
    if !ex.e[0][0].is_zero() {
        return Err(AjError::Inconsistent(0));
    }
    // nums[i][r]: θ^r(P_i/Δ^{2i+1}) = nums[i][r] / Δ^{2i+1+r}
    let mut nums: Vec<Vec<Laurent>> = vec![vec![Laurent::one()]];
    let apply = |k: usize, p: &Laurent| -> Laurent {
        let a = &(&ex.e[0][1] * p) * &delta;
        let b = &(&p.theta() * &delta) - &(&p.scale(&ri(2 * k as i64 + 1)) * &dtheta);
        &a + &(&ex.e[1][0] * &b)
    };
    if !apply(0, &Laurent::one()).is_zero() {
        return Err(AjError::Inconsistent(0));
    }
    for k in 1..=k_max {
        let n = k + 1;
        let mut by_power: BTreeMap<usize, Laurent> = BTreeMap::new();
        for (i, row) in nums.iter_mut().enumerate().take(k) {
            while row.len() <= n - i {
                let r = row.len() - 1;
                let last = &row[r];
                let next = &(&last.theta() * &delta) - &(&last.scale(&ri((2 * i + 1 + r) as i64)) * &dtheta);
                row.push(next);
            }
            for r in 0..=n - i {
                let term = &ex.e[r][n - i - r] * &row[r];
                let slot = by_power.entry(2 * i + 1 + r).or_default();
                *slot = &*slot + &term;
            }
        }
        let mut known = Laurent::zero();
        for p in 1..=2 * n {
            known = &known * &delta;
            if let Some(t) = by_power.get(&p) {
                known = &known + t;
            }
        }
        let rhs = -&known;
        let mut window = (3 * k) as i64;
        let mut solved = None;
        for _ in 0..4 {
            match solve_symmetric(&apply, k, &rhs, window, &c0[k]) {
                Some(Ok(p)) => {
                    solved = Some(p);
                    break;
                }
                Some(Err(())) => return Err(AjError::Inconsistent(k)),
                None => window *= 2,
            }
        }
        let p = solved.ok_or(AjError::AnsatzTooSmall { k, window: window / 2 })?;
        nums.push(vec![p]);
    }
    Ok(PkList { knot, alexander: delta, p: nums.into_iter().map(|mut row| row.swap_remove(0)).collect() })
}

/// None when the window is too small, Some(Err) when the solution is not unique.
fn solve_symmetric<F>(apply: &F, k: usize, rhs: &Laurent, window: i64, value_at_one: &Rational) -> Option<Result<Laurent, ()>>
where
    F: Fn(usize, &Laurent) -> Laurent,
{
    let basis: Vec<Laurent> = (0..=window)
        .map(|e| if e == 0 { Laurent::one() } else { Laurent::from_int_terms(&[(e, 1), (-e, 1)]) })
        .collect();
    let images: Vec<Laurent> = basis.iter().map(|b| apply(k, b)).collect();
    let mut rows: BTreeMap<i64, usize> = BTreeMap::new();
    for l in images.iter().chain(std::iter::once(rhs)) {
        for e in l.coeffs().keys() {
            let len = rows.len();
            rows.entry(*e).or_insert(len);
        }
    }
    let nrows = rows.len() + 1;
    let mut a = RatMatrix::zeros(nrows, basis.len());
    let mut b = vec![Rational::zero(); nrows];
    for (col, img) in images.iter().enumerate() {
        for (e, c) in img.coeffs() {
            a[(rows[e], col)] = c.clone();
        }
    }
    for (e, c) in rhs.coeffs() {
        b[rows[e]] = c.clone();
    }
    let last = nrows - 1;
    for (col, bas) in basis.iter().enumerate() {
        a[(last, col)] = bas.eval(&ri(1));
    }
    b[last] = value_at_one.clone();
    match solve_linear(&a, &b) {
        LinearSolution::Unique(u) => Some(Ok(basis.iter().zip(u).fold(Laurent::zero(), |acc, (bas, c)| &acc + &bas.scale(&c)))),
        LinearSolution::Underdetermined(_) => Some(Err(())),
        LinearSolution::Inconsistent => None,
    }
}

/// Independent route to P_k: R_k(u) = Σ_j c[k+j][j] u^j is multiplied by
/// Δ(e^u)^{2k+1} and recognized as a Laurent polynomial in e^u with degree
/// at most 2k + 1.
pub fn pk_oracle(knot: Knot, k_max: usize) -> Result<PkList, AjError> {
    let need = |k: usize| 2 * (2 * k as i64 + 1) as usize + 3;
    let order = (0..=k_max).map(|k| k + need(k) - 1).max().unwrap_or(0);
    let table = hbar_expand_family(knot, order as u32 + 2, order)?;
    let delta = alexander(knot);
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let len = need(k);
        let r = table.diagonal(k, len)?;
        let d = delta.pow(2 * k as u32 + 1).exp_series(len - 1);
        let prod: Vec<Rational> = (0..len).map(|i| (0..=i).fold(Rational::zero(), |acc, s| acc + &r[s] * &d[i - s])).collect();
        let s = recognize_exp_sum(&prod, 2 * k as i64 + 1).map_err(|_| AjError::RecognitionFailed(format!("P_{k}")))?;
        out.push(qseries_to_laurent(&s).ok_or_else(|| AjError::RecognitionFailed(format!("P_{k}")))?);
    }
    Ok(PkList { knot, alexander: delta, p: out })
}

fn qseries_to_laurent(s: &QSeries) -> Option<Laurent> {
    let mut out = Laurent::zero();
    for (e, c) in s.terms() {
        if !e.is_integer() {
            return None;
        }
        out.add_term(crate::exactnum::to_i64(e.numer()), c.clone());
    }
    Some(out)
}

/// The q-window used to recognize f_m for m ≤ m_init: |exponent| ≤ ⌈m²/16⌉.
fn recognition_window(m_init: i64) -> i64 {
    ((m_init * m_init + 15) / 16).max(1)
}

/// Initial slices f_m(q), m odd ≤ m_init, read off from the P_k expansion
/// and recognized as q-Laurent polynomials.
pub fn fk_initial(knot: Knot, m_init: i64) -> Result<BTreeMap<i64, QSeries>, AjError> {
    if m_init < 1 {
        return Err(AjError::BadInput("m_init must be positive".into()));
    }
    let w = recognition_window(m_init);
    let order = (2 * w + 2) as usize;
    let pk = solve_pk(knot, order)?;
    fk_initial_from(&pk, m_init, w)
}

fn fk_initial_from(pk: &PkList, m_init: i64, w: i64) -> Result<BTreeMap<i64, QSeries>, AjError> {
    let xw = (m_init + 1) / 2;
    let expansions: Vec<BTreeMap<i64, Rational>> = pk
        .p
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let den = pk.alexander.pow(2 * k as u32 + 1);
            symmetric_expansion(&XRationalFunction { num: p.clone(), den }, xw)
        })
        .collect();
    let mut out = BTreeMap::new();
    for m in (1..=m_init).step_by(2) {
        let lo = (m - 1) / 2;
        let hi = (m + 1) / 2;
        let series: Vec<Rational> = expansions
            .iter()
            .map(|se| {
                let a = se.get(&lo).cloned().unwrap_or_else(Rational::zero);
                let b = se.get(&hi).cloned().unwrap_or_else(Rational::zero);
                (a - b) * ri(2)
            })
            .collect();
        let f = recognize_exp_sum(&series, w).map_err(|_| AjError::RecognitionFailed(format!("f_{m}")))?;
        out.insert(m, f);
    }
    Ok(out)
}

/// Laurent polynomial in T = q^{m/2} and Q = q^{1/2}; the key (j, e) stands
/// for T^j Q^e.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnitPoly {
    terms: BTreeMap<(i64, i64), Rational>,
}

impl UnitPoly {
    pub fn add_term(&mut self, j: i64, e: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let v = self.terms.entry((j, e)).or_insert_with(Rational::zero);
        *v += c;
        if v.is_zero() {
            self.terms.remove(&(j, e));
        }
    }

    pub fn from_int_terms(terms: &[(i64, i64, i64)]) -> Self {
        let mut p = UnitPoly::default();
        for (j, e, c) in terms {
            p.add_term(*j, *e, ri(*c));
        }
        p
    }

    pub fn terms(&self) -> &BTreeMap<(i64, i64), Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value at a concrete m, as an exact q-series.
    pub fn eval(&self, m: i64) -> QSeries {
        QSeries::from_terms(self.terms.iter().map(|((j, e), c)| (rat(e + j * m, 2), c.clone())), None)
    }
}

impl Mul for &UnitPoly {
    type Output = UnitPoly;
    fn mul(self, rhs: &UnitPoly) -> UnitPoly {
        let mut out = UnitPoly::default();
        for ((j1, e1), c1) in &self.terms {
            for ((j2, e2), c2) in &rhs.terms {
                out.add_term(j1 + j2, e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for UnitPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, ((j, e), c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mag = c.abs();
            let mut parts = Vec::new();
            if !mag.is_one() || (*j == 0 && *e == 0) {
                parts.push(mag.to_string());
            }
            if *e != 0 {
                parts.push(format!("Q^{e}"));
            }
            if *j != 0 {
                parts.push(format!("T^{j}"));
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// Σ_{i ≤ step} coefficients[i] f_{m+2i} = 0 with T = q^{m/2}, Q = q^{1/2};
/// the last coefficient is the denominator when solving for f_{m+2·step}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FRecursion {
    pub step: usize,
    pub coefficients: Vec<UnitPoly>,
}

impl FRecursion {
    pub fn denominator(&self) -> &UnitPoly {
        &self.coefficients[self.step]
    }

    /// Σ_i coefficients[i](m) f_{m+2i} with f_{−m} = −f_m.
    pub fn residual<F: Fn(i64) -> QSeries>(&self, m: i64, f: F) -> QSeries {
        let signed = |k: i64| if k < 0 { -f(-k) } else { f(k) };
        (0..self.step).chain(std::iter::once(self.step)).fold(QSeries::zero(), |acc, i| {
            &acc + &(&self.coefficients[i].eval(m) * &signed(m + 2 * i as i64))
        })
    }

    /// Solves for f_{m+2·step}; the division must be exact.
    pub fn next<F: Fn(i64) -> QSeries>(&self, m: i64, f: F) -> Result<QSeries, AjError> {
        let signed = |k: i64| if k < 0 { -f(-k) } else { f(k) };
        let top = m + 2 * self.step as i64;
        let mut acc = QSeries::zero();
        for i in 0..self.step {
            acc = &acc - &(&self.coefficients[i].eval(m) * &signed(m + 2 * i as i64));
        }
        let den = self.denominator().eval(m);
        if den.is_zero() {
            return Err(AjError::NonzeroRemainder(top));
        }
        acc.div_exact(&den).map_err(|e| match e {
            SeriesError::NonzeroRemainder => AjError::NonzeroRemainder(top),
            other => AjError::Series(other),
        })
    }
}

impl fmt::Display for FRecursion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coefficients.iter().enumerate() {
            writeln!(f, "f_{{m+{}}}: {c}", 2 * i)?;
        }
        Ok(())
    }
}

/// Collects the x^{M/2} coefficients of Σ_j C_j(x, q) F(q^j x) for the
/// antisymmetric ansatz F = ½ Σ f_m (x^{m/2} − x^{−m/2}).
pub fn derive_f_recursion(op: &QDifferenceOperator) -> Result<FRecursion, AjError> {
    let (a_min, a_max) = op.x_range();
    let parity_ok = op.terms.iter().all(|(_, c)| c.terms().keys().all(|(a, _)| a % 2 == 0));
    if !parity_ok {
        return Err(AjError::BadInput("half-integer power of x in an operator coefficient".into()));
    }
    let span = a_max - a_min;
    if span == 0 {
        return Err(AjError::BadInput("operator does not involve x".into()));
    }
    let step = (span / 2) as usize;
    let mut coefficients = vec![UnitPoly::default(); step + 1];
    for (j, c) in &op.terms {
        let j = *j as i64;
        for ((a, b), v) in c.terms() {
            let s = a_max - a;
            coefficients[(s / 2) as usize].add_term(j, b + j * s, v.clone());
        }
    }
    Ok(FRecursion { step, coefficients })
}

/// Runs the f-recursion from the extracted initial slices up to m_max.
/// Every step is an exact Laurent division.
pub fn fk_extend(knot: Knot, m_max: i64) -> Result<XSeries, AjError> {
    let op = ahat_operator(knot)?;
    let rec = derive_f_recursion(&op)?;
    let m_init = 2 * rec.step as i64 - 1;
    let init = fk_initial(knot, m_init)?;
    let f = extend_with(&rec, init, m_max)?;
    let half = rat(1, 2);
    let mut out = XSeries::new(true);
    for (m, s) in f.into_iter().filter(|(m, _)| *m <= m_max) {
        out.set(m, s.scale(&half));
    }
    Ok(out)
}

/// Extends odd-indexed slices f_m from the given initial ones.
pub fn extend_with(rec: &FRecursion, mut f: BTreeMap<i64, QSeries>, m_max: i64) -> Result<BTreeMap<i64, QSeries>, AjError> {
    let shift = 2 * rec.step as i64;
    let mut m = 1;
    while m + shift <= m_max {
        if !f.contains_key(&(m + shift)) {
            let next = rec.next(m, |k| f.get(&k).cloned().unwrap_or_else(QSeries::zero))?;
            f.insert(m + shift, next);
        }
        m += 2;
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnihilationReport {
    /// Values M for which the x^{M/2} coefficient was fully determined.
    pub checked: Vec<i64>,
    /// Nonzero residuals by M.
    pub nonzero: BTreeMap<i64, QSeries>,
}

impl AnnihilationReport {
    pub fn is_zero(&self) -> bool {
        self.nonzero.is_empty()
    }
}

/// Computes the x^{M/2} coefficients of Σ_j C_j(x, q) F(q^j x) for every M
/// whose contributing slices all lie in |m| ≤ window.
pub fn verify_annihilation(op: &QDifferenceOperator, f: &XSeries, window: i64) -> AnnihilationReport {
    let (a_min, a_max) = op.x_range();
    let mut report = AnnihilationReport { checked: Vec::new(), nonzero: BTreeMap::new() };
    for big_m in (a_max - window)..=(a_min + window) {
        let mut acc = QSeries::zero();
        for (j, c) in &op.terms {
            let j = *j as i64;
            for ((a, b), v) in c.terms() {
                let idx = big_m - a;
                let s = f.slice(idx);
                if s.is_zero() {
                    continue;
                }
                // x^{a/2} q^{b/2} · q^{j idx/2} x^{idx/2}
                let shift = rat(b + j * idx, 2);
                acc = &acc + &s.shift(&shift).scale(v);
            }
        }
        report.checked.push(big_m);
        if !acc.is_zero() {
            report.nonzero.insert(big_m, acc);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(terms: &[(i64, i64)]) -> Laurent {
        Laurent::from_int_terms(terms)
    }

    #[test]
    fn jones_examples() {
        assert_eq!(jones(Knot::TrefoilRight, 1), Laurent::one());
        assert_eq!(jones(Knot::TrefoilRight, 2), lp(&[(-1, 1), (-3, 1), (-4, -1)]));
        assert_eq!(
            jones(Knot::TrefoilRight, 3),
            lp(&[(-2, 1), (-5, 1), (-7, -1), (-8, 1), (-9, -1), (-10, -1), (-11, 1)])
        );
        assert_eq!(jones_fig8(2), lp(&[(-2, 1), (-1, -1), (0, 1), (1, -1), (2, 1)]));
        let j3 = lp(&[
            (-6, 1),
            (-5, -1),
            (-4, -1),
            (-3, 2),
            (-2, -1),
            (-1, -1),
            (0, 3),
            (1, -1),
            (2, -1),
            (3, 2),
            (4, -1),
            (5, -1),
            (6, 1),
        ]);
        assert_eq!(jones_fig8(3), j3);
        for n in 1..=12 {
            assert!(jones_fig8(n).is_palindromic());
        }
    }

    #[test]
    fn jones_matches_torus_formula() {
        for n in 1..=5i64 {
            let tj = crate::knotinv::torus_jones_unnormalized(2, 3, n).unwrap();
            let qn = QSeries::from_terms([(rat(n, 2), ri(1)), (rat(-n, 2), ri(-1))], None);
            let q1 = QSeries::from_terms([(rat(1, 2), ri(1)), (rat(-1, 2), ri(-1))], None);
            let bracket = qn.div_exact(&q1).unwrap();
            let j = tj.div_exact(&bracket).unwrap();
            assert_eq!(j, jones(Knot::TrefoilRight, n as u32).to_qseries(), "n = {n}");
        }
    }

    #[test]
    fn vassiliev_examples() {
        let t = hbar_expand_family(Knot::TrefoilRight, 8, 5).unwrap();
        assert_eq!(t.c[2], vec![ri(1), ri(0), ri(-1)]);
        assert_eq!(t.c[3], vec![ri(-2), ri(0), ri(2), ri(0)]);
        assert_eq!(t.c[4], vec![rat(73, 12), ri(0), ri(-7), ri(0), rat(11, 12)]);
        assert_eq!(t.c[5], vec![rat(-43, 2), ri(0), rat(79, 3), ri(0), rat(-29, 6), ri(0)]);
        let f = hbar_expand_family(Knot::Fig8, 8, 6).unwrap();
        assert_eq!(f.c[2], vec![ri(-1), ri(0), ri(1)]);
        assert_eq!(f.c[4], vec![rat(47, 12), ri(0), ri(-5), ri(0), rat(13, 12)]);
        assert_eq!(f.c[6][0], rat(-12361, 360));
        assert_eq!(f.c[6][6], rat(421, 360));
        assert!(hbar_expand_family(Knot::Fig8, 5, 4).is_err());
    }

    #[test]
    fn operators_clear_displayed_coefficients() {
        for knot in [Knot::TrefoilRight, Knot::Fig8] {
            let op = ahat_operator(knot).unwrap();
            let raw = op.raw_form.clone().unwrap();
            assert_eq!(op.terms.len(), raw.coefficients.len());
            for ((j, c), (num, den)) in op.terms.iter().zip(&raw.coefficients) {
                assert_eq!(&(c * den), &(num * &raw.clearing), "{knot} shift {j}");
            }
        }
        assert_eq!(ahat_operator(Knot::TrefoilRight).unwrap().terms.len(), 3);
        assert_eq!(ahat_operator(Knot::Fig8).unwrap().terms.len(), 4);
        assert!(matches!(ahat_operator(Knot::TrefoilLeft), Err(AjError::UnsupportedKnot(_))));
    }

    #[test]
    fn displayed_hbar_expansion_of_alpha() {
        // trefoil α = 1/x³ − 2(x²−2)/(x³(x²−1)) ħ + …
        let op = ahat_operator(Knot::TrefoilRight).unwrap();
        let (num, den) = &op.raw_form.unwrap().coefficients[0];
        let (n0, n1) = (num.hbar_coefficient(0).unwrap(), num.hbar_coefficient(1).unwrap());
        let (d0, d1) = (den.hbar_coefficient(0).unwrap(), den.hbar_coefficient(1).unwrap());
        // α₀ = n0/d0, α₁ = (n1 d0 − n0 d1)/d0²
        assert_eq!(&n0 * &lp(&[(3, 1)]), d0);
        let lhs = &(&(&n1 * &d0) - &(&n0 * &d1)) * &(&lp(&[(3, 1)]) * &lp(&[(2, 1), (0, -1)]));
        let rhs = &(&d0 * &d0) * &lp(&[(2, -2), (0, 4)]);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn pk_small_orders() {
        let t = solve_pk(Knot::TrefoilRight, 2).unwrap();
        assert_eq!(t.p[0], Laurent::one());
        assert_eq!(t.p[1], lp(&[(2, 1), (-2, 1), (1, -2), (-1, -2), (0, 2)]));
        let p2 = Laurent::from_terms([
            (4, rat(1, 2)),
            (-4, rat(1, 2)),
            (3, ri(-2)),
            (-3, ri(-2)),
            (2, rat(7, 2)),
            (-2, rat(7, 2)),
            (1, ri(-6)),
            (-1, ri(-6)),
            (0, ri(9)),
        ]);
        assert_eq!(t.p[2], p2);
        let f = solve_pk(Knot::Fig8, 3).unwrap();
        assert!(f.p[1].is_zero());
        assert_eq!(f.p[2], lp(&[(2, 1), (-2, 1), (1, -4), (-1, -4), (0, 5)]));
        assert!(f.p[3].is_zero());
        let u = solve_pk(Knot::Unknot, 3).unwrap();
        assert!(u.p[1..].iter().all(|p| p.is_zero()));
    }

    #[test]
    fn oracle_agrees_for_low_orders() {
        let a = solve_pk(Knot::TrefoilRight, 2).unwrap();
        let b = pk_oracle(Knot::TrefoilRight, 2).unwrap();
        assert_eq!(a.p, b.p);
        let a = solve_pk(Knot::Fig8, 2).unwrap();
        let b = pk_oracle(Knot::Fig8, 2).unwrap();
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn trefoil_recursion_matches_display() {
        let rec = derive_f_recursion(&ahat_operator(Knot::TrefoilRight).unwrap()).unwrap();
        assert_eq!(rec.step, 5);
        // multiply by −Q⁻¹ to reach (1 − Q⁹T) f_{m+10} = Q⁶[…]
        let norm = UnitPoly::from_int_terms(&[(0, -1, -1)]);
        let got: Vec<UnitPoly> = rec.coefficients.iter().map(|c| c * &norm).collect();
        let q6 = |t: &[(i64, i64, i64)]| {
            let neg: Vec<(i64, i64, i64)> = t.iter().map(|(j, e, c)| (*j, e + 6, -c)).collect();
            UnitPoly::from_int_terms(&neg)
        };
        let expect = vec![
            q6(&[(1, 3, 1), (2, 4, -1)]),
            UnitPoly::default(),
            q6(&[(2, 10, 1), (1, 1, -1)]),
            q6(&[(0, 0, 1), (1, 1, -1)]),
            UnitPoly::default(),
            UnitPoly::from_int_terms(&[(0, 0, 1), (1, 9, -1)]),
        ];
        assert_eq!(got, expect);
    }

    #[test]
    fn trefoil_closed_form_satisfies_recursion() {
        let op = ahat_operator(Knot::TrefoilRight).unwrap();
        let rec = derive_f_recursion(&op).unwrap();
        let fk = crate::knotinv::torus_fk(2, 3, 121).unwrap();
        for m in (-9..=101).step_by(2) {
            let r = rec.residual(m, |k| fk.slice(k).scale(&ri(2)));
            assert!(r.is_zero(), "m = {m}");
        }
        assert!(verify_annihilation(&op, &fk, 41).is_zero());
    }

    #[test]
    fn unknot_annihilation() {
        let op = ahat_operator(Knot::Unknot).unwrap();
        let mut f = XSeries::new(true);
        f.set(1, QSeries::one());
        let report = verify_annihilation(&op, &f, 9);
        assert!(report.is_zero());
        assert!(!report.checked.is_empty());
        let mut bad = f.clone();
        bad.set(3, QSeries::one());
        assert!(!verify_annihilation(&op, &bad, 9).is_zero());
    }

    #[test]
    fn trefoil_initial_and_extension() {
        let init = fk_initial(Knot::TrefoilRight, 9).unwrap();
        let q = |e: i64, c: i64| QSeries::from_int_terms(&[(e, c)]);
        assert_eq!(init[&1], q(1, -1));
        assert!(init[&3].is_zero());
        assert_eq!(init[&5], q(2, 1));
        assert_eq!(init[&7], q(3, 1));
        assert!(init[&9].is_zero());
        let ext = fk_extend(Knot::TrefoilRight, 61).unwrap();
        let fk = crate::knotinv::torus_fk(2, 3, 61).unwrap();
        for m in 1..=61 {
            assert_eq!(ext.slice(m), fk.slice(m), "m = {m}");
        }
    }
}
