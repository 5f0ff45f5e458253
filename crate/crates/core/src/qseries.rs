//! Truncated q-series with rational exponents, x-graded series, Laurent
//! polynomials and rational functions in x, and the expansion utilities
//! built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactnum::{parse_rational, rational_string, ri, solve_linear, LinearSolution, RatMatrix, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("no q-Laurent polynomial in the window matches the expansion")]
    NoMatch,
    #[error("expansion too short: need at least {need} coefficients, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("exact division left a nonzero remainder")]
    NonzeroRemainder,
    #[error("operation needs an exact (finite) series")]
    NotExact,
    #[error("division by zero series")]
    DivisionByZero,
    #[error("malformed series JSON: {0}")]
    Json(String),
}

/// Σ c_e q^e with rational exponents. `complete_below = Some(B)` means every
/// term with exponent < B is present and exact and nothing at or above B is
/// stored; `None` means the series is an exact finite Laurent polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct QSeries {
    terms: BTreeMap<Rational, Rational>,
    complete_below: Option<Rational>,
}

impl QSeries {
    pub fn zero() -> Self {
        QSeries::default()
    }

    pub fn one() -> Self {
        Self::monomial(ri(1), ri(0))
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, ri(0))
    }

    /// c·q^e
    pub fn monomial(c: Rational, e: Rational) -> Self {
        let mut s = QSeries::zero();
        s.add_term(e, c);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = (Rational, Rational)>>(terms: I, complete_below: Option<Rational>) -> Self {
        let mut s = QSeries { terms: BTreeMap::new(), complete_below: None };
        for (e, c) in terms {
            s.add_term(e, c);
        }
        match complete_below {
            Some(b) => s.truncate(&b),
            None => s,
        }
    }

    /// Integer-exponent convenience constructor: pairs (exponent, coefficient).
    pub fn from_int_terms(terms: &[(i64, i64)]) -> Self {
        Self::from_terms(terms.iter().map(|&(e, c)| (ri(e), ri(c))), None)
    }

    pub fn add_term(&mut self, e: Rational, c: Rational) {
        if c.is_zero() {
            return;
        }
        if let Some(b) = &self.complete_below {
            if &e >= b {
                return;
            }
        }
        let entry = self.terms.entry(e.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Rational, Rational> {
        &self.terms
    }

    pub fn complete_below(&self) -> Option<&Rational> {
        self.complete_below.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.complete_below.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &Rational) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn min_exponent(&self) -> Option<&Rational> {
        self.terms.keys().next()
    }

    pub fn max_exponent(&self) -> Option<&Rational> {
        self.terms.keys().next_back()
    }

    /// Keeps only exponents < b and tightens the completeness bound to b.
    pub fn truncate(mut self, b: &Rational) -> Self {
        let bound = match &self.complete_below {
            Some(old) if old < b => old.clone(),
            _ => b.clone(),
        };
        self.terms.split_off(&bound);
        self.complete_below = Some(bound);
        self
    }

    /// Multiplies by q^e.
    pub fn shift(&self, e: &Rational) -> Self {
        QSeries {
            terms: self.terms.iter().map(|(k, v)| (k + e, v.clone())).collect(),
            complete_below: self.complete_below.as_ref().map(|b| b + e),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return QSeries { terms: BTreeMap::new(), complete_below: self.complete_below.clone() };
        }
        QSeries {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
            complete_below: self.complete_below.clone(),
        }
    }

    /// q → q^k for k > 0.
    pub fn substitute_power(&self, k: &Rational) -> Self {
        assert!(k.is_positive());
        QSeries {
            terms: self.terms.iter().map(|(e, c)| (e * k, c.clone())).collect(),
            complete_below: self.complete_below.as_ref().map(|b| b * k),
        }
    }

    /// q → q^{-1}; only meaningful for exact series.
    pub fn invert_q(&self) -> Result<Self, SeriesError> {
        if !self.is_exact() {
            return Err(SeriesError::NotExact);
        }
        Ok(QSeries { terms: self.terms.iter().map(|(e, c)| (-e, c.clone())).collect(), complete_below: None })
    }

    /// Value at q = 1 of an exact series.
    pub fn eval_at_one(&self) -> Result<Rational, SeriesError> {
        if !self.is_exact() {
            return Err(SeriesError::NotExact);
        }
        Ok(self.terms.values().fold(Rational::zero(), |a, c| a + c))
    }

    /// Least common denominator of the exponents.
    pub fn exponent_denominator(&self) -> BigInt {
        self.terms.keys().fold(BigInt::one(), |acc, e| num_integer::lcm(acc, e.denom().clone()))
    }

    /// Exact Laurent division; fails unless the divisor divides exactly.
    pub fn div_exact(&self, d: &QSeries) -> Result<QSeries, SeriesError> {
        if !self.is_exact() || !d.is_exact() {
            return Err(SeriesError::NotExact);
        }
        let (Some(dlo), Some(dhi)) = (d.min_exponent().cloned(), d.max_exponent().cloned()) else {
            return Err(SeriesError::DivisionByZero);
        };
        let lead = d.coeff(&dlo);
        let mut rem = self.clone();
        let mut quo = QSeries::zero();
        let Some(top) = self.max_exponent().cloned() else {
            return Ok(QSeries::zero());
        };
        let qmax = &top - &dhi;
        while let Some(e) = rem.min_exponent().cloned() {
            let qe = &e - &dlo;
            if qe > qmax {
                return Err(SeriesError::NonzeroRemainder);
            }
            let qc = rem.coeff(&e) / &lead;
            let term = QSeries::monomial(qc.clone(), qe.clone());
            rem = &rem - &(&term * d);
            quo.add_term(qe, qc);
        }
        Ok(quo)
    }

    /// 1/s up to (not including) q^{n}, for s with a nonzero lowest term.
    pub fn inverse_to(&self, n: &Rational) -> Result<QSeries, SeriesError> {
        let Some(lo) = self.min_exponent().cloned() else {
            return Err(SeriesError::DivisionByZero);
        };
        let lead = self.coeff(&lo);
        // s = c q^lo (1 + t), 1/s = c^{-1} q^{-lo} Σ (-t)^k
        let t = self.shift(&-&lo).scale(&(Rational::one() / &lead)) - QSeries::one();
        let target = n + &lo;
        let t_min = match t.min_exponent() {
            Some(e) => e.clone(),
            None => {
                return Ok(QSeries::monomial(Rational::one() / &lead, -lo).truncate(n));
            }
        };
        if !t_min.is_positive() {
            return Err(SeriesError::NotExact);
        }
        let mut acc = QSeries::one().truncate(&target);
        let mut power = QSeries::one().truncate(&target);
        let neg_t = t.scale(&ri(-1)).truncate(&target);
        let mut k = Rational::zero();
        loop {
            k += &t_min;
            if k >= target {
                break;
            }
            power = (&power * &neg_t).truncate(&target);
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.shift(&-&lo).scale(&(Rational::one() / lead)).truncate(n))
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> =
            self.terms.iter().map(|(e, c)| json!({"e": rational_string(e), "c": rational_string(c)})).collect();
        json!({
            "terms": terms,
            "complete_below": self.complete_below.as_ref().map(rational_string),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        let bad = |m: &str| SeriesError::Json(m.to_string());
        let arr = v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))?;
        let mut terms = Vec::new();
        for t in arr {
            let e = t.get("e").and_then(Value::as_str).and_then(parse_rational).ok_or_else(|| bad("bad exponent"))?;
            let c = t.get("c").and_then(Value::as_str).and_then(parse_rational).ok_or_else(|| bad("bad coefficient"))?;
            terms.push((e, c));
        }
        let bound = match v.get("complete_below") {
            None | Some(Value::Null) => None,
            Some(b) => Some(b.as_str().and_then(parse_rational).ok_or_else(|| bad("bad bound"))?),
        };
        Ok(QSeries::from_terms(terms, bound))
    }

    /// Partial sum of the stored terms at a complex q with |q| < 1.
    pub fn eval_numeric(&self, q: Complex64) -> Complex64 {
        let lnq = q.ln();
        self.terms
            .iter()
            .map(|(e, c)| {
                let ef = e.to_f64().expect("exponent fits in f64");
                let cf = c.to_f64().expect("coefficient fits in f64");
                (lnq * ef).exp() * cf
            })
            .sum()
    }

    /// Terms of `self` and `other` agree below the smaller completeness bound.
    pub fn agrees_with(&self, other: &QSeries) -> bool {
        let bound = match (&self.complete_below, &other.complete_below) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        match bound {
            None => self == other,
            Some(b) => self.clone().truncate(&b).terms == other.clone().truncate(&b).terms,
        }
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let unit = mag.is_one();
            if e.is_zero() {
                write!(f, "{mag}")?;
            } else {
                if !unit {
                    write!(f, "{mag}*")?;
                }
                if e.is_one() {
                    write!(f, "q")?;
                } else {
                    write!(f, "q^{{{e}}}")?;
                }
            }
        }
        if let Some(b) = &self.complete_below {
            if first {
                write!(f, "O(q^{{{b}}})")?;
            } else {
                write!(f, " + O(q^{{{b}}})")?;
            }
        } else if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn min_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        let bound = min_opt(self.complete_below.clone(), rhs.complete_below.clone());
        let mut out = QSeries { terms: self.terms.clone(), complete_below: None };
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        match bound {
            Some(b) => out.truncate(&b),
            None => out,
        }
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        self + &(-rhs)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        self.scale(&ri(-1))
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        // a = a_k + O(q^A), b = b_k + O(q^B):
        // ab = a_k b_k + O(q^{min(B + min a_k, A + min b_k, A + B)})
        let a_min = self.min_exponent().cloned();
        let b_min = rhs.min_exponent().cloned();
        let mut bound: Option<Rational> = None;
        if let Some(bb) = &rhs.complete_below {
            bound = min_opt(bound, a_min.as_ref().map(|m| m + bb));
        }
        if let Some(ab) = &self.complete_below {
            bound = min_opt(bound, b_min.as_ref().map(|m| m + ab));
        }
        if let (Some(ab), Some(bb)) = (&self.complete_below, &rhs.complete_below) {
            bound = min_opt(bound, Some(ab + bb));
        }
        let mut acc: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            if let Some(b) = &bound {
                if b_min.as_ref().is_some_and(|m| &(e1 + m) >= b) {
                    break;
                }
            }
            for (e2, c2) in &rhs.terms {
                let e = e1 + e2;
                if let Some(b) = &bound {
                    if &e >= b {
                        break;
                    }
                }
                *acc.entry(e).or_insert_with(Rational::zero) += c1 * c2;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        QSeries { terms: acc, complete_below: bound }
    }
}

impl Add for QSeries {
    type Output = QSeries;
    fn add(self, rhs: QSeries) -> QSeries {
        &self + &rhs
    }
}

impl Sub for QSeries {
    type Output = QSeries;
    fn sub(self, rhs: QSeries) -> QSeries {
        &self - &rhs
    }
}

impl Mul for QSeries {
    type Output = QSeries;
    fn mul(self, rhs: QSeries) -> QSeries {
        &self * &rhs
    }
}

impl Neg for QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        -&self
    }
}

/// (q;q)_n truncated below q^cutoff; `n = None` is the infinite product.
pub fn pochhammer_q(n: Option<u64>, cutoff: i64) -> QSeries {
    let cut = ri(cutoff);
    let limit = match n {
        Some(n) => n,
        None => cutoff.max(0) as u64,
    };
    let mut acc = QSeries::one();
    for k in 1..=limit {
        if k as i64 >= cutoff {
            break;
        }
        let factor = QSeries::from_int_terms(&[(0, 1), (k as i64, -1)]);
        acc = &acc * &factor;
        acc = drop_at_or_above(acc, &cut);
    }
    let degree = n.map(|n| (n * (n + 1) / 2) as i64);
    match degree {
        Some(d) if d < cutoff => acc,
        _ => acc.truncate(&cut),
    }
}

fn drop_at_or_above(s: QSeries, cut: &Rational) -> QSeries {
    let exact = s.is_exact();
    let t = s.truncate(cut);
    if exact {
        QSeries::from_terms(t.terms, None)
    } else {
        t
    }
}

/// s / (q;q)_∞, complete below min(bound of s, cutoff).
pub fn divide_by_euler(s: &QSeries, cutoff: i64) -> QSeries {
    let Some(lo) = s.min_exponent().cloned() else {
        return QSeries::zero().truncate(&ri(cutoff));
    };
    let span = (ri(cutoff) - &lo).ceil().to_integer().to_i64().unwrap_or(0).max(1);
    let inv = partition_series(span);
    (s * &inv).truncate(&ri(cutoff))
}

/// 1/(q;q)_∞ = Σ p(n) q^n below q^n_max, via Euler's recurrence.
pub fn partition_series(n_max: i64) -> QSeries {
    let n = n_max.max(0) as usize;
    let mut p = vec![BigInt::zero(); n];
    if n > 0 {
        p[0] = BigInt::one();
    }
    for m in 1..n {
        let mut acc = BigInt::zero();
        let mut k: i64 = 1;
        loop {
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > m {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += &p[m - g1] * sign;
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= m {
                acc += &p[m - g2] * sign;
            }
            k += 1;
        }
        p[m] = acc;
    }
    QSeries::from_terms(p.into_iter().enumerate().map(|(i, c)| (ri(i as i64), Rational::from_integer(c))), Some(ri(n_max)))
}

/// Laurent polynomial in a single variable with integer exponents and
/// rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct Laurent {
    coeffs: BTreeMap<i64, Rational>,
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent::default()
    }

    pub fn one() -> Self {
        Self::monomial(ri(1), 0)
    }

    pub fn monomial(c: Rational, e: i64) -> Self {
        let mut l = Laurent::zero();
        l.add_term(e, c);
        l
    }

    pub fn from_int_terms(terms: &[(i64, i64)]) -> Self {
        let mut l = Laurent::zero();
        for &(e, c) in terms {
            l.add_term(e, ri(c));
        }
        l
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Rational)>>(terms: I) -> Self {
        let mut l = Laurent::zero();
        for (e, c) in terms {
            l.add_term(e, c);
        }
        l
    }

    pub fn add_term(&mut self, e: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Rational> {
        &self.coeffs
    }

    pub fn coeff(&self, e: i64) -> Rational {
        self.coeffs.get(&e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Laurent::from_terms(self.coeffs.iter().map(|(e, v)| (*e, v * c)))
    }

    pub fn shift(&self, k: i64) -> Self {
        Laurent { coeffs: self.coeffs.iter().map(|(e, v)| (e + k, v.clone())).collect() }
    }

    /// x → x^{-1}
    pub fn invert(&self) -> Self {
        Laurent { coeffs: self.coeffs.iter().map(|(e, v)| (-e, v.clone())).collect() }
    }

    pub fn is_palindromic(&self) -> bool {
        *self == self.invert()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Laurent::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().fold(Rational::zero(), |acc, (e, c)| {
            let p = if *e >= 0 { pow_rat(x, *e as u32) } else { Rational::one() / pow_rat(x, (-e) as u32) };
            acc + c * p
        })
    }

    /// θ = x d/dx
    pub fn theta(&self) -> Self {
        Laurent::from_terms(self.coeffs.iter().map(|(e, c)| (*e, c * ri(*e))))
    }

    /// Ordinary polynomial coefficients after multiplying by x^{-min}:
    /// (shift, coefficients from degree 0 upward).
    fn to_poly(&self) -> (i64, Vec<Rational>) {
        let lo = self.min_exp().unwrap_or(0);
        let hi = self.max_exp().unwrap_or(0);
        let mut v = vec![Rational::zero(); (hi - lo + 1) as usize];
        for (e, c) in &self.coeffs {
            v[(e - lo) as usize] = c.clone();
        }
        (lo, v)
    }

    fn from_poly(shift: i64, v: &[Rational]) -> Self {
        Laurent::from_terms(v.iter().enumerate().map(|(i, c)| (i as i64 + shift, c.clone())))
    }

    /// Monic gcd up to a unit monomial (the result has min exponent 0).
    pub fn gcd(&self, other: &Laurent) -> Laurent {
        let (_, mut a) = self.to_poly();
        let (_, mut b) = other.to_poly();
        trim(&mut a);
        trim(&mut b);
        while !(b.is_empty() || (b.len() == 1 && b[0].is_zero())) {
            let r = poly_rem(&a, &b);
            a = b;
            b = r;
        }
        trim(&mut a);
        if a.is_empty() {
            return Laurent::zero();
        }
        let lead = a.last().unwrap().clone();
        let monic: Vec<Rational> = a.iter().map(|c| c / &lead).collect();
        Laurent::from_poly(0, &monic)
    }

    /// Exact division; None if it does not divide.
    pub fn div_exact(&self, d: &Laurent) -> Option<Laurent> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Laurent::zero());
        }
        let (sa, a) = self.to_poly();
        let (sb, b) = d.to_poly();
        let (q, r) = poly_divrem(&a, &b);
        if r.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(Laurent::from_poly(sa - sb, &q))
    }

    pub fn to_qseries(&self) -> QSeries {
        QSeries::from_terms(self.coeffs.iter().map(|(e, c)| (ri(*e), c.clone())), None)
    }

    /// Power series coefficients of self(e^u) in u, up to u^order inclusive.
    pub fn exp_series(&self, order: usize) -> Vec<Rational> {
        let (den, _) = self.integer_form();
        let mut sums = vec![BigInt::zero(); order + 1];
        for (e, c) in &self.coeffs {
            let mut term = (c * Rational::from_integer(den.clone())).to_integer();
            let e = BigInt::from(*e);
            for (k, slot) in sums.iter_mut().enumerate() {
                if k > 0 {
                    term *= &e;
                }
                *slot += &term;
            }
        }
        let mut fact = BigInt::one();
        sums.into_iter()
            .enumerate()
            .map(|(k, s)| {
                if k > 0 {
                    fact *= k;
                }
                Rational::new(s, &den * &fact)
            })
            .collect()
    }

    /// (d, v) with self = x^{min} Σ_i v_i x^i / d and integer v_i.
    fn integer_form(&self) -> (BigInt, Vec<BigInt>) {
        let den = self.coeffs.values().fold(BigInt::one(), |acc, c| num_integer::lcm(acc, c.denom().clone()));
        let (lo, hi) = (self.min_exp().unwrap_or(0), self.max_exp().unwrap_or(0));
        let mut v = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for (e, c) in &self.coeffs {
            v[(e - lo) as usize] = c.numer() * (&den / c.denom());
        }
        (den, v)
    }
}

fn pow_rat(x: &Rational, k: u32) -> Rational {
    num_traits::pow(x.clone(), k as usize)
}

fn trim(v: &mut Vec<Rational>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut b = b.to_vec();
    trim(&mut b);
    let mut r = a.to_vec();
    trim(&mut r);
    if r.len() < b.len() {
        return (vec![], r);
    }
    let mut q = vec![Rational::zero(); r.len() - b.len() + 1];
    let lead = b.last().unwrap().clone();
    while r.len() >= b.len() && !r.is_empty() {
        let k = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[i + k] -= &f * bc;
        }
        q[k] = f;
        r.pop();
        trim(&mut r);
    }
    (q, r)
}

fn poly_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    poly_divrem(a, b).1
}

impl Add for &Laurent {
    type Output = Laurent;
    fn add(self, rhs: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &Laurent {
    type Output = Laurent;
    fn sub(self, rhs: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Neg for &Laurent {
    type Output = Laurent;
    fn neg(self) -> Laurent {
        self.scale(&ri(-1))
    }
}

impl Mul for &Laurent {
    type Output = Laurent;
    fn mul(self, rhs: &Laurent) -> Laurent {
        let (Some(lo1), Some(lo2)) = (self.min_exp(), rhs.min_exp()) else {
            return Laurent::zero();
        };
        // integer convolution over a common denominator
        let (d1, n1) = self.integer_form();
        let (d2, n2) = rhs.integer_form();
        let mut acc = vec![BigInt::zero(); n1.len() + n2.len() - 1];
        for (i, a) in n1.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in n2.iter().enumerate() {
                if !b.is_zero() {
                    acc[i + j] += a * b;
                }
            }
        }
        let den = d1 * d2;
        let coeffs = acc
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (lo1 + lo2 + i as i64, Rational::new(c, den.clone())))
            .collect();
        Laurent { coeffs }
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.coeffs.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            match *e {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if *e == 1 {
                        write!(f, "x")?;
                    } else {
                        write!(f, "x^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rational function in x: numerator / denominator, both Laurent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XRationalFunction {
    pub num: Laurent,
    pub den: Laurent,
}

impl XRationalFunction {
    /// Builds num/den with common polynomial factors removed.
    pub fn new(num: Laurent, den: Laurent) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return XRationalFunction { num, den: Laurent::one() };
        }
        let g = num.gcd(&den);
        let num = num.div_exact(&g).expect("gcd divides numerator");
        let den = den.div_exact(&g).expect("gcd divides denominator");
        XRationalFunction { num, den }
    }

    pub fn from_laurent(p: Laurent) -> Self {
        XRationalFunction { num: p, den: Laurent::one() }
    }

    /// x → x^{-1}
    pub fn invert(&self) -> Self {
        XRationalFunction { num: self.num.invert(), den: self.den.invert() }
    }
}

/// Expansion of num/den around x = 0 as a Laurent series, coefficients for
/// exponents ≤ hi.
fn expand_at_zero(num: &Laurent, den: &Laurent, hi: i64) -> BTreeMap<i64, Rational> {
    let mut out = BTreeMap::new();
    if num.is_zero() {
        return out;
    }
    let (a, n) = num.to_poly();
    let (b, d) = den.to_poly();
    let lead = a - b;
    if hi < lead {
        return out;
    }
    let count = (hi - lead + 1) as usize;
    let mut c: Vec<Rational> = Vec::with_capacity(count);
    for i in 0..count {
        let mut v = n.get(i).cloned().unwrap_or_else(Rational::zero);
        for j in 1..=i.min(d.len().saturating_sub(1)) {
            v -= &d[j] * &c[i - j];
        }
        c.push(v / &d[0]);
    }
    for (i, v) in c.into_iter().enumerate() {
        if !v.is_zero() {
            out.insert(lead + i as i64, v);
        }
    }
    out
}

/// Average of the expansions of f at x → 0 and x → ∞, for |m| ≤ window.
pub fn symmetric_expansion(f: &XRationalFunction, window: i64) -> BTreeMap<i64, Rational> {
    let zero = expand_at_zero(&f.num, &f.den, window);
    let inf = expand_at_zero(&f.num.invert(), &f.den.invert(), window);
    let mut out: BTreeMap<i64, Rational> = BTreeMap::new();
    let half = Rational::new(1.into(), 2.into());
    for (e, c) in zero {
        if e >= -window {
            *out.entry(e).or_insert_with(Rational::zero) += c * &half;
        }
    }
    for (e, c) in inf {
        let e = -e;
        if e <= window {
            *out.entry(e).or_insert_with(Rational::zero) += c * &half;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Finds the unique Σ_{|j|≤J} c_j q^j whose expansion at q = e^ħ matches the
/// given ħ-coefficients (index = power of ħ). Needs at least 2J + 3
/// coefficients so that two equations are checked beyond the unknown count.
pub fn recognize_exp_sum(series: &[Rational], window: i64) -> Result<QSeries, SeriesError> {
    let unknowns = (2 * window + 1) as usize;
    let need = unknowns + 2;
    if series.len() < need {
        return Err(SeriesError::TooShort { need, got: series.len() });
    }
    let rows = series.len();
    let mut a = RatMatrix::zeros(rows, unknowns);
    for (k, _) in series.iter().enumerate() {
        let fact = factorial(k as u64);
        for (idx, j) in (-window..=window).enumerate() {
            let p = num_traits::pow(BigInt::from(j), k);
            a[(k, idx)] = Rational::new(p, fact.clone());
        }
    }
    match solve_linear(&a, series) {
        LinearSolution::Unique(x) => Ok(QSeries::from_terms(
            x.into_iter().enumerate().map(|(i, c)| (ri(i as i64 - window), c)),
            None,
        )),
        _ => Err(SeriesError::NoMatch),
    }
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// ħ-expansion of an exact q-series at q = e^ħ, orders 0..=order.
pub fn exp_expand(s: &QSeries, order: usize) -> Result<Vec<Rational>, SeriesError> {
    if !s.is_exact() {
        return Err(SeriesError::NotExact);
    }
    let mut out = vec![Rational::zero(); order + 1];
    for (e, c) in s.terms() {
        let mut term = c.clone();
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                term = term * e / ri(k as i64);
            }
            *slot += &term;
        }
    }
    Ok(out)
}

/// Two-variable series Σ_m slice_m(q) x^{m/2}. When `antisymmetric` is set
/// only m > 0 is stored and slice(−m) = −slice(m), slice(0) = 0.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct XSeries {
    slices: BTreeMap<i64, QSeries>,
    antisymmetric: bool,
}

impl XSeries {
    pub fn new(antisymmetric: bool) -> Self {
        XSeries { slices: BTreeMap::new(), antisymmetric }
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.antisymmetric
    }

    /// Sets the x^{m/2} slice. For antisymmetric series, m < 0 stores −s at −m.
    pub fn set(&mut self, m: i64, s: QSeries) {
        if self.antisymmetric {
            assert!(m != 0 || s.is_zero(), "antisymmetric series has no x^0 slice");
            if m == 0 {
                return;
            }
            if m < 0 {
                self.set(-m, -&s);
                return;
            }
        }
        if s.is_zero() && s.is_exact() {
            self.slices.remove(&m);
        } else {
            self.slices.insert(m, s);
        }
    }

    pub fn add_to(&mut self, m: i64, s: &QSeries) {
        let cur = self.slice(m);
        self.set(m, &cur + s);
    }

    pub fn slice(&self, m: i64) -> QSeries {
        if self.antisymmetric && m < 0 {
            return -&self.slice(-m);
        }
        self.slices.get(&m).cloned().unwrap_or_default()
    }

    /// Stored slices (for antisymmetric series, only m > 0).
    pub fn stored(&self) -> &BTreeMap<i64, QSeries> {
        &self.slices
    }

    /// All nonzero slices including mirrored ones.
    pub fn all_slices(&self) -> BTreeMap<i64, QSeries> {
        let mut out = self.slices.clone();
        if self.antisymmetric {
            for (m, s) in &self.slices {
                out.insert(-m, -s);
            }
        }
        out
    }

    pub fn max_m(&self) -> Option<i64> {
        self.slices.keys().next_back().copied()
    }

    pub fn map_slices<F: Fn(&QSeries) -> QSeries>(&self, f: F) -> XSeries {
        XSeries { slices: self.slices.iter().map(|(m, s)| (*m, f(s))).collect(), antisymmetric: self.antisymmetric }
    }

    pub fn restrict(&self, window: i64) -> XSeries {
        XSeries {
            slices: self.slices.iter().filter(|(m, _)| m.abs() <= window).map(|(m, s)| (*m, s.clone())).collect(),
            antisymmetric: self.antisymmetric,
        }
    }

    pub fn to_json(&self) -> Value {
        let slices: Vec<Value> =
            self.slices.iter().map(|(m, s)| json!({"m": m, "series": s.to_json()})).collect();
        json!({"antisymmetric": self.antisymmetric, "slices": slices})
    }

    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        let bad = |m: &str| SeriesError::Json(m.to_string());
        let anti = v.get("antisymmetric").and_then(Value::as_bool).ok_or_else(|| bad("missing antisymmetric"))?;
        let mut out = XSeries::new(anti);
        for s in v.get("slices").and_then(Value::as_array).ok_or_else(|| bad("missing slices"))? {
            let m = s.get("m").and_then(Value::as_i64).ok_or_else(|| bad("bad m"))?;
            let series = QSeries::from_json(s.get("series").ok_or_else(|| bad("missing series"))?)?;
            out.set(m, series);
        }
        Ok(out)
    }
}

impl fmt::Display for XSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, s) in &self.slices {
            if self.antisymmetric {
                writeln!(f, "(x^{{{m}/2}} - x^{{-{m}/2}}): {s}")?;
            } else {
                writeln!(f, "x^{{{m}/2}}: {s}")?;
            }
        }
        Ok(())
    }
}

/// Σ_k R_k(x) ħ^k with rational-function coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HbarXSeries {
    pub coefficients: Vec<XRationalFunction>,
}

impl HbarXSeries {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}
