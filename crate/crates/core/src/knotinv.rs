//! Two-variable invariants of plumbed knot complements: Ẑ_a(Y; z, n, q),
//! F_K(x, q), the solid torus, gluing, the Laplace transform and Dehn
//! surgery, torus knots and their colored Jones stability series.
//!
//! Two-variable series are stored as [`XSeries`] keyed by the exponent of
//! z = x^{1/2}, so the key m stands for x^{m/2}.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactnum::{
    det, dot, inertia, inverse, is_negative_definite, rat, rbig, ri, solve_integer, solve_linear, ExactError,
    IntMatrix, LinearSolution, Rational,
};
use crate::plumbing::{evaluate_continued_fraction, solid_torus_graph, standard_glue, GraphError, PlumbingGraph};
use crate::qseries::{QSeries, SeriesError, XSeries};
use crate::spinc::{glue_spinc, has_parity, solid_torus_rep, SpincError};
use crate::zhat::{check_closed, closed_theta_terms, prefactor, ThetaProblem, ZhatError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KnotError {
    #[error("distinguished vertex has degree {0}; only degree 0 or 1 is supported")]
    UnsupportedDegree(usize),
    #[error("graph minus the distinguished vertex is not negative definite")]
    NotNegativeDefinite,
    #[error("glued graph is not weakly negative definite")]
    NotWeaklyNegativeDefinite,
    #[error("framing matrix is invertible, so the longitude is not the Seifert longitude")]
    NotSeifertFramed,
    #[error("closed-up manifold is not an integer homology sphere")]
    NotZHS,
    #[error("framing matrix is singular")]
    Singular,
    #[error("surgery series diverges: {0}")]
    Divergent(String),
    #[error("conjectural surgery needs explicit epsilon and d for p = {0}")]
    MissingEpsilonD(i64),
    #[error("slice is not a finite q-Laurent polynomial")]
    InfiniteSlice,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spinc(#[from] SpincError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl From<ZhatError> for KnotError {
    fn from(e: ZhatError) -> Self {
        match e {
            ZhatError::NotWeaklyNegativeDefinite => KnotError::NotWeaklyNegativeDefinite,
            ZhatError::Singular => KnotError::Singular,
            ZhatError::BadInput(s) => KnotError::BadInput(s),
            ZhatError::Graph(g) => KnotError::Graph(g),
        }
    }
}

impl From<ExactError> for KnotError {
    fn from(e: ExactError) -> Self {
        ZhatError::from(e).into()
    }
}

/// Boundary data b(m, n): one two-variable slice per value of n.
pub type BoundarySeries = BTreeMap<i64, XSeries>;

fn sign_of(x: i64) -> i64 {
    if x < 0 {
        -1
    } else {
        1
    }
}

/// Checks deg(v₀) ≤ 1 and that the graph minus v₀ is negative definite.
fn check_complement(g: &PlumbingGraph) -> Result<usize, KnotError> {
    let v0 = g.distinguished_index().ok_or(GraphError::MissingDistinguished)?;
    let deg = g.degree(g.distinguished().unwrap());
    if deg > 1 {
        return Err(KnotError::UnsupportedDegree(deg));
    }
    let rest: Vec<usize> = (0..g.len()).filter(|&i| i != v0).collect();
    if !rest.is_empty() && !is_negative_definite(&g.framing_matrix().principal(&rest)) {
        return Err(KnotError::NotNegativeDefinite);
    }
    Ok(v0)
}

fn theta_problem<'a>(g: &PlumbingGraph, m: &'a IntMatrix, v0: usize, c: Vec<Rational>, n: i64) -> ThetaProblem<'a> {
    let mut degree: Vec<Option<usize>> = g.degree_vector().into_iter().map(|d| Some(d as usize)).collect();
    degree[v0] = None;
    let mut fixed = vec![None; g.len()];
    fixed[v0] = Some(n);
    ThetaProblem { m, c, fixed, degree }
}

/// Sums the relative theta series for u = 2n + c with n_{v₀} = n fixed.
fn relative_series(
    g: &PlumbingGraph,
    v0: usize,
    c: Vec<Rational>,
    n: i64,
    window: Option<i64>,
    cutoff: &Rational,
) -> Result<XSeries, KnotError> {
    let m = g.framing_matrix();
    let (sign, shift) = prefactor(g);
    let terms = theta_problem(g, &m, v0, c, n).terms(&(cutoff - &shift))?;
    let deg0 = g.degree(g.distinguished().unwrap());
    let mut slices: BTreeMap<i64, QSeries> = BTreeMap::new();
    let mut put = |k: i64, e: Rational, c: Rational| {
        if window.is_some_and(|w| k.abs() > w) {
            return;
        }
        slices.entry(k).or_insert_with(|| QSeries::from_terms(std::iter::empty(), Some(cutoff.clone()))).add_term(e, c);
    };
    for t in terms {
        let e = &t.q_exponent + &shift;
        let c = t.weight * ri(sign);
        let l = t.ell[v0];
        if deg0 == 0 {
            put(l + 1, e.clone(), c.clone());
            put(l - 1, e, -c);
        } else {
            put(l, e, c);
        }
    }
    let mut out = XSeries::new(false);
    for (k, s) in slices {
        if !s.is_zero() {
            out.set(k, s);
        }
    }
    Ok(out)
}

/// A rational solution x of M x = a, or None when a is not in the image.
fn rational_preimage(m: &IntMatrix, a: &[i64]) -> Option<Vec<Rational>> {
    match solve_linear(&m.to_rational(), &a.iter().map(|&x| ri(x)).collect::<Vec<_>>()) {
        LinearSolution::Unique(x) | LinearSolution::Underdetermined(x) => Some(x),
        LinearSolution::Inconsistent => None,
    }
}

/// Ẑ_a(Y; z, n, q) at fixed n, every slice complete below `cutoff`, keyed by
/// the exponent of z. With `x_window = Some(w)` only keys |m| ≤ w are kept.
///
/// For a Seifert-framed complement (det M = 0) the class must be the
/// self-conjugate one, a = M b, and (b, M b) replaces (a, M⁻¹a).
pub fn zhat_knot(
    g: &PlumbingGraph,
    a: &[i64],
    n: i64,
    x_window: Option<i64>,
    cutoff: &Rational,
) -> Result<XSeries, KnotError> {
    let v0 = check_complement(g)?;
    if !has_parity(g, a) {
        return Err(KnotError::BadInput(format!("{a:?} is not in 2Z^s + delta")));
    }
    let m = g.framing_matrix();
    let c = if det(&m).is_zero() {
        let (b, _) = solve_integer(&m, &a.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
            .ok_or_else(|| KnotError::BadInput("class is not self-conjugate on a Seifert-framed complement".into()))?;
        b.into_iter().map(rbig).collect()
    } else {
        inverse(&m)?.mul_vec(&a.iter().map(|&x| ri(x)).collect::<Vec<_>>())
    };
    relative_series(g, v0, c, n, x_window, cutoff)
}

/// A vector b with M b ≡ δ (mod 2), so that M b represents the self-conjugate
/// relative class of a Seifert-framed complement.
pub fn seifert_b(g: &PlumbingGraph) -> Result<Vec<i64>, KnotError> {
    let m = g.framing_matrix();
    let s = g.len();
    let mut aug = IntMatrix::zeros(s, 2 * s);
    for i in 0..s {
        for j in 0..s {
            aug[(i, j)] = m[(i, j)].clone();
        }
        aug[(i, s + i)] = BigInt::from(2);
    }
    let delta: Vec<BigInt> = g.degree_vector().into_iter().map(BigInt::from).collect();
    let (x, _) = solve_integer(&aug, &delta).ok_or(KnotError::NotZHS)?;
    Ok(x[..s].iter().map(|v| v.to_i64().expect("entry fits in i64")).collect())
}

/// F_K(x, q) = Ẑ_0(Y; x^{1/2}, 0, q) of a Seifert-framed plumbed complement.
pub fn fk_plumbed(g: &PlumbingGraph, x_window: Option<i64>, cutoff: &Rational) -> Result<XSeries, KnotError> {
    let v0 = check_complement(g)?;
    let m = g.framing_matrix();
    if !det(&m).is_zero() {
        return Err(KnotError::NotSeifertFramed);
    }
    let rest: Vec<usize> = (0..g.len()).filter(|&i| i != v0).collect();
    if !rest.is_empty() && det(&m.principal(&rest)).abs() != Rational::one() {
        return Err(KnotError::NotZHS);
    }
    let b = seifert_b(g)?;
    let raw = relative_series(g, v0, b.into_iter().map(ri).collect(), 0, x_window, cutoff)?;
    let mut out = XSeries::new(true);
    if let Some(w) = x_window {
        // slices with no term below the cutoff are known only up to it
        for k in (1..=w).step_by(2) {
            out.set(k, QSeries::from_terms(std::iter::empty(), Some(cutoff.clone())));
        }
    }
    for (&k, s) in raw.stored() {
        if k > 0 {
            debug_assert_eq!(raw.slice(-k), -s, "F_K must be antisymmetric");
            out.set(k, s.clone());
        } else if k == 0 {
            return Err(KnotError::BadInput("F_K has an x^0 term".into()));
        }
    }
    Ok(out)
}

/// f_K = F_K/(x^{1/2} − x^{−1/2}) for F_K truncated to its stored window,
/// by division from the top: f_k = F_{k+1} + f_{k+2}.
pub fn normalize_f(f: &XSeries) -> XSeries {
    let all = f.all_slices();
    let mut out = XSeries::new(false);
    let (Some(&lo), Some(&hi)) = (all.keys().next(), all.keys().next_back()) else {
        return out;
    };
    let mut cur: BTreeMap<i64, QSeries> = BTreeMap::new();
    let mut k = hi - 1;
    while k >= lo - 1 {
        let above = cur.get(&(k + 2)).cloned().unwrap_or_default();
        let v = &all.get(&(k + 1)).cloned().unwrap_or_default() + &above;
        cur.insert(k, v);
        k -= 1;
    }
    for (k, s) in cur {
        if !s.is_zero() {
            out.set(k, s);
        }
    }
    out
}

/// (x^{1/2} − x^{−1/2}) f, the inverse of [`normalize_f`].
pub fn denormalize_f(f: &XSeries) -> XSeries {
    let mut out = XSeries::new(true);
    let mut acc: BTreeMap<i64, QSeries> = BTreeMap::new();
    for (&k, s) in &f.all_slices() {
        *acc.entry(k + 1).or_default() = &acc.get(&(k + 1)).cloned().unwrap_or_default() + s;
        *acc.entry(k - 1).or_default() = &acc.get(&(k - 1)).cloned().unwrap_or_default() - s;
    }
    for (k, s) in acc {
        if k > 0 && !s.is_zero() {
            out.set(k, s);
        }
    }
    out
}

/// F_K = ½(Fd(x) − Fd(x⁻¹)).
pub fn antisymmetrize(fd: &XSeries) -> XSeries {
    let half = rat(1, 2);
    let mut out = XSeries::new(true);
    for (&k, s) in &fd.all_slices() {
        if k != 0 {
            out.add_to(k, &s.scale(&half));
        }
    }
    out
}

/// Fd = Σ_{m ≥ 1} f_m x^{m/2}, i.e. twice the positive slices of F.
pub fn positive_part(f: &XSeries) -> XSeries {
    let mut out = XSeries::new(false);
    for (&k, s) in &f.all_slices() {
        if k > 0 {
            out.set(k, s.scale(&ri(2)));
        }
    }
    out
}

fn check_coprime(p: i64, r: i64) -> Result<(), KnotError> {
    if p == 0 || r <= 0 || p.gcd(&r) != 1 {
        return Err(KnotError::BadInput(format!("need p ≠ 0, r > 0, gcd(p, r) = 1; got {p}/{r}")));
    }
    Ok(())
}

/// ((x)) = x − ⌊x⌋ − ½ off the integers, 0 on them.
fn sawtooth(x: &Rational) -> Rational {
    if x.is_integer() {
        Rational::zero()
    } else {
        x - x.floor() - rat(1, 2)
    }
}

/// Dedekind sum s(p, r) = Σ_{i=1}^{r−1} ((i/r))((ip/r)).
pub fn dedekind_sum(p: i64, r: i64) -> Rational {
    assert!(r > 0, "dedekind_sum needs r > 0");
    (1..r).map(|i| sawtooth(&rat(i, r)) * sawtooth(&rat(i * p, r))).sum()
}

/// α(p, r) = 3 sign(p)(s(|p|, r) + ¼) − p/(4r).
pub fn alpha_pr(p: i64, r: i64) -> Result<Rational, KnotError> {
    check_coprime(p, r)?;
    Ok(ri(3 * sign_of(p)) * (dedekind_sum(p.abs(), r) + rat(1, 4)) - rat(p, 4 * r))
}

/// α from a chain k₁..k_s with p/r = [k₁, …, k_s]:
/// (3σ − Σk)/4 + 1/(4pr) − D/(4p), where D = p (M⁻¹)_{ss}.
pub fn alpha_from_chain(ks: &[i64]) -> Result<Rational, KnotError> {
    let (p, r) = evaluate_continued_fraction(ks);
    check_coprime(p, r)?;
    let g = PlumbingGraph::chain(ks, None);
    let m = g.framing_matrix();
    let minv = inverse(&m)?;
    let s = ks.len();
    let d = &minv[(s - 1, s - 1)] * ri(p);
    let sigma = inertia(&m).signature();
    let ksum: i64 = ks.iter().sum();
    Ok(rat(3 * sigma - ksum, 4) + rat(1, 4 * p * r) - d / ri(4 * p))
}

/// Whether a is a valid solid torus label: a ∈ ℤ + (r+1)/2.
fn solid_torus_label_ok(r: i64, a: &Rational) -> bool {
    (a - rat(r + 1, 2)).is_integer()
}

/// Ẑ_a(𝕊_{p/r}; z, n, q) from the closed form: a single monomial or zero
/// (two monomials when r = 1).
pub fn solid_torus_zhat(p: i64, r: i64, a: &Rational, n: i64) -> Result<XSeries, KnotError> {
    check_coprime(p, r)?;
    if !solid_torus_label_ok(r, a) {
        return Err(KnotError::BadInput(format!("label {a} is not in Z + (r+1)/2 for r = {r}")));
    }
    let alpha = alpha_pr(p, r)?;
    let pa = ri(p * n) + a;
    let e = &alpha - &pa * &pa / ri(p * r);
    let mut out = XSeries::new(false);
    for branch in [1i64, -1] {
        // (pn + a)/r ∓ 1/(2r) − ½ = j
        let j = &pa / ri(r) - rat(branch, 2 * r) - rat(1, 2);
        if j.is_integer() {
            let key = 2 * j.to_integer().to_i64().expect("exponent fits") + 1;
            out.add_to(key, &QSeries::monomial(ri(branch * sign_of(p)), e.clone()));
        }
    }
    Ok(out)
}

/// Signs and exponent shift of the gluing formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlueData {
    pub graph: PlumbingGraph,
    pub a: Vec<i64>,
    pub tau: i64,
    pub xi: Rational,
}

/// (a, x) for any x with M x = a; equals (a, M⁻¹a) when M is invertible and
/// (b, M b) when a = M b.
fn pairing_form(m: &IntMatrix, a: &[i64]) -> Result<Rational, KnotError> {
    let x = rational_preimage(m, a).ok_or_else(|| KnotError::BadInput("vector not in the image of M".into()))?;
    Ok(dot(&a.iter().map(|&v| ri(v)).collect::<Vec<_>>(), &x))
}

/// τ = π(M) − π(M⁻) − π(M⁺) and
/// ξ = ¾(σ − σ⁻ − σ⁺) − ¼((a, M⁻¹a) − (a⁻, M⁻⁻¹a⁻) − (a⁺, M⁺⁻¹a⁺)).
pub fn glue_data(
    minus: &PlumbingGraph,
    a_minus: &[i64],
    plus: &PlumbingGraph,
    a_plus: &[i64],
) -> Result<GlueData, KnotError> {
    let graph = standard_glue(minus, plus)?;
    let a = glue_spinc(minus, a_minus, plus, a_plus)?;
    let (m, mm, mp) = (graph.framing_matrix(), minus.framing_matrix(), plus.framing_matrix());
    let (i, im, ip) = (inertia(&m), inertia(&mm), inertia(&mp));
    let tau = i.n_pos as i64 - im.n_pos as i64 - ip.n_pos as i64;
    let quad = pairing_form(&m, &a)? - pairing_form(&mm, a_minus)? - pairing_form(&mp, a_plus)?;
    let xi = rat(3 * (i.signature() - im.signature() - ip.signature()), 4) - quad / ri(4);
    Ok(GlueData { graph, a, tau, xi })
}

/// Σ_m b₁(m) b₂(m) over the stored slices of two x-series.
pub fn pair_slices(b1: &XSeries, b2: &XSeries) -> QSeries {
    let s2 = b2.all_slices();
    let mut acc = QSeries::zero();
    for (m, s) in &b1.all_slices() {
        if let Some(t) = s2.get(m) {
            acc = &acc + &(s * t);
        }
    }
    acc
}

/// ⟨b⁻, b⁺⟩ = Σ_{m,n} b⁻(m, n) b⁺(m, n).
pub fn pairing(b_minus: &BoundarySeries, b_plus: &BoundarySeries) -> QSeries {
    let mut acc = QSeries::zero();
    for (n, x) in b_minus {
        if let Some(y) = b_plus.get(n) {
            acc = &acc + &pair_slices(x, y);
        }
    }
    acc
}

/// R b(m, n) = b(−m, n).
pub fn reflect(x: &XSeries) -> XSeries {
    let mut out = XSeries::new(x.is_antisymmetric());
    for (&m, s) in &x.all_slices() {
        out.set(-m, s.clone());
    }
    out
}

/// A_μ b(m, n) = b(m − 1, n), with m the exponent of x. Keys count halves of
/// x, so the shift is by 2.
pub fn act_meridian(b: &BoundarySeries) -> BoundarySeries {
    b.iter()
        .map(|(&n, x)| {
            let mut y = XSeries::new(false);
            for (&k, s) in &x.all_slices() {
                y.set(k + 2, s.clone());
            }
            (n, y)
        })
        .collect()
}

/// A_λ b(m, n) = b(m, n + 1).
pub fn act_longitude(b: &BoundarySeries) -> BoundarySeries {
    b.iter().map(|(&n, x)| (n - 1, x.clone())).collect()
}

/// Ẑ of the standard gluing, computed from the two relative series by the
/// pairing (−1)^τ q^ξ Σ_n CT_z[Ẑ⁻(z, n) Ẑ⁺(z, n)].
///
/// The n that can contribute below `cutoff` are read off from the lattice of
/// the glued graph; each side is then summed far enough that every product
/// below the cutoff is complete.
pub fn glue_zhat(
    minus: &PlumbingGraph,
    a_minus: &[i64],
    plus: &PlumbingGraph,
    a_plus: &[i64],
    cutoff: &Rational,
) -> Result<QSeries, KnotError> {
    for g in [minus, plus] {
        check_complement(g)?;
        if det(&g.framing_matrix()).is_zero() {
            return Err(KnotError::Singular);
        }
    }
    let data = glue_data(minus, a_minus, plus, a_plus)?;
    let minv = check_closed(&data.graph, &data.a)?;
    let joint = minus.distinguished_index().unwrap();
    let (_, closed_shift) = prefactor(&data.graph);
    let c = minv.mul_vec(&data.a.iter().map(|&x| ri(x)).collect::<Vec<_>>());
    let mut ns = BTreeSet::new();
    for t in closed_theta_terms(&data.graph, &data.a, &(cutoff - &closed_shift))? {
        let ell: Vec<Rational> = t.ell.iter().map(|&x| ri(x)).collect();
        let u = dot(minv.row(joint), &ell);
        let n = (u - &c[joint]) / ri(2);
        ns.insert(n.to_integer().to_i64().expect("n fits in i64"));
    }

    let side_bound = |g: &PlumbingGraph, a: &[i64], n: i64| -> Result<Option<Rational>, KnotError> {
        let m = g.framing_matrix();
        let v0 = g.distinguished_index().unwrap();
        let c = inverse(&m)?.mul_vec(&a.iter().map(|&x| ri(x)).collect::<Vec<_>>());
        let (_, shift) = prefactor(g);
        Ok(theta_problem(g, &m, v0, c, n).min_bound()?.map(|b| b + shift))
    };
    let mut total = QSeries::zero();
    for n in ns {
        let (Some(lm), Some(lp)) = (side_bound(minus, a_minus, n)?, side_bound(plus, a_plus, n)?) else {
            continue;
        };
        let room = cutoff - &data.xi;
        let bm = zhat_knot(minus, a_minus, n, None, &(&room - &lp))?;
        let bp = zhat_knot(plus, a_plus, n, None, &(&room - &lm))?;
        total = &total + &pair_slices(&bm, &reflect(&bp));
    }
    let sign = if data.tau.is_odd() { -1 } else { 1 };
    let mut out = total.scale(&ri(sign)).shift(&data.xi);
    // drop the partial completeness bounds of the pieces
    out = QSeries::from_terms(out.terms().clone(), None).truncate(cutoff);
    Ok(out)
}

/// x^u q^v ↦ q^{v − u² r/p} when r u − a ∈ pℤ, else 0, for a list of
/// (u, coefficient series) pairs.
pub fn laplace_terms(terms: &[(Rational, QSeries)], p: i64, r: i64, a: &Rational) -> Result<QSeries, KnotError> {
    check_coprime(p, r)?;
    let mut acc = QSeries::zero();
    for (u, s) in terms {
        if ((ri(r) * u - a) / ri(p)).is_integer() {
            acc = &acc + &s.shift(&-(u * u * ri(r) / ri(p)));
        }
    }
    Ok(acc)
}

/// Laplace transform of an x-series (key m stands for x^{m/2}).
pub fn laplace(s: &XSeries, p: i64, r: i64, a: &Rational) -> Result<QSeries, KnotError> {
    let terms: Vec<(Rational, QSeries)> = s.all_slices().into_iter().map(|(m, q)| (rat(m, 2), q)).collect();
    laplace_terms(&terms, p, r, a)
}

/// (x^{1/2r} − x^{−1/2r}) S as a list of (x-exponent, coefficient) pairs.
pub fn times_surgery_factor(s: &XSeries, r: i64) -> Vec<(Rational, QSeries)> {
    let h = rat(1, 2 * r);
    let mut acc: BTreeMap<Rational, QSeries> = BTreeMap::new();
    for (m, q) in s.all_slices() {
        let u = rat(m, 2);
        let up = &u + &h;
        let dn = &u - &h;
        let cur = acc.remove(&up).unwrap_or_default();
        acc.insert(up, &cur + &q);
        let cur = acc.remove(&dn).unwrap_or_default();
        acc.insert(dn, &cur - &q);
    }
    acc.into_iter().filter(|(_, q)| !q.is_zero()).collect()
}

/// How ε and d of the surgery formula are obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurgeryMode {
    /// From the Seifert-framed plumbing of the complement glued to the solid
    /// torus: ε = sign(p)(−1)^{τ+1}, d = ξ + α(p, r).
    PlumbedTheorem(PlumbingGraph),
    /// Supplied values; for p = −1 the defaults ε = 1, d = −r/4 − 1/(4r) apply.
    Conjectural { epsilon: Option<i64>, d: Option<Rational> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurgeryPlan {
    pub p: i64,
    pub r: i64,
    pub a: Rational,
    pub mode: SurgeryMode,
}

impl SurgeryPlan {
    pub fn new(p: i64, r: i64, a: Rational, mode: SurgeryMode) -> Result<Self, KnotError> {
        check_coprime(p, r)?;
        if !solid_torus_label_ok(r, &a) {
            return Err(KnotError::BadInput(format!("label {a} is not in Z + (r+1)/2 for r = {r}")));
        }
        if let SurgeryMode::Conjectural { epsilon: Some(e), .. } = &mode {
            if e.abs() != 1 {
                return Err(KnotError::BadInput(format!("epsilon must be ±1, got {e}")));
            }
        }
        Ok(SurgeryPlan { p, r, a, mode })
    }

    /// The conjectural plan with default ε and d (p = −1 only).
    pub fn conjectural(p: i64, r: i64) -> Result<Self, KnotError> {
        let a = if r.is_odd() { Rational::zero() } else { rat(1, 2) };
        Self::new(p, r, a, SurgeryMode::Conjectural { epsilon: None, d: None })
    }

    pub fn epsilon_d(&self) -> Result<(i64, Rational), KnotError> {
        match &self.mode {
            SurgeryMode::Conjectural { epsilon: Some(e), d: Some(d) } => Ok((*e, d.clone())),
            SurgeryMode::Conjectural { epsilon, d } => {
                if self.p != -1 {
                    return Err(KnotError::MissingEpsilonD(self.p));
                }
                let r = self.r;
                Ok((epsilon.unwrap_or(1), d.clone().unwrap_or_else(|| rat(-r, 4) - rat(1, 4 * r))))
            }
            SurgeryMode::PlumbedTheorem(g) => {
                let plus = solid_torus_graph(self.p, self.r)?;
                let a_plus = solid_torus_rep(self.p, self.r, &self.a)?;
                let b = seifert_b(g)?;
                let mb = g.framing_matrix().mul_vec(&b.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
                let a_minus: Vec<i64> = mb.iter().map(|x| x.to_i64().expect("entry fits")).collect();
                let data = glue_data(g, &a_minus, &plus, &a_plus)?;
                let eps = sign_of(self.p) * if data.tau.is_odd() { 1 } else { -1 };
                Ok((eps, data.xi + alpha_pr(self.p, self.r)?))
            }
        }
    }
}

/// Exact quadratic c m² + b m + e₀ through three points.
fn quadratic_fit(pts: &[(i64, Rational); 3]) -> (Rational, Rational, Rational) {
    let [(m1, e1), (m2, e2), (m3, e3)] = pts;
    let d12 = (e2 - e1) / ri(m2 - m1);
    let d23 = (e3 - e2) / ri(m3 - m2);
    let c = (&d23 - &d12) / ri(m3 - m1);
    let b = &d12 - &c * ri(m1 + m2);
    let e0 = e1 - &c * ri(m1 * m1) - &b * ri(*m1);
    (c, b, e0)
}

/// Minimum over integers m ≥ lo of A m² + B m + C, for A > 0.
fn quadratic_min_from(a: &Rational, b: &Rational, c: &Rational, lo: i64) -> Rational {
    let f = |m: &Rational| a * m * m + b * m + c;
    let vertex = -b / (ri(2) * a);
    let mut best = f(&ri(lo));
    if vertex > ri(lo) {
        for m in [vertex.floor(), vertex.ceil()] {
            let v = f(&m);
            if v < best {
                best = v;
            }
        }
    }
    best
}

/// The growth of the lowest q-exponents of f_m, fitted as c m² + b m + e₀.
///
/// The quadratic goes through the three largest m > 0 with nonzero slice in
/// the residue class of the largest one mod 4 (lowest exponents may wobble
/// between classes), falling back to the three largest overall. e₀ is then
/// lowered so that the quadratic stays below every sampled slice. None with
/// fewer than three nonzero slices.
pub fn growth_fit(f: &XSeries) -> Option<(Rational, Rational, Rational, i64)> {
    let pts: Vec<(i64, Rational)> = f
        .all_slices()
        .into_iter()
        .filter(|(m, s)| *m > 0 && !s.is_zero())
        .map(|(m, s)| (m, s.min_exponent().unwrap().clone()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m_max = pts[pts.len() - 1].0;
    let class: Vec<&(i64, Rational)> = pts.iter().filter(|(m, _)| (m_max - m) % 4 == 0).collect();
    let chosen: Vec<&(i64, Rational)> = if class.len() >= 3 { class } else { pts.iter().collect() };
    let k = chosen.len();
    let top = [chosen[k - 3].clone(), chosen[k - 2].clone(), chosen[k - 1].clone()];
    let (c, b, mut e0) = quadratic_fit(&top);
    for (m, e) in &pts {
        let r = e - &c * ri(m * m) - &b * ri(*m);
        if r < e0 {
            e0 = r;
        }
    }
    Some((c, b, e0, m_max))
}

/// Ẑ_a(Y_{p/r}) = ε q^d L^{(a)}_{p/r}[(x^{1/2r} − x^{−1/2r}) F_K].
///
/// The result is complete below the smaller of `cutoff` and the bound
/// certified by the slices' own completeness and the fitted growth of the
/// slices beyond the window.
pub fn surgery_zhat(f: &XSeries, plan: &SurgeryPlan, cutoff: &Rational) -> Result<QSeries, KnotError> {
    let (eps, d) = plan.epsilon_d()?;
    let (p, r) = (plan.p, plan.r);
    let rp = rat(r, p);
    let mut bound = cutoff - &d;

    if let Some((c, b, e0, m_max)) = growth_fit(f) {
        // image exponent of x^{m/2 ± 1/2r} q^{fit(m)}
        let lead = &c - &rp / ri(4);
        if !lead.is_positive() {
            return Err(KnotError::Divergent(format!("growth constant c = {c} gives 4c − r/p ≤ 0 for p/r = {p}/{r}")));
        }
        for s in [1i64, -1] {
            let lin = &b - rat(s, 2 * p);
            let con = &e0 - rat(1, 4 * p * r);
            let tail = quadratic_min_from(&lead, &lin, &con, m_max + 1);
            if tail < bound {
                bound = tail;
            }
        }
        // lowest image exponent per slice must not keep falling at the edge
        let mins: Vec<Rational> = f
            .all_slices()
            .into_iter()
            .filter(|(m, s)| *m > 0 && !s.is_zero())
            .map(|(m, s)| {
                let u = rat(m, 2);
                let h = rat(1, 2 * r);
                let lo = s.min_exponent().unwrap().clone();
                let a1 = &lo - (&u + &h) * (&u + &h) * &rp;
                let a2 = &lo - (&u - &h) * (&u - &h) * &rp;
                a1.min(a2)
            })
            .collect();
        let k = mins.len();
        if mins[k - 1] < mins[k - 2] && mins[k - 2] < mins[k - 3] {
            return Err(KnotError::Divergent("q-exponents decrease towards the window edge".into()));
        }
    }
    for (m, s) in f.all_slices() {
        if let Some(cb) = s.complete_below() {
            let u = rat(m, 2);
            let h = rat(1, 2 * r);
            for x in [&u + &h, &u - &h] {
                let img = cb - &x * &x * &rp;
                if img < bound {
                    bound = img;
                }
            }
        }
    }
    let g = times_surgery_factor(f, r);
    let l = laplace_terms(&g, p, r, &plan.a)?;
    let out = QSeries::from_terms(l.terms().clone(), None).truncate(&bound);
    Ok(out.scale(&ri(eps)).shift(&d))
}

/// Surgery on a knot whose F_K is available for any window: the window is
/// doubled until the certified range reaches `cutoff`.
pub fn surgery_to_cutoff<S>(source: S, plan: &SurgeryPlan, cutoff: &Rational) -> Result<QSeries, KnotError>
where
    S: Fn(i64) -> Result<XSeries, KnotError>,
{
    let mut window = 16;
    loop {
        let out = surgery_zhat(&source(window)?, plan, cutoff)?;
        if out.complete_below().is_some_and(|b| b >= cutoff) {
            return Ok(out);
        }
        if window > 1 << 16 {
            return Err(KnotError::Divergent("window needed for the requested cutoff is too large".into()));
        }
        window *= 2;
    }
}

fn check_torus(s: i64, t: i64) -> Result<(), KnotError> {
    if !(2 <= s && s < t) || s.gcd(&t) != 1 {
        return Err(KnotError::BadInput(format!("torus knot needs 2 ≤ s < t coprime, got ({s},{t})")));
    }
    Ok(())
}

/// ε_m for T(s, t): −1 at m ≡ st+s+t, st−s−t; +1 at m ≡ st+s−t, st−s+t
/// (mod 2st); 0 otherwise.
pub fn torus_epsilon(s: i64, t: i64, m: i64) -> i64 {
    let n = 2 * s * t;
    let st = s * t;
    let r = m.rem_euclid(n);
    if r == (st + s + t).rem_euclid(n) || r == (st - s - t).rem_euclid(n) {
        -1
    } else if r == (st + s - t).rem_euclid(n) || r == (st - s + t).rem_euclid(n) {
        1
    } else {
        0
    }
}

/// (m² − (st − s − t)²)/(4st)
fn torus_exponent(s: i64, t: i64, m: i64) -> Rational {
    let k = s * t - s - t;
    rat(m * m - k * k, 4 * s * t)
}

/// F_K for T(s, t): f_m = ε_m q^{(s−1)(t−1)/2 + (m² − (st−s−t)²)/(4st)} for
/// 0 < m ≤ x_window, each slice exact.
pub fn torus_fk(s: i64, t: i64, x_window: i64) -> Result<XSeries, KnotError> {
    check_torus(s, t)?;
    let base = rat((s - 1) * (t - 1), 2);
    let mut out = XSeries::new(true);
    for m in 1..=x_window {
        let e = torus_epsilon(s, t, m);
        if e != 0 {
            out.set(m, QSeries::monomial(rat(e, 2), &base + torus_exponent(s, t, m)));
        }
    }
    Ok(out)
}

/// Ψ(x, q) = q^{−(s−1)(t−1)/2} Σ_{0 < m ≤ x_window} ε_m x^{m/2} q^{−(m² − (st−s−t)²)/(4st)},
/// the positive part of F for the mirror T(s, −t).
pub fn torus_psi(s: i64, t: i64, x_window: i64) -> Result<XSeries, KnotError> {
    check_torus(s, t)?;
    let base = rat((s - 1) * (t - 1), 2);
    let mut out = XSeries::new(false);
    for m in 1..=x_window {
        let e = torus_epsilon(s, t, m);
        if e != 0 {
            out.set(m, QSeries::monomial(ri(e), -(&base + torus_exponent(s, t, m))));
        }
    }
    Ok(out)
}

/// F_{m(K)}(x, q) = F_K(x, q⁻¹), slice by slice.
pub fn mirror_series(f: &XSeries) -> Result<XSeries, KnotError> {
    let mut out = XSeries::new(f.is_antisymmetric());
    for (&m, s) in f.stored() {
        out.set(m, s.invert_q().map_err(|_| KnotError::InfiniteSlice)?);
    }
    Ok(out)
}

/// q^{1/2} − q^{−1/2}
fn half_difference() -> QSeries {
    QSeries::from_terms([(rat(1, 2), ri(1)), (rat(-1, 2), ri(-1))], None)
}

/// Unnormalized colored Jones polynomial J̃_{T(s, t), n} from the Morton
/// formula in Hikami's form,
/// −q^{−stn²/4 + (s−1)(t−1)/2}/(q^{1/2} − q^{−1/2}) Σ_{k=0}^{stn} ε_{stn−k} q^{(k² − (st−s−t)²)/(4st)};
/// a negative `t_signed` gives the mirror T(s, −t).
pub fn torus_jones_unnormalized(s: i64, t_signed: i64, n: i64) -> Result<QSeries, KnotError> {
    let t = t_signed.abs();
    check_torus(s, t)?;
    if n < 1 {
        return Err(KnotError::BadInput(format!("color n must be ≥ 1, got {n}")));
    }
    let stn = s * t * n;
    let mut sum = QSeries::zero();
    for k in 0..=stn {
        let e = torus_epsilon(s, t, stn - k);
        if e != 0 {
            sum.add_term(torus_exponent(s, t, k), ri(e));
        }
    }
    let pre = QSeries::monomial(ri(-1), rat(-stn * n, 4) + rat((s - 1) * (t - 1), 2));
    let jt = (&pre * &sum).div_exact(&half_difference())?;
    if t_signed < 0 {
        Ok(jt.invert_q()?)
    } else {
        Ok(jt)
    }
}

/// Checks (q^{1/2} − q^{−1/2}) J̃_{T(s,−t), n} = Σ_{m ≤ stn} ε_m q^{mn/2} q^{−(s−1)(t−1)/2 − (m² − (st−s−t)²)/(4st)},
/// i.e. Ψ at x = qⁿ truncated to m ≤ stn.
pub fn stability_check(s: i64, t: i64, n: i64) -> Result<bool, KnotError> {
    let lhs = &half_difference() * &torus_jones_unnormalized(s, -t, n)?;
    let psi = torus_psi(s, t, s * t * n)?;
    let mut rhs = QSeries::zero();
    for (m, slice) in psi.stored() {
        rhs = &rhs + &slice.shift(&rat(m * n, 2));
    }
    Ok(lhs == rhs)
}

/// Even and odd tails (Φ₀, Υ₀) of the colored Jones polynomials of T(s, t),
/// below q^cutoff:
/// Φ₀ = Σ_{m ≥ 0} ε_m q^{(m² − (st−s−t)²)/(4st)},
/// Υ₀ = Σ_{m ≥ 0} ε_{st−m} q^{(m² − (s−t)²)/(4st)},
/// each divided by the sign of its lowest term, as for polynomials
/// normalized by their lowest monomial.
pub fn tails(s: i64, t: i64, cutoff: &Rational) -> Result<(QSeries, QSeries), KnotError> {
    check_torus(s, t)?;
    let st = s * t;
    let build = |shift: i64, eps: &dyn Fn(i64) -> i64| {
        let mut out = QSeries::from_terms(std::iter::empty(), Some(cutoff.clone()));
        let mut m = 0i64;
        loop {
            let e = rat(m * m - shift * shift, 4 * st);
            if m > shift.abs() && &e >= cutoff {
                break;
            }
            out.add_term(e, ri(eps(m)));
            m += 1;
        }
        match out.min_exponent().cloned() {
            Some(lo) if out.coeff(&lo).is_negative() => out.scale(&ri(-1)),
            _ => out,
        }
    };
    let phi = build(st - s - t, &|m| torus_epsilon(s, t, m));
    let ups = build(s - t, &|m| torus_epsilon(s, t, st - m));
    Ok((phi, ups))
}
