//! Ẑ_a(q) for closed weakly negative definite plumbings, the vertex
//! expansion coefficients, false theta functions and the Brieskorn closed
//! form.

use num_bigint::BigInt;
use num_integer::{binomial, Integer};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactnum::{
    dot, inertia, inverse, rat, rbig, ri, smith_normal_form, solve_with_snf, sublevel_points, ExactError, IntMatrix,
    RatMatrix, Rational,
};
use crate::plumbing::{abs_det, seifert_graph, GraphError, PlumbingGraph};
use crate::qseries::QSeries;
use crate::spinc::has_parity;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZhatError {
    #[error("graph is not weakly negative definite")]
    NotWeaklyNegativeDefinite,
    #[error("framing matrix is singular")]
    Singular,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<ExactError> for ZhatError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Singular => ZhatError::Singular,
            ExactError::NotPositiveDefinite => ZhatError::NotWeaklyNegativeDefinite,
            ExactError::Dimension(s) => ZhatError::BadInput(s),
        }
    }
}

/// One summand of the theta series: ℓ, its q-exponent and Π_v F(deg v, ℓ_v).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaTerm {
    pub ell: Vec<i64>,
    pub q_exponent: Rational,
    pub weight: Rational,
}

/// Coefficient of z^ℓ in the average of the expansions of (z − 1/z)^{2−deg}
/// around z = 0 and z = ∞.
pub fn vertex_expansion_coeff(deg: usize, ell: i64) -> Rational {
    if deg <= 2 {
        let k = 2 - deg as i64;
        if ell.abs() > k || (k - ell).is_odd() {
            return Rational::zero();
        }
        let j = (k - ell) / 2;
        let c = ri(binomial(k, j));
        return if j.is_odd() { -c } else { c };
    }
    let k = deg as i64 - 2;
    if ell.abs() < k || (ell.abs() - k).is_odd() {
        return Rational::zero();
    }
    let j = (ell.abs() - k) / 2;
    let c = rbig(binomial(BigInt::from(k + j - 1), BigInt::from(j))) / ri(2);
    if ell > 0 && k.is_odd() {
        -c
    } else {
        c
    }
}

/// The finite support of vertex_expansion_coeff for deg ≤ 2.
fn finite_support(deg: usize) -> Vec<i64> {
    match deg {
        0 => vec![-2, 0, 2],
        1 => vec![-1, 1],
        _ => vec![0],
    }
}

/// Lattice summation problem shared by the closed and relative series.
///
/// Summands are indexed by n ∈ ℤ^s with u = 2n + c and ℓ = M u; the
/// q-exponent is −(u, M u)/4. Coordinates in `fixed` have n_v prescribed.
/// Vertices with `degree[v] = Some(d)` contribute the factor F(d, ℓ_v);
/// `None` marks a vertex that carries no factor (the distinguished vertex).
pub(crate) struct ThetaProblem<'a> {
    pub m: &'a IntMatrix,
    pub c: Vec<Rational>,
    pub fixed: Vec<Option<i64>>,
    pub degree: Vec<Option<usize>>,
}

/// One low-degree branch: the summands are u = u0 + 2Σ t_i k_i over t ∈ ℤ^k
/// with q-exponent tᵀQt + linᵀt + c0.
struct Branch {
    u0: Vec<Rational>,
    kernel: Vec<Vec<Rational>>,
    q: RatMatrix,
    lin: Vec<Rational>,
    c0: Rational,
}

impl ThetaProblem<'_> {
    fn branches(&self) -> Result<Vec<Branch>, ZhatError> {
        let s = self.m.rows();
        let mr = self.m.to_rational();
        let free: Vec<usize> = (0..s).filter(|&v| self.fixed[v].is_none()).collect();
        let low: Vec<usize> = (0..s).filter(|&v| matches!(self.degree[v], Some(d) if d <= 2)).collect();
        if low.iter().any(|v| self.fixed[*v].is_some()) {
            return Err(ZhatError::BadInput("fixed coordinate on a low degree vertex".into()));
        }
        let mc = mr.mul_vec(&self.c);
        // base vector: fixed coordinates set, free ones zero
        let n_fixed: Vec<BigInt> = (0..s).map(|v| BigInt::from(self.fixed[v].unwrap_or(0))).collect();
        let mn_fixed = self.m.mul_vec(&n_fixed);

        let mut a = IntMatrix::zeros(low.len(), free.len());
        for (i, &r) in low.iter().enumerate() {
            for (j, &col) in free.iter().enumerate() {
                a[(i, j)] = &self.m[(r, col)] * 2;
            }
        }
        let snf = if low.is_empty() { None } else { Some(smith_normal_form(&a)) };

        let supports: Vec<Vec<i64>> = low.iter().map(|&v| finite_support(self.degree[v].unwrap())).collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; low.len()];
        loop {
            let vals: Vec<i64> = choice.iter().enumerate().map(|(i, &k)| supports[i][k]).collect();
            if let Some(b) = self.branch(&mr, &mc, &n_fixed, &mn_fixed, &free, &low, &vals, snf.as_ref()) {
                out.push(b);
            }
            // advance the mixed-radix counter
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < supports[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn branch(
        &self,
        mr: &RatMatrix,
        mc: &[Rational],
        n_fixed: &[BigInt],
        mn_fixed: &[BigInt],
        free: &[usize],
        low: &[usize],
        vals: &[i64],
        snf: Option<&crate::exactnum::Snf>,
    ) -> Option<Branch> {
        let s = self.m.rows();
        let (particular, kernel) = match snf {
            None => {
                let k = free.len();
                let basis = (0..k).map(|j| (0..k).map(|i| BigInt::from((i == j) as i64)).collect()).collect();
                (vec![BigInt::zero(); k], basis)
            }
            Some(snf) => {
                let mut rhs = Vec::with_capacity(low.len());
                for (i, &v) in low.iter().enumerate() {
                    let r = ri(vals[i]) - &mc[v] - rbig(&mn_fixed[v] * 2);
                    if !r.is_integer() {
                        return None;
                    }
                    rhs.push(r.to_integer());
                }
                solve_with_snf(snf, &rhs)?
            }
        };
        let mut n0 = n_fixed.to_vec();
        for (j, &v) in free.iter().enumerate() {
            n0[v] = particular[j].clone();
        }
        let u0: Vec<Rational> = (0..s).map(|v| rbig(&n0[v] * 2) + &self.c[v]).collect();
        let kfull: Vec<Vec<Rational>> = kernel
            .iter()
            .map(|col| {
                let mut e = vec![Rational::zero(); s];
                for (j, &v) in free.iter().enumerate() {
                    e[v] = rbig(col[j].clone());
                }
                e
            })
            .collect();
        let k = kfull.len();
        let mk: Vec<Vec<Rational>> = kfull.iter().map(|col| mr.mul_vec(col)).collect();
        let mu0 = mr.mul_vec(&u0);
        let mut q = RatMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                q[(i, j)] = -dot(&kfull[i], &mk[j]);
            }
        }
        let lin: Vec<Rational> = (0..k).map(|i| -dot(&kfull[i], &mu0)).collect();
        let c0 = -dot(&u0, &mu0) / ri(4);
        Some(Branch { u0, kernel: kfull, q, lin, c0 })
    }

    /// All summands with q-exponent strictly below `bound` and nonzero weight.
    pub fn terms(&self, bound: &Rational) -> Result<Vec<ThetaTerm>, ZhatError> {
        let s = self.m.rows();
        let mr = self.m.to_rational();
        let mut out = Vec::new();
        for br in self.branches()? {
            for t in sublevel_points(&br.q, &br.lin, &br.c0, bound)? {
                let mut u = br.u0.clone();
                for (i, &ti) in t.iter().enumerate() {
                    if ti != 0 {
                        for v in 0..s {
                            u[v] += &br.kernel[i][v] * ri(2 * ti);
                        }
                    }
                }
                let ell_r = mr.mul_vec(&u);
                let e = -dot(&u, &ell_r) / ri(4);
                if &e >= bound {
                    continue;
                }
                let ell: Vec<i64> = ell_r
                    .iter()
                    .map(|x| {
                        debug_assert!(x.is_integer());
                        x.to_integer().to_i64().expect("ℓ fits in i64")
                    })
                    .collect();
                // the contour integral picks the coefficient of z^{−ℓ_v}
                let mut weight = Rational::one();
                for v in 0..s {
                    if let Some(d) = self.degree[v] {
                        weight *= vertex_expansion_coeff(d, -ell[v]);
                        if weight.is_zero() {
                            break;
                        }
                    }
                }
                if !weight.is_zero() {
                    out.push(ThetaTerm { ell, q_exponent: e, weight });
                }
            }
        }
        Ok(out)
    }

    /// A lower bound for the q-exponent of every summand, or None when the
    /// sum is empty. Each branch contributes its real minimum c0 − ¼ linᵀQ⁻¹lin.
    pub fn min_bound(&self) -> Result<Option<Rational>, ZhatError> {
        let mut best: Option<Rational> = None;
        for br in self.branches()? {
            let m = if br.lin.is_empty() {
                br.c0.clone()
            } else {
                let qinv = crate::exactnum::inverse_rat(&br.q)?;
                &br.c0 - crate::exactnum::bilinear(&qinv, &br.lin, &br.lin) / ri(4)
            };
            if best.as_ref().is_none_or(|b| &m < b) {
                best = Some(m);
            }
        }
        Ok(best)
    }
}

/// (−1)^π and the exponent (3σ − Σ m_v)/4 of a framing matrix.
pub(crate) fn prefactor(g: &PlumbingGraph) -> (i64, Rational) {
    let inr = inertia(&g.framing_matrix());
    let sign = if inr.n_pos.is_multiple_of(2) { 1 } else { -1 };
    (sign, rat(3 * inr.signature() - g.weight_sum(), 4))
}

pub(crate) fn check_closed(g: &PlumbingGraph, a: &[i64]) -> Result<RatMatrix, ZhatError> {
    if !has_parity(g, a) {
        return Err(ZhatError::BadInput(format!("{a:?} is not in 2Z^s + delta")));
    }
    let minv = inverse(&g.framing_matrix())?;
    if !g.is_weakly_negative_definite(false)? {
        return Err(ZhatError::NotWeaklyNegativeDefinite);
    }
    Ok(minv)
}

/// The summands of Θ_a^{−M} with nonzero weight and q-exponent below `bound`.
pub fn closed_theta_terms(g: &PlumbingGraph, a: &[i64], bound: &Rational) -> Result<Vec<ThetaTerm>, ZhatError> {
    let minv = check_closed(g, a)?;
    let m = g.framing_matrix();
    let c = minv.mul_vec(&a.iter().map(|&x| ri(x)).collect::<Vec<_>>());
    let degree = g.degree_vector().into_iter().map(|d| Some(d as usize)).collect();
    ThetaProblem { m: &m, c, fixed: vec![None; g.len()], degree }.terms(bound)
}

/// Ẑ_a(q) with every term of exponent < `cutoff`.
pub fn zhat_closed(g: &PlumbingGraph, a: &[i64], cutoff: &Rational) -> Result<QSeries, ZhatError> {
    check_closed(g, a)?;
    let (sign, shift) = prefactor(g);
    let terms = closed_theta_terms(g, a, &(cutoff - &shift))?;
    let mut out = QSeries::from_terms(std::iter::empty(), Some(cutoff.clone()));
    for t in terms {
        out.add_term(&t.q_exponent + &shift, t.weight * ri(sign));
    }
    Ok(out)
}

/// Ψ̃^{(a)}_p(q) = Σ_{n ≥ 0} ψ^{(a)}_{2p}(n) q^{n²/4p}. When n ≡ a and n ≡ −a
/// both hold the two signs cancel.
pub fn false_theta(p: i64, a: i64, cutoff: &Rational) -> QSeries {
    assert!(p > 0, "false_theta needs p > 0");
    let mut out = QSeries::from_terms(std::iter::empty(), Some(cutoff.clone()));
    let modulus = 2 * p;
    let mut n = 0i64;
    loop {
        let e = rat(n * n, 4 * p);
        if &e >= cutoff {
            break;
        }
        let mut c = 0;
        if (n - a).rem_euclid(modulus) == 0 {
            c += 1;
        }
        if (n + a).rem_euclid(modulus) == 0 {
            c -= 1;
        }
        if c != 0 {
            out.add_term(e, ri(c));
        }
        n += 1;
    }
    out
}

/// Σ_i n_i Ψ̃^{(a_i)}_p.
pub fn false_theta_combination(p: i64, parts: &[(i64, i64)], cutoff: &Rational) -> QSeries {
    parts.iter().fold(QSeries::from_terms(std::iter::empty(), Some(cutoff.clone())), |acc, &(n, a)| {
        &acc + &false_theta(p, a, cutoff).scale(&ri(n))
    })
}

/// Negative definite star for Σ(b₁,b₂,b₃), legs in the order of the b_i.
pub fn brieskorn_graph(b1: i64, b2: i64, b3: i64) -> Result<PlumbingGraph, ZhatError> {
    let bs = [b1, b2, b3];
    if !(1 < b1 && b1 < b2 && b2 < b3) || b1.gcd(&b2) != 1 || b1.gcd(&b3) != 1 || b2.gcd(&b3) != 1 {
        return Err(ZhatError::BadInput(format!("Brieskorn triple ({b1},{b2},{b3})")));
    }
    let p = b1 * b2 * b3;
    // a_i (p/b_i) ≡ −1 mod b_i, then b = (−1 − Σ a_i p/b_i)/p
    let mut fr = Vec::new();
    let mut total = 1;
    for &bi in &bs {
        let q = p / bi;
        let ai = (1..bi).find(|x| (x * q + 1) % bi == 0).expect("b_i coprime to p/b_i");
        fr.push((ai, bi));
        total += ai * q;
    }
    Ok(seifert_graph(-total / p, &fr)?)
}

/// The four residues α₁..α₄ of the Brieskorn formula.
pub fn brieskorn_alphas(b1: i64, b2: i64, b3: i64) -> [i64; 4] {
    let p = b1 * b2 * b3;
    [
        p - b1 * b2 - b1 * b3 - b2 * b3,
        p + b1 * b2 - b1 * b3 - b2 * b3,
        p - b1 * b2 + b1 * b3 - b2 * b3,
        p + b1 * b2 + b1 * b3 - b2 * b3,
    ]
}

/// Δ = (Σ h_i − 3s − Σ m_v − b₂b₃/b₁ − b₁b₃/b₂ − b₁b₂/b₃)/4 with h_i the
/// order of H₁ after deleting the terminal vertex of leg i.
pub fn brieskorn_delta(b1: i64, b2: i64, b3: i64) -> Result<Rational, ZhatError> {
    let g = brieskorn_graph(b1, b2, b3)?;
    let mut h = 0;
    for leaf in g.vertices().iter().filter(|v| v.id != 0 && g.degree(v.id) == 1) {
        let sub = g.with_distinguished(Some(leaf.id))?.closed_up()?;
        h += abs_det(&sub);
    }
    let s = g.len() as i64;
    let base = ri(h - 3 * s - g.weight_sum());
    let corr = rat(b2 * b3, b1) + rat(b1 * b3, b2) + rat(b1 * b2, b3);
    Ok((base - corr) / ri(4))
}

/// Ẑ_0(Σ(b₁,b₂,b₃)) = q^Δ (C − Ψ̃^{(α₁)−(α₂)−(α₃)+(α₄)}_{b₁b₂b₃}).
///
/// With ψ taken literally (+1 at n ≡ a) the plumbing sum equals
/// q^Δ (C + Ψ̃^{…}), so the combination enters with a plus sign here.
pub fn brieskorn_zhat(b1: i64, b2: i64, b3: i64, cutoff: &Rational) -> Result<QSeries, ZhatError> {
    let delta = brieskorn_delta(b1, b2, b3)?;
    let p = b1 * b2 * b3;
    let al = brieskorn_alphas(b1, b2, b3);
    let inner_cut = cutoff - &delta;
    let psi = false_theta_combination(p, &[(1, al[0]), (-1, al[1]), (-1, al[2]), (1, al[3])], &inner_cut);
    let mut inner = psi;
    if (b1, b2, b3) == (2, 3, 5) {
        let e = rat(1, 120);
        if e < inner_cut {
            inner.add_term(e, ri(2));
        }
    }
    Ok(inner.shift(&delta))
}

/// Exponent lower bound for a negative definite graph: the prefactor plus the
/// minimum of −(ℓ, M⁻¹ℓ)/4 over the enumerated terms.
pub fn min_exponent_closed(g: &PlumbingGraph, a: &[i64], cutoff: &Rational) -> Result<Option<Rational>, ZhatError> {
    let (_, shift) = prefactor(g);
    let terms = closed_theta_terms(g, a, &(cutoff - &shift))?;
    Ok(terms.iter().map(|t| &t.q_exponent + &shift).min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinc::SpincSet;

    fn series(terms: &[(i64, i64, i64)]) -> Vec<(Rational, Rational)> {
        terms.iter().map(|&(n, d, c)| (rat(n, d), ri(c))).collect()
    }

    #[test]
    fn expansion_coefficients() {
        assert_eq!(vertex_expansion_coeff(0, 0), ri(-2));
        assert_eq!(vertex_expansion_coeff(0, 2), ri(1));
        assert_eq!(vertex_expansion_coeff(0, -2), ri(1));
        assert_eq!(vertex_expansion_coeff(1, 1), ri(1));
        assert_eq!(vertex_expansion_coeff(1, -1), ri(-1));
        assert_eq!(vertex_expansion_coeff(2, 0), ri(1));
        assert_eq!(vertex_expansion_coeff(3, 1), rat(-1, 2));
        assert_eq!(vertex_expansion_coeff(3, -1), rat(1, 2));
        assert_eq!(vertex_expansion_coeff(4, 4), ri(1));
        assert_eq!(vertex_expansion_coeff(4, -4), ri(1));
        assert_eq!(vertex_expansion_coeff(4, 0), ri(0));
        assert_eq!(vertex_expansion_coeff(5, 3), rat(-1, 2));
        assert_eq!(vertex_expansion_coeff(5, 5), rat(-3, 2));
        assert_eq!(vertex_expansion_coeff(5, -5), rat(3, 2));
    }

    #[test]
    fn sphere() {
        let g = PlumbingGraph::chain(&[-1], None);
        let z = zhat_closed(&g, &[0], &ri(10)).unwrap();
        assert_eq!(z.terms().iter().map(|(e, c)| (e.clone(), c.clone())).collect::<Vec<_>>(), series(&[(-1, 2, -2), (1, 2, 2)]));
    }

    #[test]
    fn poincare() {
        let g = brieskorn_graph(2, 3, 5).unwrap();
        let z = zhat_closed(&g, &vec![0; g.len()].iter().zip(g.degree_vector()).map(|(_, d)| d % 2).collect::<Vec<_>>(), &ri(41))
            .unwrap();
        let expect = QSeries::from_terms(
            [0, 1, 3, 7, 8, 14, 20, 29, 31]
                .iter()
                .zip([1, -1, -1, -1, 1, 1, 1, 1, -1])
                .map(|(&e, c)| (rat(2 * e - 3, 2), ri(c))),
            None,
        );
        assert_eq!(z.clone().truncate(&ri(31)), expect.clone().truncate(&ri(31)));
        let b = brieskorn_zhat(2, 3, 5, &ri(41)).unwrap();
        assert_eq!(z, b);
    }

    #[test]
    fn brieskorn_matches_plumbing() {
        for (b1, b2, b3) in [(2, 3, 7), (2, 3, 11), (2, 5, 7)] {
            let g = brieskorn_graph(b1, b2, b3).unwrap();
            let a: Vec<i64> = g.degree_vector().iter().map(|d| d % 2).collect();
            let z = zhat_closed(&g, &a, &ri(40)).unwrap();
            assert_eq!(z, brieskorn_zhat(b1, b2, b3, &ri(40)).unwrap(), "({b1},{b2},{b3})");
        }
    }

    #[test]
    fn lens_space_l83() {
        let g = PlumbingGraph::chain(&[-3, -3], None);
        let set = SpincSet::new(&g).unwrap();
        assert_eq!(set.len(), 8);
        let mut values: Vec<QSeries> =
            set.orbit_reps().into_iter().map(|i| zhat_closed(&g, set.rep(i), &ri(20)).unwrap()).collect();
        values.sort_by_key(|z| z.to_string());
        let cut = Some(ri(20));
        let mut expect = vec![
            QSeries::from_terms([], cut.clone()),
            QSeries::from_terms([], cut.clone()),
            QSeries::from_terms([], cut.clone()),
            QSeries::from_terms([(rat(1, 4), ri(1))], cut.clone()),
            QSeries::from_terms([(rat(1, 8), ri(-1))], cut.clone()),
        ];
        expect.sort_by_key(|z| z.to_string());
        assert_eq!(values, expect);
    }

    #[test]
    fn false_theta_edge_cases() {
        let f = false_theta(3, 1, &ri(10));
        assert_eq!(f.coeff(&rat(1, 12)), ri(1));
        assert_eq!(f.coeff(&rat(25, 12)), ri(-1));
        assert_eq!(f.coeff(&rat(49, 12)), ri(1));
        assert_eq!(f.len(), 3);
        assert!(false_theta(3, 0, &ri(20)).is_zero());
        assert!(false_theta(3, 3, &ri(20)).is_zero());
        assert!(false_theta(1, 1, &ri(20)).is_zero());
    }
}
