//! Spin^c and relative Spin^c classes of plumbed manifolds, realized as
//! (2ℤ^s + δ) modulo 2Mℤ^s (closed) or 2Mℤ^{s−1} (relative).

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactnum::{
    det, int_vec, inverse, ri, smith_normal_form, solve_integer, ExactError, IntMatrix, RatMatrix, Rational,
};
use crate::plumbing::{GraphError, PlumbingGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpincError {
    #[error("framing matrix is singular")]
    Singular,
    #[error("vector has the wrong parity for this graph")]
    BadParity,
    #[error("no self-conjugate representative found")]
    NotFound,
    #[error("incompatible gluing data: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<ExactError> for SpincError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Singular => SpincError::Singular,
            other => SpincError::Graph(GraphError::Exact(other)),
        }
    }
}

fn to_i64_vec(v: &[BigInt]) -> Vec<i64> {
    v.iter().map(|x| x.to_i64().expect("entry fits in i64")).collect()
}

/// Whether `a` lies in 2ℤ^s + δ.
pub fn has_parity(g: &PlumbingGraph, a: &[i64]) -> bool {
    a.len() == g.len() && a.iter().zip(g.degree_vector()).all(|(x, d)| (x - d).is_even())
}

/// The Spin^c structures of a closed graph with det M ≠ 0.
#[derive(Clone, Debug)]
pub struct SpincSet {
    m: IntMatrix,
    minv: RatMatrix,
    /// Canonical representatives, sorted.
    reps: Vec<Vec<i64>>,
    conjugate: Vec<usize>,
}

impl SpincSet {
    pub fn new(g: &PlumbingGraph) -> Result<Self, SpincError> {
        let m = g.framing_matrix();
        let minv = inverse(&m)?;
        let delta = g.degree_vector();
        let snf = smith_normal_form(&m);
        let uinv = inverse(&snf.u)?;
        let factors: Vec<i64> =
            (0..g.len()).map(|i| snf.d[(i, i)].abs().to_i64().expect("invariant factor fits")).collect();
        let mut reps = BTreeSet::new();
        let mut y = vec![0i64; g.len()];
        loop {
            // x = U⁻¹ y runs over ℤ^s / Mℤ^s
            let x: Vec<Rational> = uinv.mul_vec(&y.iter().map(|&v| ri(v)).collect::<Vec<_>>());
            let a: Vec<i64> = x
                .iter()
                .zip(&delta)
                .map(|(xi, d)| d + 2 * xi.to_integer().to_i64().expect("coset entry fits"))
                .collect();
            reps.insert(canonical_closed(&m, &minv, &a));
            let mut k = 0;
            loop {
                if k == y.len() {
                    break;
                }
                y[k] += 1;
                if y[k] < factors[k] {
                    break;
                }
                y[k] = 0;
                k += 1;
            }
            if k == y.len() {
                break;
            }
        }
        let reps: Vec<Vec<i64>> = reps.into_iter().collect();
        let conjugate = reps
            .iter()
            .map(|a| {
                let neg: Vec<i64> = a.iter().map(|x| -x).collect();
                let c = canonical_closed(&m, &minv, &neg);
                reps.binary_search(&c).expect("conjugate class is enumerated")
            })
            .collect();
        Ok(SpincSet { m, minv, reps, conjugate })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[Vec<i64>] {
        &self.reps
    }

    pub fn rep(&self, i: usize) -> &[i64] {
        &self.reps[i]
    }

    pub fn conjugate_of(&self, i: usize) -> usize {
        self.conjugate[i]
    }

    pub fn is_self_conjugate(&self, i: usize) -> bool {
        self.conjugate[i] == i
    }

    pub fn class_of(&self, a: &[i64]) -> Option<usize> {
        if a.len() != self.m.rows() {
            return None;
        }
        let c = canonical_closed(&self.m, &self.minv, a);
        self.reps.binary_search(&c).ok()
    }

    pub fn same_class(&self, a: &[i64], b: &[i64]) -> bool {
        canonical_closed(&self.m, &self.minv, a) == canonical_closed(&self.m, &self.minv, b)
    }

    /// One index per conjugation orbit (the smaller index of each pair).
    pub fn orbit_reps(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.conjugate[i] >= i).collect()
    }
}

/// a − 2M⌊M⁻¹a/2⌋: the representative of the class of `a` with
/// M⁻¹a/2 ∈ [0,1)^s.
pub fn canonical_closed(m: &IntMatrix, minv: &RatMatrix, a: &[i64]) -> Vec<i64> {
    let av: Vec<Rational> = a.iter().map(|&x| ri(x)).collect();
    let w = minv.mul_vec(&av);
    let fl: Vec<BigInt> = w.iter().map(|x| (x / ri(2)).floor().to_integer()).collect();
    let shift = m.mul_vec(&fl);
    a.iter().zip(shift).map(|(x, s)| x - 2 * s.to_i64().expect("entry fits")).collect()
}

pub fn conjugate(a: &[i64]) -> Vec<i64> {
    a.iter().map(|x| -x).collect()
}

/// Integer b with M b ≡ δ (mod 2); exists for every plumbing tree.
pub fn self_conjugate_rep(g: &PlumbingGraph) -> Result<Vec<i64>, SpincError> {
    let s = g.len();
    let m = g.framing_matrix();
    let mut a = IntMatrix::zeros(s, 2 * s);
    for i in 0..s {
        for j in 0..s {
            a[(i, j)] = m[(i, j)].clone();
        }
        a[(i, s + i)] = BigInt::from(2);
    }
    let (x, _) = solve_integer(&a, &int_vec(&g.degree_vector())).ok_or(SpincError::NotFound)?;
    Ok(to_i64_vec(&x[..s]))
}

/// Whether a and a′ differ by 2M n with n vanishing at the distinguished vertex.
pub fn relative_equivalent(g: &PlumbingGraph, a: &[i64], b: &[i64]) -> Result<bool, SpincError> {
    let d = g.distinguished_index().ok_or(GraphError::MissingDistinguished)?;
    let m = g.framing_matrix();
    let s = g.len();
    let cols: Vec<usize> = (0..s).filter(|&j| j != d).collect();
    let mut a2 = IntMatrix::zeros(s, s - 1);
    for i in 0..s {
        for (c, &j) in cols.iter().enumerate() {
            a2[(i, c)] = &m[(i, j)] * 2;
        }
    }
    let diff: Vec<BigInt> = a.iter().zip(b).map(|(x, y)| BigInt::from(x - y)).collect();
    Ok(solve_integer(&a2, &diff).is_some())
}

/// Relative class on the standard gluing of `minus` and `plus`: the entries
/// of `a_minus` with the joint entry increased by the distinguished entry of
/// `a_plus`, followed by the other entries of `a_plus`.
pub fn glue_spinc(
    minus: &PlumbingGraph,
    a_minus: &[i64],
    plus: &PlumbingGraph,
    a_plus: &[i64],
) -> Result<Vec<i64>, SpincError> {
    let dm = minus.distinguished_index().ok_or(GraphError::MissingDistinguished)?;
    let dp = plus.distinguished_index().ok_or(GraphError::MissingDistinguished)?;
    if a_minus.len() != minus.len() || a_plus.len() != plus.len() {
        return Err(SpincError::Incompatible("vector length".into()));
    }
    if !has_parity(minus, a_minus) || !has_parity(plus, a_plus) {
        return Err(SpincError::BadParity);
    }
    let mut out = a_minus.to_vec();
    out[dm] += a_plus[dp];
    out.extend(a_plus.iter().enumerate().filter(|&(i, _)| i != dp).map(|(_, &x)| x));
    Ok(out)
}

/// p · (row of M⁻¹ at the first vertex): an integer vector whose last entry is ±1.
fn solid_torus_row(p: i64, r: i64) -> Result<(PlumbingGraph, Vec<i64>), SpincError> {
    let g = crate::plumbing::solid_torus_graph(p, r)?;
    let minv = inverse(&g.framing_matrix())?;
    let w: Vec<i64> = (0..g.len())
        .map(|j| {
            let v = &minv[(0, j)] * ri(p);
            assert!(v.is_integer());
            v.to_integer().to_i64().expect("entry fits")
        })
        .collect();
    Ok((g, w))
}

/// Label of a relative class on the solid torus graph for p/r: p(M⁻¹a)₁/2,
/// an element of ℤ (r odd) or ℤ + ½ (r even). Conjugation negates it.
pub fn solid_torus_label(p: i64, r: i64, a: &[i64]) -> Result<Rational, SpincError> {
    let (g, w) = solid_torus_row(p, r)?;
    if !has_parity(&g, a) {
        return Err(SpincError::BadParity);
    }
    let dot: i64 = w.iter().zip(a).map(|(x, y)| x * y).sum();
    Ok(Rational::new(dot.into(), 2.into()))
}

/// A representative vector for the given solid torus label.
pub fn solid_torus_rep(p: i64, r: i64, label: &Rational) -> Result<Vec<i64>, SpincError> {
    let (g, w) = solid_torus_row(p, r)?;
    let delta = g.degree_vector();
    let twice = label * ri(2);
    if !twice.is_integer() {
        return Err(SpincError::BadParity);
    }
    let wd: i64 = w.iter().zip(&delta).map(|(x, y)| x * y).sum();
    let rest = twice.to_integer().to_i64().expect("label fits") - wd;
    if rest.is_odd() {
        return Err(SpincError::BadParity);
    }
    let last = *w.last().unwrap();
    let mut a = delta;
    *a.last_mut().unwrap() += 2 * (rest / 2) * last;
    Ok(a)
}

/// Linking form −(x, M⁻¹y) mod 1 on H₁ = ℤ^s/Mℤ^s, reduced into [0, 1).
pub fn linking_form(g: &PlumbingGraph, x: &[i64], y: &[i64]) -> Result<Rational, SpincError> {
    let minv = inverse(&g.framing_matrix())?;
    let yv: Vec<Rational> = y.iter().map(|&v| ri(v)).collect();
    let my = minv.mul_vec(&yv);
    let val: Rational = -x.iter().zip(my).fold(Rational::zero(), |acc, (a, b)| acc + ri(*a) * b);
    Ok(&val - val.floor())
}

/// H₁ class of a Spin^c vector under [a] ↦ [(a − a₀)/2] with a₀ = M b self-conjugate.
pub fn homology_class(g: &PlumbingGraph, a: &[i64]) -> Result<Vec<i64>, SpincError> {
    let b = self_conjugate_rep(g)?;
    let a0 = to_i64_vec(&g.framing_matrix().mul_vec(&int_vec(&b)));
    Ok(a.iter().zip(a0).map(|(x, y)| (x - y) / 2).collect())
}

/// S_ab = 2cos(2π ℓk(a,b)) / (|W_a| √|H₁|) over conjugation orbits, together
/// with the orbit representatives (indices into the class list).
pub fn s_matrix(g: &PlumbingGraph) -> Result<(Vec<usize>, Vec<Vec<f64>>), SpincError> {
    let set = SpincSet::new(g)?;
    let orbits = set.orbit_reps();
    let h1 = det(&g.framing_matrix()).abs().to_f64().expect("determinant fits");
    let classes: Vec<Vec<i64>> =
        orbits.iter().map(|&i| homology_class(g, set.rep(i))).collect::<Result<_, _>>()?;
    let mut s = Vec::new();
    for (ia, &i) in orbits.iter().enumerate() {
        let w = if set.is_self_conjugate(i) { 2.0 } else { 1.0 };
        let row = (0..orbits.len())
            .map(|ib| {
                let lk = linking_form(g, &classes[ia], &classes[ib]).unwrap();
                let theta = 2.0 * std::f64::consts::PI * lk.to_f64().unwrap();
                2.0 * theta.cos() / (w * h1.sqrt())
            })
            .collect();
        s.push(row);
    }
    Ok((orbits, s))
}
