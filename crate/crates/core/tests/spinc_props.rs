mod common;

use std::collections::BTreeSet;

use common::*;
use num_traits::ToPrimitive;
use num_traits::Signed;
use proptest::prelude::*;
use zhat::exactnum::{det, inverse, ri, Rational, RatMatrix};
use zhat::plumbing::PlumbingGraph;
use zhat::spinc::*;

fn frac(v: Vec<Rational>) -> Vec<Rational> {
    v.into_iter().map(|x| &x - x.floor()).collect()
}

/// H₁ = ℤ^s/Mℤ^s as the closure of the unit vectors under x ↦ M⁻¹x mod 1.
fn homology_group(minv: &RatMatrix) -> BTreeSet<Vec<Rational>> {
    let s = minv.rows();
    let gens: Vec<Vec<Rational>> = (0..s).map(|j| (0..s).map(|i| minv[(i, j)].clone()).collect()).collect();
    let mut seen = BTreeSet::from([vec![ri(0); s]]);
    let mut todo = vec![vec![ri(0); s]];
    while let Some(x) = todo.pop() {
        for gv in &gens {
            let y = frac(x.iter().zip(gv).map(|(a, b)| a + b).collect());
            if seen.insert(y.clone()) {
                todo.push(y);
            }
        }
    }
    seen
}

fn orbit_count_by_scan(g: &PlumbingGraph) -> usize {
    // a = δ + 2x; conjugation sends x to −δ − x
    let minv = inverse(&g.framing_matrix()).unwrap();
    let group = homology_group(&minv);
    let delta: Vec<Rational> = g.degree_vector().into_iter().map(|d| ri(d as i64)).collect();
    let md = minv.mul_vec(&delta);
    let fixed = group
        .iter()
        .filter(|x| frac(md.iter().zip(x.iter()).map(|(a, b)| -a - b).collect()) == **x)
        .count();
    (group.len() + fixed) / 2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn class_counts(g in negative_definite(5, 64)) {
        let set = SpincSet::new(&g).unwrap();
        let d = det(&g.framing_matrix()).abs().to_integer().to_usize().unwrap();
        prop_assert_eq!(set.len(), d);
        for i in 0..set.len() {
            prop_assert_eq!(set.conjugate_of(set.conjugate_of(i)), i);
            prop_assert_eq!(set.class_of(&conjugate(set.rep(i))), Some(set.conjugate_of(i)));
        }
        prop_assert_eq!(set.orbit_reps().len(), orbit_count_by_scan(&g));
    }

    #[test]
    fn linking_form_symmetric_bilinear(
        g in negative_definite(5, 64),
        x in prop::collection::vec(-3i64..=3, 5),
        y in prop::collection::vec(-3i64..=3, 5),
        z in prop::collection::vec(-3i64..=3, 5),
    ) {
        let s = g.len();
        let (x, y, z) = (&x[..s], &y[..s], &z[..s]);
        let lk = |a: &[i64], b: &[i64]| linking_form(&g, a, b).unwrap();
        prop_assert_eq!(lk(x, y), lk(y, x));
        let yz: Vec<i64> = y.iter().zip(z).map(|(a, b)| a + b).collect();
        let sum = lk(x, y) + lk(x, z);
        prop_assert_eq!(lk(x, &yz), &sum - sum.floor());
        // Mℤ^s pairs trivially
        let mx: Vec<i64> = g.framing_matrix().mul_vec(&zhat::exactnum::int_vec(x)).iter().map(|v| v.to_i64().unwrap()).collect();
        prop_assert_eq!(lk(&mx, y), ri(0));
    }
}

#[test]
fn glued_class_depends_only_on_relative_classes() {
    use zhat::plumbing::{solid_torus_graph, torus_knot_graph};
    let minus = torus_knot_graph(2, 3).unwrap();
    let a_minus = minus.degree_vector().into_iter().map(|d| d as i64).collect::<Vec<_>>();
    let m = minus.framing_matrix();
    let dm = minus.distinguished_index().unwrap();
    for (p, r) in [(-1, 2), (5, 1), (-7, 3)] {
        let plus = solid_torus_graph(p, r).unwrap();
        let a_plus = plus.degree_vector().into_iter().map(|d| d as i64).collect::<Vec<_>>();
        let glued = glue_spinc(&minus, &a_minus, &plus, &a_plus).unwrap();
        let graph = zhat::plumbing::standard_glue(&minus, &plus).unwrap();
        let set = SpincSet::new(&graph).unwrap();
        for j in (0..minus.len()).filter(|&j| j != dm) {
            // a⁻ + 2M e_j with e_j away from the distinguished vertex
            let shifted: Vec<i64> = (0..minus.len()).map(|i| a_minus[i] + 2 * m[(i, j)].to_i64().unwrap()).collect();
            assert!(relative_equivalent(&minus, &a_minus, &shifted).unwrap());
            let g2 = glue_spinc(&minus, &shifted, &plus, &a_plus).unwrap();
            assert!(set.same_class(&glued, &g2), "p/r = {p}/{r}, j = {j}");
        }
    }
}
