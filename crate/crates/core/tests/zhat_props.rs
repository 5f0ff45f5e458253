mod common;

use common::*;
use proptest::prelude::*;
use zhat::exactnum::{ri, Rational};
use zhat::plumbing::{apply_neumann, PlumbingGraph};
use zhat::qseries::QSeries;
use zhat::spinc::{conjugate, SpincSet};
use zhat::zhat::*;

fn all_classes(g: &PlumbingGraph, cutoff: &Rational) -> Vec<String> {
    let set = SpincSet::new(g).unwrap();
    let mut out: Vec<String> = set.reps().iter().map(|a| zhat_closed(g, a, cutoff).unwrap().to_string()).collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn neumann_invariance(g in negative_definite(6, 24), choice in 0u8..3, pick in 0usize..64, sign in any::<bool>()) {
        let cutoff = ri(60);
        let (up, _) = blow_up(&g, choice, pick, sign).unwrap_or_else(|| blow_up(&g, 1, pick, sign).unwrap());
        let h = apply_neumann(&g, &up).unwrap();
        prop_assert_eq!(all_classes(&g, &cutoff), all_classes(&h, &cutoff));
    }

    #[test]
    fn conjugate_classes_agree(g in negative_definite(6, 24)) {
        let cutoff = ri(40);
        for a in SpincSet::new(&g).unwrap().reps() {
            let z = zhat_closed(&g, a, &cutoff).unwrap();
            prop_assert_eq!(&z, &zhat_closed(&g, &conjugate(a), &cutoff).unwrap());
            // lowest exponent is the prefactor shift plus the minimum of the quadratic
            if let Some(lo) = z.min_exponent() {
                prop_assert!(lo >= &min_exponent_closed(&g, a, &cutoff).unwrap().unwrap());
            }
        }
    }
}

#[test]
fn brieskorn_matches_star_to_q100() {
    let cutoff = ri(100);
    for (p1, p2, p3) in [(2, 3, 5), (2, 3, 7), (2, 3, 11), (2, 3, 13)] {
        let g = brieskorn_graph(p1, p2, p3).unwrap();
        let set = SpincSet::new(&g).unwrap();
        assert_eq!(set.len(), 1);
        let star = zhat_closed(&g, set.rep(0), &cutoff).unwrap();
        let formula = brieskorn_zhat(p1, p2, p3, &cutoff).unwrap();
        assert_eq!(star.terms(), formula.terms(), "({p1},{p2},{p3})");
        assert!(!star.terms().is_empty());
        let _: &QSeries = &formula;
    }
}
