//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero unless the failing set is exactly the documented one.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_integer::Integer;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use zhat::ajrec::*;
use zhat::exactnum::{rat, ri, Rational};
use zhat::knotinv::*;
use zhat::plumbing::*;
use zhat::qseries::{Laurent, QSeries, XSeries};
use zhat::spinc::SpincSet;
use zhat::zhat::*;

/// Criteria that fail because the printed value disagrees with the exact
/// computation: an L(8,3) exponent and the lens space label of 7-surgery.
const KNOWN_FAILURES: [u32; 2] = [3, 14];

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

/// Parses a printed polynomial such as `1 - q + 2q^7 - q^{11}` into a series.
fn poly(s: &str) -> QSeries {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace() && *c != '{' && *c != '}').collect();
    let mut out = QSeries::zero();
    for tok in cleaned.replace('-', "+-").split('+').filter(|t| !t.is_empty()) {
        let (neg, body) = match tok.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, tok),
        };
        let (coef, exp) = match body.split_once('q') {
            None => (body.parse::<i64>().unwrap(), 0),
            Some((c, e)) => {
                let c = if c.is_empty() { 1 } else { c.parse().unwrap() };
                let e = if e.is_empty() { 1 } else { e.trim_start_matches('^').parse().unwrap() };
                (c, e)
            }
        };
        out.add_term(ri(exp), ri(if neg { -coef } else { coef }));
    }
    out
}

/// sign · q^pre · poly, compared through the last printed exponent.
fn matches_printed(got: &QSeries, sign: i64, pre: Rational, printed: &str) -> Check {
    let expect = poly(printed).shift(&pre).scale(&ri(sign));
    let last = expect.max_exponent().cloned().unwrap();
    ensure!(got.complete_below().map_or(true, |b| b > &last), "computed only below {:?}, need {last}", got.complete_below());
    let head: BTreeMap<Rational, Rational> = got.terms().range(..=last.clone()).map(|(e, c)| (e.clone(), c.clone())).collect();
    ensure!(&head == expect.terms(), "through q^{last}: got {}, expected {}", QSeries::from_terms(head.clone(), None), expect);
    Ok(())
}

fn c1() -> Check {
    let g = PlumbingGraph::chain(&[-1], None);
    let z = zhat_closed(&g, &[0], &ri(30)).map_err(|e| e.to_string())?;
    let expect = QSeries::from_terms([(rat(-1, 2), ri(-2)), (rat(1, 2), ri(2))], None);
    ensure!(z.terms() == expect.terms(), "got {z}");
    Ok(())
}

const POINCARE: &str = "1-q-q^3-q^7+q^8+q^14+q^20+q^29-q^31-q^42";

fn c2() -> Check {
    let cutoff = ri(45);
    let g = seifert_graph(-2, &[(1, 2), (2, 3), (4, 5)]).map_err(|e| e.to_string())?;
    let set = SpincSet::new(&g).map_err(|e| e.to_string())?;
    ensure!(set.len() == 1, "{} classes", set.len());
    let star = zhat_closed(&g, set.rep(0), &cutoff).map_err(|e| e.to_string())?;
    matches_printed(&star, 1, rat(-3, 2), POINCARE)?;
    let formula = brieskorn_zhat(2, 3, 5, &cutoff).map_err(|e| e.to_string())?;
    matches_printed(&formula, 1, rat(-3, 2), POINCARE)?;
    // the false theta part alone misses exactly C = 2q^{1/120}
    let delta = brieskorn_delta(2, 3, 5).map_err(|e| e.to_string())?;
    let al = brieskorn_alphas(2, 3, 5);
    let psi = false_theta_combination(30, &[(1, al[0]), (-1, al[1]), (-1, al[2]), (1, al[3])], &(&cutoff - &delta));
    let c = &star - &psi.shift(&delta);
    let expect = QSeries::monomial(ri(2), &delta + rat(1, 120));
    ensure!(c.terms() == expect.terms(), "constant term {c}");
    Ok(())
}

fn c3() -> Check {
    let g = PlumbingGraph::chain(&[-3, -3], None);
    let set = SpincSet::new(&g).map_err(|e| e.to_string())?;
    let orbits = set.orbit_reps();
    ensure!(orbits.len() == 5, "{} classes mod conjugation", orbits.len());
    let cutoff = ri(20);
    let mut got: Vec<String> = Vec::new();
    for i in orbits {
        got.push(zhat_closed(&g, set.rep(i), &cutoff).map_err(|e| e.to_string())?.terms_string());
    }
    let mut expect: Vec<String> = [QSeries::monomial(ri(1), rat(1, 4)), QSeries::monomial(ri(1), rat(-1, 8))]
        .iter()
        .chain([QSeries::zero(), QSeries::zero(), QSeries::zero()].iter())
        .map(|z| z.terms_string())
        .collect();
    got.sort();
    expect.sort();
    ensure!(got == expect, "got {got:?}, printed {expect:?}");
    Ok(())
}

trait TermsString {
    fn terms_string(&self) -> String;
}

impl TermsString for QSeries {
    fn terms_string(&self) -> String {
        if self.is_zero() {
            "0".into()
        } else {
            QSeries::from_terms(self.terms().clone(), None).to_string()
        }
    }
}

/// Right trefoil, −1/r: (r, b₃, printed row), prefactor q^{1/2}.
const RIGHT_TREFOIL: [(i64, i64, &str); 5] = [
    (1, 7, "1-q-q^5+q^10-q^11+q^18+q^30-q^41+q^43-q^56-q^76+q^93-q^96+q^115+q^143-q^166+q^170-q^195-q^231+q^260-q^265+q^296"),
    (2, 13, "1-q-q^11+q^16-q^23+q^30+q^60-q^71+q^85-q^98-q^148+q^165-q^186+q^205+q^275-q^298"),
    (3, 19, "1-q-q^17+q^22-q^35+q^42+q^90-q^101+q^127-q^140-q^220+q^237-q^276+q^295"),
    (4, 25, "1-q-q^23+q^28-q^47+q^54+q^120-q^131+q^169-q^182-q^292"),
    (5, 31, "1-q-q^29+q^34-q^59+q^66+q^150-q^161+q^211-q^224"),
];

fn c4() -> Check {
    for (r, b3, row) in RIGHT_TREFOIL {
        let cutoff = poly(row).max_exponent().unwrap() + ri(1);
        let b = brieskorn_zhat(2, 3, b3, &cutoff).map_err(|e| e.to_string())?;
        matches_printed(&b, 1, rat(1, 2), row).map_err(|e| format!("brieskorn r = {r}: {e}"))?;
        let plan = SurgeryPlan::conjectural(-1, r).map_err(|e| e.to_string())?;
        ensure!(plan.epsilon_d().map_err(|e| e.to_string())? == (1, rat(-r, 4) - rat(1, 4 * r)), "d for r = {r}");
        let s = surgery_to_cutoff(|w| torus_fk(2, 3, w), &plan, &cutoff).map_err(|e| e.to_string())?;
        matches_printed(&s, 1, rat(1, 2), row).map_err(|e| format!("surgery r = {r}: {e}"))?;
    }
    Ok(())
}

fn c5() -> Check {
    let cutoff = ri(100);
    for (s, t) in [(2, 3), (2, 5), (3, 4)] {
        let g = torus_knot_graph(s, t).map_err(|e| e.to_string())?;
        let f = fk_plumbed(&g, Some(25), &cutoff).map_err(|e| e.to_string())?;
        let expect = torus_fk(s, t, 25).map_err(|e| e.to_string())?;
        for m in -25..=25 {
            ensure!(
                f.slice(m).terms() == expect.slice(m).truncate(&cutoff).terms(),
                "({s},{t}) slice x^{m}/2"
            );
        }
    }
    Ok(())
}

/// Left trefoil, −1/r, prefactor q^{−3/2}.
const LEFT_TREFOIL: [(i64, &str); 3] = [
    (1, "1-q-q^3-q^7+q^8+q^14+q^20+q^29-q^31-q^42"),
    (2, "1-q-q^9+q^14-q^19+q^26+q^50-q^61+q^71-q^84-q^124+q^141-q^156+q^175+q^231-q^254+q^274-q^299"),
    (3, "1-q-q^15+q^20-q^31+q^38+q^80-q^91+q^113-q^126-q^196+q^213-q^246+q^265"),
];

fn c6() -> Check {
    for (r, row) in LEFT_TREFOIL {
        let cutoff = poly(row).max_exponent().unwrap() + ri(1);
        let plan = SurgeryPlan::conjectural(-1, r).map_err(|e| e.to_string())?;
        let z = surgery_to_cutoff(|w| mirror_series(&torus_fk(2, 3, w)?), &plan, &cutoff).map_err(|e| e.to_string())?;
        matches_printed(&z, 1, rat(-3, 2), row).map_err(|e| format!("r = {r}: {e}"))?;
    }
    Ok(())
}

fn all_classes(g: &PlumbingGraph, cutoff: &Rational) -> Vec<String> {
    let set = SpincSet::new(g).unwrap();
    let mut out: Vec<String> = set.reps().iter().map(|a| zhat_closed(g, a, cutoff).unwrap().to_string()).collect();
    out.sort();
    out
}

fn c7() -> Check {
    let cutoff = ri(60);
    let config = Config {
        cases: 100,
        max_local_rejects: 1 << 20,
        max_global_rejects: 1 << 20,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = (common::negative_definite(8, 40), 0u8..3, 0usize..64, any::<bool>());
    let moves = std::cell::Cell::new(0usize);
    runner
        .run(&strategy, |(g, choice, pick, sign)| {
            let (up, down) = common::blow_up(&g, choice, pick, sign).unwrap_or_else(|| common::blow_up(&g, 1, pick, sign).unwrap());
            let h = apply_neumann(&g, &up).unwrap();
            moves.set(moves.get() + 1);
            let before = all_classes(&g, &cutoff);
            prop_assert_eq!(&before, &all_classes(&h, &cutoff));
            if pick % 2 == 0 {
                let back = apply_neumann(&h, &down).unwrap();
                moves.set(moves.get() + 1);
                prop_assert!(back.is_isomorphic(&g));
                prop_assert_eq!(&before, &all_classes(&back, &cutoff));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure!(moves.get() >= 100, "only {} moves", moves.get());
    Ok(())
}

fn lp(terms: &[(i64, i64)]) -> Laurent {
    Laurent::from_int_terms(terms)
}

/// Symmetric Laurent polynomial from its coefficients at x⁰, x¹, x², ...
fn sym(coeffs: &[Rational]) -> Laurent {
    let mut p = Laurent::zero();
    for (k, c) in coeffs.iter().enumerate() {
        p.add_term(k as i64, c.clone());
        if k > 0 {
            p.add_term(-(k as i64), c.clone());
        }
    }
    p
}

/// (x² − 3x + 1)^j · x^{−s} / den · poly, poly palindromic and given by the
/// first half of its coefficients from the top degree down.
fn factored(j: u32, den: i64, s: i64, half: &[i64]) -> Laurent {
    let mut top_down = half.to_vec();
    top_down.extend(half.iter().rev().skip(1));
    let deg = top_down.len() as i64 - 1;
    let poly = Laurent::from_int_terms(&top_down.iter().enumerate().map(|(i, c)| (deg - i as i64, *c)).collect::<Vec<_>>());
    (&lp(&[(2, 1), (1, -3), (0, 1)]).pow(j) * &poly).shift(-s).scale(&rat(1, den))
}

fn c8() -> Check {
    let t = solve_pk(Knot::TrefoilRight, 4).map_err(|e| e.to_string())?;
    let trefoil = [
        sym(&[ri(2), ri(-2), ri(1)]),
        sym(&[ri(9), ri(-6), rat(7, 2), ri(-2), rat(1, 2)]),
        sym(&[rat(25, 3), rat(-49, 3), rat(46, 3), rat(-17, 3), rat(7, 3), ri(-1), rat(1, 6)]),
        sym(&[rat(201, 2), rat(-82, 3), rat(-193, 12), ri(-16), rat(117, 8), ri(-3), rat(7, 8), rat(-1, 3), rat(1, 24)]),
    ];
    for (k, p) in trefoil.iter().enumerate() {
        ensure!(&t.p[k + 1] == p, "trefoil P_{}: got {:?}", k + 1, t.p[k + 1]);
    }
    let f = solve_pk(Knot::Fig8, 10).map_err(|e| e.to_string())?;
    for k in [1, 3, 5, 7, 9] {
        ensure!(f.p[k].is_zero(), "figure-eight P_{k} is nonzero");
    }
    let fig8 = [
        (2, sym(&[ri(5), ri(-4), ri(1)])),
        (4, sym(&[rat(4211, 12), rat(-862, 3), rat(293, 2), rat(-98, 3), rat(-3, 4), rat(2, 3), rat(1, 12)])),
        (6, factored(3, 360, 10, &[1, 101, 3160, 12171, 8061, -102498, 214337, -258305])),
        (
            8,
            factored(
                4,
                20160,
                14,
                &[1, 476, 67393, 1645236, 14061303, 8176392, -41755650, -127433568, 583375485, -1066253508, 1267004367],
            ),
        ),
        (
            10,
            factored(
                5,
                1814400,
                18,
                &[
                    1,
                    2003,
                    1134523,
                    91512582,
                    2727924123,
                    26367610587,
                    80642770303,
                    -185974355518,
                    -170592137312,
                    55832596182,
                    2753722904868,
                    -8501480211618,
                    14284755783843,
                    -16668636494613,
                ],
            ),
        ),
    ];
    for (k, p) in fig8 {
        ensure!(f.p[k] == p, "figure-eight P_{k}");
    }
    Ok(())
}

fn c9() -> Check {
    let printed = [
        (1, lp(&[(0, 1)])),
        (3, lp(&[(0, 2)])),
        (5, lp(&[(-1, 1), (0, 3), (1, 1)])),
        (7, lp(&[(-2, 2), (-1, 2), (0, 5), (1, 2), (2, 2)])),
        (9, sym(&[8, 5, 4, 3, 1].map(ri))),
        (11, sym(&[15, 10, 10, 7, 6, 2, 2].map(ri))),
        (13, sym(&[27, 23, 21, 18, 15, 11, 7, 4, 3, 1].map(ri))),
    ];
    let init = fk_initial(Knot::Fig8, 13).map_err(|e| e.to_string())?;
    for (m, f) in printed {
        ensure!(init.get(&m) == Some(&f.to_qseries()), "f_{m}");
    }
    // every step of fk_extend is an exact division and errors on a remainder
    let ext = fk_extend(Knot::Fig8, 41).map_err(|e| e.to_string())?;
    for m in (1..=41).step_by(2) {
        ensure!(!ext.slice(m).is_zero(), "f_{m} is zero");
    }
    let op = ahat_operator(Knot::Fig8).map_err(|e| e.to_string())?;
    let report = verify_annihilation(&op, &ext, 41);
    ensure!(!report.checked.is_empty(), "empty certified window");
    ensure!(report.is_zero(), "nonzero residual at {:?}", report.nonzero.keys().collect::<Vec<_>>());
    Ok(())
}

/// Figure-eight, −1/r, prefactor −q^{−1/2}.
const FIG8: [(i64, &str); 4] = [
    (2, "1-q+2q^3-2q^6+q^9+3q^10+q^11-q^14-3q^15-q^16+2q^19+2q^20+5q^21+2q^22+2q^23-2q^26-2q^27-5q^28-2q^29-2q^30"),
    (3, "1-q+2q^5-2q^8+q^15+3q^16+q^17-q^20-3q^21-q^22+2q^31+2q^32+5q^33+2q^34+2q^35-2q^38-2q^39-5q^40-2q^41-2q^42"),
    (4, "1-q+2q^7-2q^10+q^21+3q^22+q^23-q^26-3q^27-q^28+2q^43+2q^44+5q^45+2q^46+2q^47-2q^50-2q^51-5q^52-2q^53-2q^54"),
    (5, "1-q+2q^9-2q^12+q^27+3q^28+q^29-q^32-3q^33-q^34+2q^55+2q^56+5q^57+2q^58+2q^59-2q^62-2q^63-5q^64-2q^65-2q^66"),
];

fn c10() -> Check {
    let max_m = 41;
    let ext = fk_extend(Knot::Fig8, max_m).map_err(|e| e.to_string())?;
    let source = |w: i64| -> Result<XSeries, KnotError> {
        if w > max_m {
            return Err(KnotError::BadInput(format!("window {w} beyond the extended range")));
        }
        Ok(ext.restrict(w))
    };
    let rows = std::iter::once((1, "1+q+q^3+q^4+q^5+2q^7+q^8+2q^9+q^10+2q^11+q^12+3q^13")).chain(FIG8);
    for (r, row) in rows {
        let cutoff = poly(row).max_exponent().unwrap() + ri(1);
        let plan = SurgeryPlan::conjectural(-1, r).map_err(|e| e.to_string())?;
        let z = surgery_to_cutoff(source, &plan, &cutoff).map_err(|e| e.to_string())?;
        matches_printed(&z, -1, rat(-1, 2), row).map_err(|e| format!("r = {r}: {e}"))?;
    }
    Ok(())
}

fn c11() -> Check {
    for (s, t) in [(2, 3), (3, 4)] {
        for n in 1..=8 {
            ensure!(stability_check(s, t, n).map_err(|e| e.to_string())?, "({s},{t}) n = {n}");
        }
    }
    Ok(())
}

fn c12() -> Check {
    let window = 15;
    let rows: [(&str, XSeries, Vec<(i64, i64)>); 3] = [
        ("3_1", torus_fk(2, 3, window).map_err(|e| e.to_string())?, vec![(1, -1), (5, 1), (7, 1), (11, -1), (13, -1)]),
        (
            "4_1",
            fk_extend(Knot::Fig8, window).map_err(|e| e.to_string())?,
            vec![(1, 1), (3, 2), (5, 5), (7, 13), (9, 34), (11, 89), (13, 233), (15, 610)],
        ),
        ("5_1", torus_fk(2, 5, window).map_err(|e| e.to_string())?, vec![(3, -1), (7, 1), (13, 1)]),
    ];
    for (name, f, row) in rows {
        let mut got = BTreeMap::new();
        for m in -window..=window {
            let v = f.slice(m).eval_at_one().map_err(|e| e.to_string())? * ri(2);
            if v != ri(0) {
                got.insert(m, v);
            }
        }
        let expect: BTreeMap<i64, Rational> = row.iter().flat_map(|&(m, c)| [(m, ri(c)), (-m, ri(-c))]).collect();
        ensure!(got == expect, "{name}: got {got:?}");
    }
    Ok(())
}

fn coprime_pairs(n: usize) -> Vec<(i64, i64)> {
    let mut runner = TestRunner::deterministic();
    let strategy = (-60i64..=60, 1i64..=60).prop_filter("coprime", |&(p, r)| p != 0 && p.gcd(&r) == 1);
    let mut out = Vec::new();
    while out.len() < n {
        out.push(strategy.new_tree(&mut runner).unwrap().current());
    }
    out
}

fn c13() -> Check {
    let pairs = coprime_pairs(200);
    for &(p, r) in &pairs {
        let p = p.abs();
        let lhs = dedekind_sum(p, r) + dedekind_sum(r, p);
        let rhs = rat(-1, 4) + (rat(p, r) + rat(r, p) + rat(1, p * r)) / ri(12);
        ensure!(lhs == rhs, "reciprocity fails at ({p},{r})");
    }
    let mut presentations = 0;
    for (i, &(p, r)) in pairs.iter().enumerate() {
        let alpha = alpha_pr(p, r).map_err(|e| e.to_string())?;
        let mut chains = vec![continued_fraction(p, r, CfStyle::Any).map_err(|e| e.to_string())?];
        if let Ok(ks) = continued_fraction(p, r, CfStyle::AllLeMinus2) {
            chains.push(ks);
        }
        // ±1 blow-ups of the chain present the same p/r
        let mut ks = chains[0].clone();
        for j in 0..3 {
            let e = if (i + j) % 2 == 0 { 1 } else { -1 };
            let at = (i * 7 + j * 3) % ks.len();
            if at + 1 < ks.len() {
                ks[at] += e;
                ks[at + 1] += e;
                ks.insert(at + 1, e);
            } else {
                ks[at] += e;
                ks.push(e);
            }
            chains.push(ks.clone());
        }
        for ks in chains {
            ensure!(evaluate_continued_fraction(&ks) == (p, r), "{ks:?} does not present {p}/{r}");
            let a = alpha_from_chain(&ks).map_err(|e| e.to_string())?;
            ensure!(a == alpha, "α({p},{r}) = {alpha} but {a} from {ks:?}");
            presentations += 1;
        }
    }
    ensure!(presentations >= 4 * pairs.len(), "{presentations} presentations");
    Ok(())
}

fn c14() -> Check {
    let complement = torus_knot_graph(2, 3).map_err(|e| e.to_string())?;
    let solid = solid_torus_graph(7, 1).map_err(|e| e.to_string())?;
    let g = standard_glue(&complement, &solid).map_err(|e| e.to_string())?;
    let set = SpincSet::new(&g).map_err(|e| e.to_string())?;
    let cutoff = ri(20);
    let mut got = BTreeSet::new();
    for i in set.orbit_reps() {
        let z = zhat_closed(&g, set.rep(i), &cutoff).map_err(|e| e.to_string())?;
        if !z.is_zero() {
            got.insert(z.terms_string());
        }
    }
    let expect: BTreeSet<String> =
        [QSeries::monomial(ri(-2), ri(1)), QSeries::monomial(ri(1), rat(8, 7))].iter().map(|z| z.terms_string()).collect();
    ensure!(got == expect, "got {got:?}, printed {expect:?}");
    Ok(())
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 14] = [
        (1, "S^3 from the single -1 vertex", c1),
        (2, "Poincare sphere from the Seifert plumbing and the Brieskorn formula", c2),
        (3, "L(8,3) series over the classes mod conjugation", c3),
        (4, "right trefoil -1/r table from Brieskorn spheres and surgery", c4),
        (5, "plumbed torus knot complements match the closed form", c5),
        (6, "left trefoil -1/r surgeries from the mirror series", c6),
        (7, "Neumann move invariance", c7),
        (8, "P_k tables for the trefoil and the figure-eight", c8),
        (9, "figure-eight f_m, recursion and annihilation", c9),
        (10, "figure-eight -1/r surgeries", c10),
        (11, "torus knot stability identity", c11),
        (12, "q -> 1 rows of 2F", c12),
        (13, "Dedekind reciprocity and alpha presentations", c13),
        (14, "7-surgery on the right trefoil from the glued plumbing", c14),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for (n, name, check) in criteria {
        let t = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS criterion {n}: {name} ({secs:.1}s)"),
            Err(e) => {
                println!("FAIL criterion {n}: {name} ({secs:.1}s): {e}");
                failed.push(n);
            }
        }
    }
    println!("{} passed, {} failed", 14 - failed.len(), failed.len());
    if failed != KNOWN_FAILURES {
        eprintln!("failing set {failed:?} differs from the documented {KNOWN_FAILURES:?}");
        std::process::exit(1);
    }
}
