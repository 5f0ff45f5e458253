use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};
use zhat::ajrec::{self, Knot};
use zhat::exactnum::{parse_rational, rat, rational_string, ri, Rational};
use zhat::knotinv::{self, KnotError, SurgeryMode, SurgeryPlan};
use zhat::plumbing::{abs_det, standard_glue, torus_knot_graph, PlumbingGraph};
use zhat::qseries::{Laurent, QSeries, XSeries};
use zhat::spinc::SpincSet;
use zhat::zhat::{brieskorn_zhat, zhat_closed};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CommandKind {
    Closed,
    Brieskorn,
    KnotFk,
    TorusFk,
    Surgery,
    Glue,
    Jones,
    Recursion,
    Stability,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Closed => "closed",
            CommandKind::Brieskorn => "brieskorn",
            CommandKind::KnotFk => "knot-fk",
            CommandKind::TorusFk => "torus-fk",
            CommandKind::Surgery => "surgery",
            CommandKind::Glue => "glue",
            CommandKind::Jones => "jones",
            CommandKind::Recursion => "recursion",
            CommandKind::Stability => "stability",
        }
    }
}

/// Raw options shared by every command, as given on the command line.
#[derive(clap::Args, Clone, Debug, Default)]
pub struct Options {
    /// Plumbing graph file (JSON or line format); `glue` takes two.
    #[arg(long)]
    pub graph: Vec<PathBuf>,
    /// Builtin knot: unknot, trefoil, torus:S,T (T < 0 for the mirror), fig8.
    #[arg(long)]
    pub knot: Option<String>,
    /// Surgery coefficient P/R.
    #[arg(long, allow_hyphen_values = true)]
    pub coef: Option<String>,
    /// Spin^c selection: all, or an index into the classes mod conjugation.
    #[arg(long)]
    pub spinc: Option<String>,
    /// Series are computed below q^N.
    #[arg(long, allow_hyphen_values = true)]
    pub max_q: Option<String>,
    /// x-window: slices x^{m/2} with |m| ≤ M.
    #[arg(long)]
    pub max_x: Option<i64>,
    /// Brieskorn triple B1,B2,B3.
    #[arg(long)]
    pub triple: Option<String>,
    /// Color (jones) or largest color checked (stability).
    #[arg(long)]
    pub n: Option<i64>,
    /// Also solve for P_0..P_K (recursion).
    #[arg(long)]
    pub pk: Option<usize>,
    /// Surgery sign ε, overriding the default.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<i64>,
    /// Surgery exponent d, overriding the default.
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Write the document to PATH instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-class computations.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KnotTag {
    Unknot,
    Torus { s: i64, t: i64 },
    Fig8,
}

impl KnotTag {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Invalid(format!(
                "unknown knot tag {s:?}; expected unknot, trefoil, torus:S,T or fig8"
            ))
        };
        match s {
            "unknot" => Ok(KnotTag::Unknot),
            "trefoil" => Ok(KnotTag::Torus { s: 2, t: 3 }),
            "fig8" => Ok(KnotTag::Fig8),
            _ => {
                let rest = s.strip_prefix("torus:").ok_or_else(bad)?;
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                let s: i64 = a.trim().parse().map_err(|_| bad())?;
                let t: i64 = b.trim().parse().map_err(|_| bad())?;
                if s < 2 || t.abs() <= s || num_integer::gcd(s, t) != 1 {
                    return Err(CliError::Invalid(format!(
                        "torus knot needs 2 ≤ S < |T| coprime, got ({s},{t})"
                    )));
                }
                Ok(KnotTag::Torus { s, t })
            }
        }
    }

    fn label(&self) -> String {
        match self {
            KnotTag::Unknot => "unknot".into(),
            KnotTag::Torus { s, t } => format!("torus:{s},{t}"),
            KnotTag::Fig8 => "fig8".into(),
        }
    }

    fn ajrec_knot(&self) -> Result<Knot, CliError> {
        match self {
            KnotTag::Unknot => Ok(Knot::Unknot),
            KnotTag::Torus { s: 2, t: 3 } => Ok(Knot::TrefoilRight),
            KnotTag::Torus { s: 2, t: -3 } => Ok(Knot::TrefoilLeft),
            KnotTag::Fig8 => Ok(Knot::Fig8),
            KnotTag::Torus { .. } => Err(CliError::NotComputable(format!(
                "UnsupportedKnot: no quantum A-polynomial for {}",
                self.label()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpincChoice {
    All,
    Index(usize),
}

/// A validated job.
#[derive(Clone, Debug)]
pub struct JobSpec {
    pub command: CommandKind,
    pub graphs: Vec<PathBuf>,
    pub knot: Option<KnotTag>,
    pub coef: Option<(i64, i64)>,
    pub spinc: SpincChoice,
    pub max_q: Rational,
    pub max_x: i64,
    pub triple: Option<(i64, i64, i64)>,
    pub n: i64,
    pub pk: Option<usize>,
    pub epsilon: Option<i64>,
    pub d: Option<Rational>,
    pub json: bool,
    pub out: Option<PathBuf>,
    pub threads: usize,
}

fn parse_coef(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Invalid(format!("coefficient {s:?} is not P/R with integers"));
    let (p, r) = match s.split_once('/') {
        Some((p, r)) => (
            p.trim().parse::<i64>().map_err(|_| bad())?,
            r.trim().parse::<i64>().map_err(|_| bad())?,
        ),
        None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
    };
    if r == 0 || p == 0 {
        return Err(CliError::Invalid(format!(
            "coefficient {s}: P and R must be nonzero"
        )));
    }
    let (p, r) = if r < 0 { (-p, -r) } else { (p, r) };
    if num_integer::gcd(p, r) != 1 {
        return Err(CliError::Invalid(format!(
            "coefficient {s} is not in lowest terms"
        )));
    }
    Ok((p, r))
}

fn parse_triple(s: &str) -> Result<(i64, i64, i64), CliError> {
    let parts: Vec<i64> = s
        .split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Invalid(format!("triple {s:?} is not B1,B2,B3")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(CliError::Invalid(format!(
            "triple {s:?} needs three entries"
        ))),
    }
}

impl JobSpec {
    /// Validates the options for `command`. Relative graph paths are
    /// resolved against `base` when given.
    pub fn new(command: CommandKind, o: &Options, base: Option<&Path>) -> Result<Self, CliError> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Invalid(format!(
                    "{} needs {what}",
                    command.name()
                )))
            }
        };
        let graphs: Vec<PathBuf> = o
            .graph
            .iter()
            .map(|p| match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.clone(),
            })
            .collect();
        let knot = o.knot.as_deref().map(KnotTag::parse).transpose()?;
        let coef = o.coef.as_deref().map(parse_coef).transpose()?;
        let spinc = match o.spinc.as_deref() {
            None | Some("all") => SpincChoice::All,
            Some(s) => SpincChoice::Index(s.parse().map_err(|_| {
                CliError::Invalid(format!("--spinc takes all or an index, got {s:?}"))
            })?),
        };
        let max_q = match o.max_q.as_deref() {
            None => ri(20),
            Some(s) => parse_rational(s)
                .ok_or_else(|| CliError::Invalid(format!("--max-q {s:?} is not a rational")))?,
        };
        let d = match o.d.as_deref() {
            None => None,
            Some(s) => Some(
                parse_rational(s)
                    .ok_or_else(|| CliError::Invalid(format!("--d {s:?} is not a rational")))?,
            ),
        };
        let triple = o.triple.as_deref().map(parse_triple).transpose()?;
        if o.threads == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        let max_x = o.max_x.unwrap_or(15);
        if max_x < 1 {
            return Err(CliError::Invalid("--max-x must be positive".into()));
        }
        let n = o.n.unwrap_or(4);
        if n < 1 {
            return Err(CliError::Invalid("--n must be positive".into()));
        }
        if o.epsilon.is_some_and(|e| e.abs() != 1) {
            return Err(CliError::Invalid("--epsilon must be 1 or -1".into()));
        }
        if o.epsilon.is_some() != d.is_some() {
            return Err(CliError::Invalid("--epsilon and --d go together".into()));
        }
        match command {
            CommandKind::Closed => need(graphs.len() == 1, "exactly one --graph")?,
            CommandKind::Glue => need(
                graphs.len() == 2,
                "two --graph options (minus side, then plus side)",
            )?,
            CommandKind::Brieskorn => need(triple.is_some(), "--triple")?,
            CommandKind::KnotFk => {
                need(graphs.len() == 1 || knot.is_some(), "--knot or one --graph")?
            }
            CommandKind::TorusFk | CommandKind::Stability => need(
                matches!(knot, Some(KnotTag::Torus { .. })),
                "a torus knot (--knot trefoil or torus:S,T)",
            )?,
            CommandKind::Surgery => {
                need(knot.is_some(), "--knot")?;
                need(coef.is_some(), "--coef")?;
            }
            CommandKind::Jones | CommandKind::Recursion => need(knot.is_some(), "--knot")?,
        }
        if command == CommandKind::Stability
            && matches!(knot, Some(KnotTag::Torus { t, .. }) if t < 0)
        {
            return Err(CliError::Invalid(
                "stability takes T(s,t) with t > 0; the identity is for its mirror".into(),
            ));
        }
        Ok(JobSpec {
            command,
            graphs,
            knot,
            coef,
            spinc,
            max_q,
            max_x,
            triple,
            n,
            pk: o.pk,
            epsilon: o.epsilon,
            d,
            json: o.json,
            out: o.out.clone(),
            threads: o.threads,
        })
    }
}

/// The result of a job in both renderings.
#[derive(Clone, Debug)]
pub struct Document {
    pub json: Value,
    pub text: String,
}

impl Document {
    pub fn render(&self, json: bool) -> String {
        if json {
            let mut s = serde_json::to_string_pretty(&self.json).expect("document serializes");
            s.push('\n');
            s
        } else {
            self.text.clone()
        }
    }
}

fn read_graph(path: &Path) -> Result<PlumbingGraph, CliError> {
    let s = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(PlumbingGraph::parse(&s)?)
}

fn laurent_json(p: &Laurent) -> Value {
    Value::Array(
        p.coeffs()
            .iter()
            .map(|(e, c)| json!({"e": e, "c": rational_string(c)}))
            .collect(),
    )
}

/// Series text with an explicit O(q^B) tail when truncated.
fn series_text(s: &QSeries) -> String {
    if s.is_zero() && s.complete_below().is_none() {
        "0".into()
    } else {
        s.to_string()
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::NotComputable(format!("thread pool: {e}")))
}

pub fn run(spec: &JobSpec) -> Result<Document, CliError> {
    match spec.command {
        CommandKind::Closed => {
            let g = read_graph(&spec.graphs[0])?;
            if g.distinguished().is_some() {
                return Err(CliError::Invalid(
                    "closed takes a graph without distinguished vertex".into(),
                ));
            }
            closed_classes(spec, &g, json!({"command": "closed"}))
        }
        CommandKind::Glue => {
            let minus = read_graph(&spec.graphs[0])?;
            let plus = read_graph(&spec.graphs[1])?;
            let g = standard_glue(&minus, &plus)?;
            closed_classes(
                spec,
                &g,
                json!({"command": "glue", "glued_graph": g.to_json()}),
            )
        }
        CommandKind::Brieskorn => {
            let (a, b, c) = spec.triple.unwrap();
            let z = brieskorn_zhat(a, b, c, &spec.max_q)?;
            Ok(Document {
                json: json!({"command": "brieskorn", "triple": [a, b, c], "max_q": rational_string(&spec.max_q), "series": z.to_json()}),
                text: format!("Z_0(Sigma({a},{b},{c})) = {}\n", series_text(&z)),
            })
        }
        CommandKind::KnotFk => knot_fk(spec),
        CommandKind::TorusFk => {
            let Some(KnotTag::Torus { s, t }) = spec.knot else {
                unreachable!()
            };
            let f = torus_closed_form(s, t, spec.max_x)?;
            Ok(xseries_document("torus-fk", spec, &f))
        }
        CommandKind::Surgery => surgery(spec),
        CommandKind::Jones => jones(spec),
        CommandKind::Recursion => recursion(spec),
        CommandKind::Stability => stability(spec),
    }
}

fn closed_classes(
    spec: &JobSpec,
    g: &PlumbingGraph,
    mut head: Value,
) -> Result<Document, CliError> {
    if !g.is_weakly_negative_definite(false)? {
        return Err(CliError::NotComputable(
            "NotWeaklyNegativeDefinite: graph is not weakly negative definite".into(),
        ));
    }
    let set = SpincSet::new(g)?;
    let orbits = set.orbit_reps();
    let chosen: Vec<(usize, usize)> = match spec.spinc {
        SpincChoice::All => orbits.iter().copied().enumerate().collect(),
        SpincChoice::Index(i) => {
            let &k = orbits.get(i).ok_or_else(|| {
                CliError::Invalid(format!(
                    "--spinc {i} out of range; there are {} classes mod conjugation",
                    orbits.len()
                ))
            })?;
            vec![(i, k)]
        }
    };
    let results: Vec<Result<QSeries, CliError>> = pool(spec.threads)?.install(|| {
        chosen
            .par_iter()
            .map(|&(_, k)| zhat_closed(g, set.rep(k), &spec.max_q).map_err(CliError::from))
            .collect()
    });
    let mut classes = Vec::new();
    let mut text = String::new();
    writeln!(
        text,
        "|H_1| = {}, {} classes mod conjugation",
        abs_det(g),
        orbits.len()
    )
    .unwrap();
    for (&(i, k), z) in chosen.iter().zip(results) {
        let z = z?;
        let a = set.rep(k);
        classes.push(json!({"index": i, "a": a, "self_conjugate": set.is_self_conjugate(k), "series": z.to_json()}));
        writeln!(text, "[{i}] a = {a:?}: {}", series_text(&z)).unwrap();
    }
    let obj = head.as_object_mut().unwrap();
    obj.insert("graph_det".into(), json!(abs_det(g)));
    obj.insert("max_q".into(), json!(rational_string(&spec.max_q)));
    obj.insert("classes".into(), Value::Array(classes));
    Ok(Document { json: head, text })
}

fn torus_closed_form(s: i64, t: i64, window: i64) -> Result<XSeries, CliError> {
    if t > 0 {
        Ok(knotinv::torus_fk(s, t, window)?)
    } else {
        Ok(knotinv::mirror_series(&knotinv::torus_fk(s, -t, window)?)?)
    }
}

fn xseries_document(command: &str, spec: &JobSpec, f: &XSeries) -> Document {
    let label = spec.knot.as_ref().map(KnotTag::label);
    Document {
        json: json!({"command": command, "knot": label, "max_x": spec.max_x, "series": f.to_json()}),
        text: f.to_string(),
    }
}

fn knot_fk(spec: &JobSpec) -> Result<Document, CliError> {
    let f = match (&spec.knot, spec.graphs.first()) {
        (_, Some(path)) => {
            let g = read_graph(path)?;
            knotinv::fk_plumbed(&g, Some(spec.max_x), &spec.max_q)?
        }
        (Some(KnotTag::Unknot), None) => knotinv::fk_plumbed(
            &PlumbingGraph::chain(&[0], Some(0)),
            Some(spec.max_x),
            &spec.max_q,
        )?,
        (Some(KnotTag::Torus { s, t }), None) if *t > 0 => {
            knotinv::fk_plumbed(&torus_knot_graph(*s, *t)?, Some(spec.max_x), &spec.max_q)?
        }
        // the mirror has no negative definite plumbed complement
        (Some(KnotTag::Torus { s, t }), None) => {
            torus_closed_form(*s, *t, spec.max_x)?.map_slices(|q| q.clone().truncate(&spec.max_q))
        }
        (Some(KnotTag::Fig8), None) => ajrec::fk_extend(Knot::Fig8, spec.max_x)?
            .map_slices(|q| q.clone().truncate(&spec.max_q)),
        (None, None) => unreachable!("validated"),
    };
    Ok(xseries_document("knot-fk", spec, &f))
}

/// Solid torus labels a ∈ ℤ + (r+1)/2 modulo p and a ↔ −a.
fn surgery_labels(p: i64, r: i64) -> Vec<Rational> {
    let n = ri(p.abs());
    let base = if r % 2 == 1 { ri(0) } else { rat(1, 2) };
    let reduce = |a: &Rational| a - &n * (a / &n).floor();
    let mut out: Vec<Rational> = Vec::new();
    for k in 0..p.abs() {
        let a = &base + ri(k);
        let conj = reduce(&-&a);
        if !out.iter().any(|b| b == &a || b == &conj) {
            out.push(a);
        }
    }
    out
}

fn surgery(spec: &JobSpec) -> Result<Document, CliError> {
    let knot = spec.knot.clone().unwrap();
    let (p, r) = spec.coef.unwrap();
    let mode = match (&knot, spec.epsilon) {
        (_, Some(e)) => SurgeryMode::Conjectural {
            epsilon: Some(e),
            d: spec.d.clone(),
        },
        (KnotTag::Torus { s, t }, None) if *t > 0 => {
            SurgeryMode::PlumbedTheorem(torus_knot_graph(*s, *t)?)
        }
        _ => SurgeryMode::Conjectural {
            epsilon: None,
            d: None,
        },
    };
    // the figure-eight extension is reused across window doublings
    let fig8: RefCell<Option<XSeries>> = RefCell::new(None);
    let source = |w: i64| -> Result<XSeries, KnotError> {
        match &knot {
            KnotTag::Unknot => {
                knotinv::fk_plumbed(&PlumbingGraph::chain(&[0], Some(0)), Some(w), &ri(0))
            }
            KnotTag::Torus { s, t } if *t > 0 => knotinv::torus_fk(*s, *t, w),
            KnotTag::Torus { s, t } => knotinv::mirror_series(&knotinv::torus_fk(*s, -*t, w)?),
            KnotTag::Fig8 => {
                let mut cache = fig8.borrow_mut();
                if cache
                    .as_ref()
                    .and_then(XSeries::max_m)
                    .is_none_or(|m| m < w)
                {
                    let ext = ajrec::fk_extend(Knot::Fig8, w)
                        .map_err(|e| KnotError::BadInput(e.to_string()))?;
                    *cache = Some(ext);
                }
                Ok(cache.as_ref().unwrap().restrict(w))
            }
        }
    };
    let labels = surgery_labels(p, r);
    let chosen: Vec<(usize, Rational)> = match spec.spinc {
        SpincChoice::All => labels.into_iter().enumerate().collect(),
        SpincChoice::Index(i) => {
            let a = labels.get(i).cloned().ok_or_else(|| {
                CliError::Invalid(format!(
                    "--spinc {i} out of range; there are {} labels mod conjugation",
                    labels.len()
                ))
            })?;
            vec![(i, a)]
        }
    };
    let mut out = Vec::new();
    let mut text = String::new();
    let mut eps_d = None;
    for (i, a) in chosen {
        let plan = SurgeryPlan::new(p, r, a.clone(), mode.clone())?;
        let (eps, d) = plan.epsilon_d()?;
        eps_d = Some((eps, d));
        let z = knotinv::surgery_to_cutoff(source, &plan, &spec.max_q)?;
        out.push(json!({"index": i, "a": rational_string(&a), "series": z.to_json()}));
        writeln!(text, "[{i}] a = {a}: {}", series_text(&z)).unwrap();
    }
    let (eps, d) = eps_d.expect("at least one label");
    Ok(Document {
        json: json!({
            "command": "surgery",
            "knot": knot.label(),
            "coef": format!("{p}/{r}"),
            "epsilon": eps,
            "d": rational_string(&d),
            "max_q": rational_string(&spec.max_q),
            "labels": out,
        }),
        text,
    })
}

fn quantum_integer(n: i64) -> QSeries {
    QSeries::from_terms((0..n).map(|k| (rat(n - 1 - 2 * k, 2), ri(1))), None)
}

fn jones(spec: &JobSpec) -> Result<Document, CliError> {
    let knot = spec.knot.clone().unwrap();
    let n = spec.n;
    let j = match knot {
        KnotTag::Torus { s, t } if !matches!((s, t), (2, 3) | (2, -3)) => {
            let unnormalized = knotinv::torus_jones_unnormalized(s, t, n)?;
            unnormalized.div_exact(&quantum_integer(n))?
        }
        _ => {
            let color =
                u32::try_from(n).map_err(|_| CliError::Invalid(format!("color {n} too large")))?;
            ajrec::jones(knot.ajrec_knot()?, color).to_qseries()
        }
    };
    Ok(Document {
        json: json!({"command": "jones", "knot": knot.label(), "n": n, "polynomial": j.to_json()}),
        text: format!("J_{n}(q) = {}\n", series_text(&j)),
    })
}

fn recursion(spec: &JobSpec) -> Result<Document, CliError> {
    let tag = spec.knot.clone().unwrap();
    let knot = tag.ajrec_knot()?;
    let op = ajrec::ahat_operator(knot)?;
    let rec = ajrec::derive_f_recursion(&op)?;
    let f = ajrec::fk_extend(knot, spec.max_x)?;
    let report = ajrec::verify_annihilation(&op, &f, spec.max_x);
    let mut text = String::new();
    writeln!(text, "operator: {op}").unwrap();
    writeln!(text, "f-recursion, step {}:", rec.step).unwrap();
    text.push_str(&rec.to_string());
    writeln!(
        text,
        "annihilation: {} coefficients checked, {}",
        report.checked.len(),
        if report.is_zero() {
            "all zero"
        } else {
            "NONZERO"
        }
    )
    .unwrap();
    text.push_str(&f.to_string());
    let mut doc = json!({
        "command": "recursion",
        "knot": tag.label(),
        "operator": op.to_string(),
        "step": rec.step,
        "coefficients": rec.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "annihilation": {"checked": report.checked.len(), "zero": report.is_zero()},
        "max_x": spec.max_x,
        "series": f.to_json(),
    });
    if let Some(k) = spec.pk {
        let pk = ajrec::solve_pk(knot, k)?;
        let obj = doc.as_object_mut().unwrap();
        obj.insert("alexander".into(), laurent_json(&pk.alexander));
        obj.insert(
            "pk".into(),
            Value::Array(pk.p.iter().map(laurent_json).collect()),
        );
        writeln!(text, "Delta = {}", pk.alexander).unwrap();
        for (i, p) in pk.p.iter().enumerate() {
            writeln!(text, "P_{i} = {p}").unwrap();
        }
    }
    Ok(Document { json: doc, text })
}

fn stability(spec: &JobSpec) -> Result<Document, CliError> {
    let Some(KnotTag::Torus { s, t }) = spec.knot else {
        unreachable!()
    };
    let mut checks = Vec::new();
    let mut text = String::new();
    for n in 1..=spec.n {
        let holds = knotinv::stability_check(s, t, n)?;
        checks.push(json!({"n": n, "holds": holds}));
        writeln!(text, "n = {n}: {}", if holds { "holds" } else { "FAILS" }).unwrap();
    }
    let (phi, ups) = knotinv::tails(s, t, &spec.max_q)?;
    writeln!(text, "Phi_0 = {}", series_text(&phi)).unwrap();
    writeln!(text, "Upsilon_0 = {}", series_text(&ups)).unwrap();
    Ok(Document {
        json: json!({
            "command": "stability",
            "knot": format!("torus:{s},{t}"),
            "checks": checks,
            "tails": {"phi": phi.to_json(), "upsilon": ups.to_json()},
        }),
        text,
    })
}
