//! Plumbing trees, Neumann moves, definiteness checks, continued fractions
//! and builders for Seifert stars, torus knot complements and solid tori.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{det, inertia, inverse, ExactError, IntMatrix, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph is not a tree")]
    NotATree,
    #[error("duplicate vertex id {0}")]
    DuplicateId(u32),
    #[error("edge refers to unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("distinguished vertex {0} does not exist")]
    BadDistinguished(u32),
    #[error("graph has no distinguished vertex")]
    MissingDistinguished,
    #[error("move not applicable: {0}")]
    NotApplicable(String),
    #[error("continued fraction style cannot represent {0}/{1}")]
    NotRepresentable(i64, i64),
    #[error("bad Seifert fraction {0}/{1}")]
    BadFraction(i64, i64),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: u32,
    pub weight: i64,
}

/// Weighted tree with an optional distinguished vertex. Vertex order fixes
/// the row order of the framing matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlumbingGraph {
    vertices: Vec<Vertex>,
    edges: BTreeSet<(u32, u32)>,
    distinguished: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<Vertex>,
    edges: Vec<[u32; 2]>,
    #[serde(default)]
    distinguished: Option<u32>,
}

fn norm_edge(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

impl PlumbingGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(u32, u32)>, distinguished: Option<u32>) -> Result<Self, GraphError> {
        let mut ids = BTreeSet::new();
        for v in &vertices {
            if !ids.insert(v.id) {
                return Err(GraphError::DuplicateId(v.id));
            }
        }
        let mut set = BTreeSet::new();
        for &(a, b) in &edges {
            for x in [a, b] {
                if !ids.contains(&x) {
                    return Err(GraphError::UnknownVertex(x));
                }
            }
            if a == b || !set.insert(norm_edge(a, b)) {
                return Err(GraphError::NotATree);
            }
        }
        if let Some(d) = distinguished {
            if !ids.contains(&d) {
                return Err(GraphError::BadDistinguished(d));
            }
        }
        let g = PlumbingGraph { vertices, edges: set, distinguished };
        if !g.is_tree() {
            return Err(GraphError::NotATree);
        }
        Ok(g)
    }

    /// Linear chain with ids 0..n in order.
    pub fn chain(weights: &[i64], distinguished: Option<usize>) -> Self {
        let vertices = weights.iter().enumerate().map(|(i, &w)| Vertex { id: i as u32, weight: w }).collect();
        let edges = (1..weights.len()).map(|i| (i as u32 - 1, i as u32)).collect();
        PlumbingGraph::new(vertices, edges, distinguished.map(|d| d as u32)).expect("chain is a tree")
    }

    fn is_tree(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 || self.edges.len() + 1 != n {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.vertices[0].id];
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(adj[&v].iter().copied());
            }
        }
        seen.len() == n
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn distinguished(&self) -> Option<u32> {
        self.distinguished
    }

    pub fn with_distinguished(&self, d: Option<u32>) -> Result<Self, GraphError> {
        PlumbingGraph::new(self.vertices.clone(), self.edges.iter().copied().collect(), d)
    }

    /// Row index of a vertex id.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn distinguished_index(&self) -> Option<usize> {
        self.distinguished.and_then(|d| self.index_of(d))
    }

    pub fn weight(&self, id: u32) -> Option<i64> {
        self.vertices.iter().find(|v| v.id == id).map(|v| v.weight)
    }

    pub fn adjacency(&self) -> BTreeMap<u32, Vec<u32>> {
        let mut adj: BTreeMap<u32, Vec<u32>> = self.vertices.iter().map(|v| (v.id, Vec::new())).collect();
        for &(a, b) in &self.edges {
            adj.get_mut(&a).unwrap().push(b);
            adj.get_mut(&b).unwrap().push(a);
        }
        adj
    }

    pub fn degree(&self, id: u32) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == id || b == id).count()
    }

    pub fn neighbors(&self, id: u32) -> Vec<u32> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == id { Some(b) } else if b == id { Some(a) } else { None })
            .collect()
    }

    pub fn framing_matrix(&self) -> IntMatrix {
        let n = self.vertices.len();
        let mut m = IntMatrix::zeros(n, n);
        for (i, v) in self.vertices.iter().enumerate() {
            m[(i, i)] = v.weight.into();
        }
        for &(a, b) in &self.edges {
            let (i, j) = (self.index_of(a).unwrap(), self.index_of(b).unwrap());
            m[(i, j)] = 1.into();
            m[(j, i)] = 1.into();
        }
        m
    }

    pub fn degree_vector(&self) -> Vec<i64> {
        self.vertices.iter().map(|v| self.degree(v.id) as i64).collect()
    }

    pub fn weight_sum(&self) -> i64 {
        self.vertices.iter().map(|v| v.weight).sum()
    }

    pub fn is_negative_definite(&self) -> bool {
        let i = inertia(&self.framing_matrix());
        i.n_neg == self.len()
    }

    /// M invertible and M⁻¹ negative definite on the span of the vertices of
    /// degree ≥ 3 (excluding the distinguished vertex when asked).
    pub fn is_weakly_negative_definite(&self, treat_distinguished: bool) -> Result<bool, GraphError> {
        let minv = inverse(&self.framing_matrix())?;
        let idx = self.high_degree_indices(treat_distinguished);
        Ok(restricted_negative_definite(&minv, &idx))
    }

    pub fn high_degree_indices(&self, treat_distinguished: bool) -> Vec<usize> {
        let d = if treat_distinguished { self.distinguished } else { None };
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| self.degree(v.id) >= 3 && Some(v.id) != d)
            .map(|(i, _)| i)
            .collect()
    }

    /// Graph with the distinguished vertex removed (the closed-up manifold).
    pub fn closed_up(&self) -> Result<PlumbingGraph, GraphError> {
        let d = self.distinguished.ok_or(GraphError::MissingDistinguished)?;
        let vertices = self.vertices.iter().copied().filter(|v| v.id != d).collect();
        let edges = self.edges.iter().copied().filter(|&(a, b)| a != d && b != d).collect();
        PlumbingGraph::new(vertices, edges, None)
    }

    fn next_id(&self) -> u32 {
        self.vertices.iter().map(|v| v.id).max().map_or(0, |m| m + 1)
    }

    fn set_weight(&mut self, id: u32, w: i64) {
        if let Some(v) = self.vertices.iter_mut().find(|v| v.id == id) {
            v.weight = w;
        }
    }

    fn add_weight(&mut self, id: u32, dw: i64) {
        let w = self.weight(id).unwrap();
        self.set_weight(id, w + dw);
    }

    fn remove_vertex(&mut self, id: u32) {
        self.vertices.retain(|v| v.id != id);
        self.edges.retain(|&(a, b)| a != id && b != id);
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GraphJson {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            distinguished: self.distinguished,
        })
        .expect("graph serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let g: GraphJson = serde_json::from_str(s).map_err(|e| GraphError::Parse(e.to_string()))?;
        PlumbingGraph::new(g.vertices, g.edges.into_iter().map(|[a, b]| (a, b)).collect(), g.distinguished)
    }

    /// Line format: `v <id> <weight>`, `e <i> <j>`, `d <id>`; `#` starts a comment.
    pub fn from_text(s: &str) -> Result<Self, GraphError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut dist = None;
        for (lineno, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || GraphError::Parse(format!("line {}: {line}", lineno + 1));
            let num = |k: usize| parts.get(k).and_then(|p| p.parse::<i64>().ok()).ok_or_else(bad);
            let id = |k: usize| parts.get(k).and_then(|p| p.parse::<u32>().ok()).ok_or_else(bad);
            match (parts[0], parts.len()) {
                ("v", 3) => vertices.push(Vertex { id: id(1)?, weight: num(2)? }),
                ("e", 3) => edges.push((id(1)?, id(2)?)),
                ("d", 2) => dist = Some(id(1)?),
                _ => return Err(bad()),
            }
        }
        PlumbingGraph::new(vertices, edges, dist)
    }

    /// Accepts either the JSON or the line format.
    pub fn parse(s: &str) -> Result<Self, GraphError> {
        if s.trim_start().starts_with('{') {
            Self::from_json_str(s)
        } else {
            Self::from_text(s)
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("v {} {}\n", v.id, v.weight));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("e {a} {b}\n"));
        }
        if let Some(d) = self.distinguished {
            out.push_str(&format!("d {d}\n"));
        }
        out
    }

    /// Canonical string invariant under relabelling of ids and vertex order.
    pub fn canonical_form(&self) -> String {
        let adj = self.adjacency();
        let encode = |root: u32| -> String { self.encode_rooted(root, None, &adj) };
        self.vertices.iter().map(|v| encode(v.id)).min().unwrap_or_default()
    }

    fn encode_rooted(&self, v: u32, parent: Option<u32>, adj: &BTreeMap<u32, Vec<u32>>) -> String {
        let mut kids: Vec<String> =
            adj[&v].iter().filter(|&&c| Some(c) != parent).map(|&c| self.encode_rooted(c, Some(v), adj)).collect();
        kids.sort();
        let mark = if Some(v) == self.distinguished { "*" } else { "" };
        format!("({}{mark}{})", self.weight(v).unwrap(), kids.concat())
    }

    pub fn is_isomorphic(&self, other: &PlumbingGraph) -> bool {
        self.len() == other.len() && self.canonical_form() == other.canonical_form()
    }
}

impl fmt::Display for PlumbingGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// `x^T A x < 0` for all nonzero x supported on `idx`.
pub fn restricted_negative_definite(minv: &RatMatrix, idx: &[usize]) -> bool {
    if idx.is_empty() {
        return true;
    }
    let sub = minv.principal(idx);
    crate::exactnum::inertia_rat(&sub).n_neg == idx.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    /// ±1 vertex inserted on an edge.
    AMinus,
    APlus,
    /// ±1 leaf.
    BMinus,
    BPlus,
    /// 0-weight vertex splitting a vertex in two.
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    BlowUp,
    BlowDown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveLocation {
    Edge(u32, u32),
    Vertex(u32),
    /// Move (c) blow-up: split `vertex` into a piece of weight `left_weight`
    /// keeping the neighbors not listed in `right`, a 0 vertex, and a piece
    /// carrying the listed neighbors.
    Split { vertex: u32, left_weight: i64, right: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeumannMove {
    pub kind: MoveKind,
    pub direction: Direction,
    pub location: MoveLocation,
}

fn kind_sign(kind: MoveKind) -> i64 {
    match kind {
        MoveKind::AMinus | MoveKind::BMinus => -1,
        MoveKind::APlus | MoveKind::BPlus => 1,
        MoveKind::C => 0,
    }
}

/// Applies a Neumann move. Blow-ups with sign ε add an ε-weighted vertex and
/// shift the weights of its neighbors by ε.
pub fn apply_neumann(g: &PlumbingGraph, mv: &NeumannMove) -> Result<PlumbingGraph, GraphError> {
    let na = |m: &str| GraphError::NotApplicable(m.to_string());
    let mut h = g.clone();
    let eps = kind_sign(mv.kind);
    match (mv.kind, mv.direction, &mv.location) {
        (MoveKind::AMinus | MoveKind::APlus, Direction::BlowUp, &MoveLocation::Edge(a, b)) => {
            if !g.edges.contains(&norm_edge(a, b)) {
                return Err(na("no such edge"));
            }
            let x = g.next_id();
            h.edges.remove(&norm_edge(a, b));
            h.vertices.push(Vertex { id: x, weight: eps });
            h.edges.insert(norm_edge(a, x));
            h.edges.insert(norm_edge(x, b));
            h.add_weight(a, eps);
            h.add_weight(b, eps);
        }
        (MoveKind::AMinus | MoveKind::APlus, Direction::BlowDown, &MoveLocation::Vertex(x)) => {
            if g.weight(x) != Some(eps) || g.degree(x) != 2 || g.distinguished == Some(x) {
                return Err(na("A blow-down needs a non-distinguished degree-2 vertex of weight ±1"));
            }
            let nb = g.neighbors(x);
            h.remove_vertex(x);
            h.edges.insert(norm_edge(nb[0], nb[1]));
            h.add_weight(nb[0], -eps);
            h.add_weight(nb[1], -eps);
        }
        (MoveKind::BMinus | MoveKind::BPlus, Direction::BlowUp, &MoveLocation::Vertex(v)) => {
            if g.weight(v).is_none() {
                return Err(na("no such vertex"));
            }
            let x = g.next_id();
            h.vertices.push(Vertex { id: x, weight: eps });
            h.edges.insert(norm_edge(v, x));
            h.add_weight(v, eps);
        }
        (MoveKind::BMinus | MoveKind::BPlus, Direction::BlowDown, &MoveLocation::Vertex(x)) => {
            if g.weight(x) != Some(eps) || g.degree(x) != 1 || g.distinguished == Some(x) {
                return Err(na("B blow-down needs a non-distinguished leaf of weight ±1"));
            }
            let v = g.neighbors(x)[0];
            h.remove_vertex(x);
            h.add_weight(v, -eps);
        }
        (MoveKind::C, Direction::BlowUp, MoveLocation::Split { vertex, left_weight, right }) => {
            let v = *vertex;
            let w = g.weight(v).ok_or_else(|| na("no such vertex"))?;
            if g.distinguished == Some(v) {
                return Err(na("cannot split the distinguished vertex"));
            }
            let nb = g.neighbors(v);
            if right.iter().any(|r| !nb.contains(r)) {
                return Err(na("split lists a non-neighbor"));
            }
            let zero = g.next_id();
            let v2 = zero + 1;
            h.set_weight(v, *left_weight);
            h.vertices.push(Vertex { id: zero, weight: 0 });
            h.vertices.push(Vertex { id: v2, weight: w - left_weight });
            for &r in right {
                h.edges.remove(&norm_edge(v, r));
                h.edges.insert(norm_edge(v2, r));
            }
            h.edges.insert(norm_edge(v, zero));
            h.edges.insert(norm_edge(zero, v2));
        }
        (MoveKind::C, Direction::BlowDown, &MoveLocation::Vertex(x)) => {
            if g.weight(x) != Some(0) || g.degree(x) != 2 || g.distinguished == Some(x) {
                return Err(na("C blow-down needs a non-distinguished degree-2 vertex of weight 0"));
            }
            let nb = g.neighbors(x);
            let (u, v) = (nb[0], nb[1]);
            if g.distinguished == Some(v) || g.distinguished == Some(u) {
                return Err(na("cannot absorb the distinguished vertex"));
            }
            let wv = g.weight(v).unwrap();
            let moved: Vec<u32> = g.neighbors(v).into_iter().filter(|&y| y != x).collect();
            h.remove_vertex(x);
            h.remove_vertex(v);
            for y in moved {
                h.edges.insert(norm_edge(u, y));
            }
            h.add_weight(u, wv);
        }
        _ => return Err(na("location does not match move kind")),
    }
    PlumbingGraph::new(h.vertices, h.edges.into_iter().collect(), h.distinguished)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfStyle {
    Any,
    AllLeMinus2,
}

/// k₁..k_s with p/r = k₁ − 1/(k₂ − 1/(… − 1/k_s)), using floor steps so every
/// entry after the first is ≤ −2.
pub fn continued_fraction(p: i64, r: i64, style: CfStyle) -> Result<Vec<i64>, GraphError> {
    if r <= 0 || p == 0 || p.gcd(&r) != 1 {
        return Err(GraphError::BadInput(format!("continued fraction of {p}/{r}")));
    }
    let (mut num, mut den) = (p, r);
    let mut out = Vec::new();
    loop {
        let k = Integer::div_floor(&num, &den);
        out.push(k);
        let rem = num - k * den;
        if rem == 0 {
            break;
        }
        // num/den = k − 1/x with x = −den/rem
        let (n2, d2) = (-den, rem);
        num = n2;
        den = d2;
    }
    if style == CfStyle::AllLeMinus2 && out.iter().any(|&k| k > -2) {
        return Err(GraphError::NotRepresentable(p, r));
    }
    Ok(out)
}

/// Evaluates k₁ − 1/(k₂ − …) as a reduced fraction (num, den) with den ≥ 0.
pub fn evaluate_continued_fraction(ks: &[i64]) -> (i64, i64) {
    let (mut num, mut den) = (1i64, 0i64);
    for &k in ks.iter().rev() {
        // k − 1/(num/den) = (k·num − den)/num
        let n2 = k * num - den;
        den = num;
        num = n2;
    }
    let g = num.gcd(&den).max(1);
    let (mut n, mut d) = (num / g, den / g);
    if d < 0 {
        n = -n;
        d = -d;
    }
    (n, d)
}

/// Star for M(b; a₁/b₁, …): central weight b, arm i carries −k from the
/// expansion of b_i/a_i with all k ≥ 2.
pub fn seifert_graph(b: i64, fractions: &[(i64, i64)]) -> Result<PlumbingGraph, GraphError> {
    let mut vertices = vec![Vertex { id: 0, weight: b }];
    let mut edges = Vec::new();
    let mut next = 1u32;
    for &(a, bb) in fractions {
        if !(0 < a && a < bb) || a.gcd(&bb) != 1 {
            return Err(GraphError::BadFraction(a, bb));
        }
        let ks = continued_fraction(-bb, a, CfStyle::AllLeMinus2)?;
        let mut prev = 0u32;
        for k in ks {
            vertices.push(Vertex { id: next, weight: k });
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
    }
    PlumbingGraph::new(vertices, edges, None)
}

fn inverse_mod(a: i64, m: i64) -> i64 {
    let e = a.extended_gcd(&m);
    e.x.rem_euclid(m)
}

/// Seifert-framed complement of T(s,t): central −1, legs for −t/t′ and
/// −s/s′ (s t′ ≡ −1 mod t, t s′ ≡ −1 mod s), distinguished leaf −st.
pub fn torus_knot_graph(s: i64, t: i64) -> Result<PlumbingGraph, GraphError> {
    if !(2 <= s && s < t) || s.gcd(&t) != 1 {
        return Err(GraphError::BadInput(format!("torus knot ({s},{t})")));
    }
    let tp = (-inverse_mod(s, t)).rem_euclid(t);
    let sp = (-inverse_mod(t, s)).rem_euclid(s);
    let leg_t = continued_fraction(-t, tp, CfStyle::AllLeMinus2)?;
    let leg_s = continued_fraction(-s, sp, CfStyle::AllLeMinus2)?;
    let mut vertices = vec![Vertex { id: 0, weight: -1 }];
    let mut edges = Vec::new();
    let mut next = 1u32;
    for leg in [leg_t, leg_s] {
        let mut prev = 0;
        for k in leg {
            vertices.push(Vertex { id: next, weight: k });
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
    }
    vertices.push(Vertex { id: next, weight: -s * t });
    edges.push((0, next));
    PlumbingGraph::new(vertices, edges, Some(next))
}

/// Linear chain k₁..k_s for p/r with the first vertex distinguished.
pub fn solid_torus_graph(p: i64, r: i64) -> Result<PlumbingGraph, GraphError> {
    let ks = continued_fraction(p, r, CfStyle::Any)?;
    Ok(PlumbingGraph::chain(&ks, Some(0)))
}

/// Identifies the distinguished vertices and adds their weights. The result
/// keeps the vertices of `minus` in order (the joint at the position of its
/// distinguished vertex) followed by the other vertices of `plus` in order,
/// renumbered after the ids of `minus`.
pub fn standard_glue(minus: &PlumbingGraph, plus: &PlumbingGraph) -> Result<PlumbingGraph, GraphError> {
    let dm = minus.distinguished.ok_or(GraphError::MissingDistinguished)?;
    let dp = plus.distinguished.ok_or(GraphError::MissingDistinguished)?;
    let base = minus.next_id();
    let mut map = BTreeMap::new();
    let mut next = base;
    for v in &plus.vertices {
        if v.id == dp {
            map.insert(v.id, dm);
        } else {
            map.insert(v.id, next);
            next += 1;
        }
    }
    let wp = plus.weight(dp).unwrap();
    let mut vertices: Vec<Vertex> = minus
        .vertices
        .iter()
        .map(|v| if v.id == dm { Vertex { id: v.id, weight: v.weight + wp } } else { *v })
        .collect();
    vertices.extend(plus.vertices.iter().filter(|v| v.id != dp).map(|v| Vertex { id: map[&v.id], weight: v.weight }));
    let mut edges: Vec<(u32, u32)> = minus.edges.iter().copied().collect();
    edges.extend(plus.edges.iter().map(|&(a, b)| (map[&a], map[&b])));
    PlumbingGraph::new(vertices, edges, None)
}

/// |det M| of the framing matrix as an integer.
pub fn abs_det(g: &PlumbingGraph) -> i64 {
    let d = det(&g.framing_matrix());
    num_traits::ToPrimitive::to_i64(&d.to_integer()).expect("determinant fits in i64").abs()
}
