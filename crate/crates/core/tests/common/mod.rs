#![allow(dead_code)]

use num_traits::Signed;
use proptest::prelude::*;
use zhat::exactnum::det;
use zhat::plumbing::*;

/// Random tree: vertex i > 0 hangs off parent[i] < i.
pub fn tree(max_len: usize, weights: std::ops::RangeInclusive<i64>) -> impl Strategy<Value = PlumbingGraph> {
    (1..=max_len)
        .prop_flat_map(move |n| {
            (
                prop::collection::vec(weights.clone(), n),
                (1..n.max(2)).map(|i| 0..i).collect::<Vec<_>>(),
            )
        })
        .prop_map(|(w, parents)| {
            let n = w.len();
            let vertices = w.iter().enumerate().map(|(i, &weight)| Vertex { id: i as u32, weight }).collect();
            let edges = (1..n).map(|i| (parents[i - 1] as u32, i as u32)).collect();
            PlumbingGraph::new(vertices, edges, None).unwrap()
        })
}

/// Negative definite tree with |det M| ≤ max_det.
pub fn negative_definite(max_len: usize, max_det: i64) -> impl Strategy<Value = PlumbingGraph> {
    tree(max_len, -4..=-1).prop_filter("negative definite, small det", move |g| {
        g.is_negative_definite() && det(&g.framing_matrix()).abs() <= zhat::exactnum::ri(max_det)
    })
}

pub fn next_id(g: &PlumbingGraph) -> u32 {
    g.vertices().iter().map(|v| v.id).max().map_or(0, |m| m + 1)
}

/// A blow-up picked by `choice` and `pick`, always applicable to a graph
/// without distinguished vertex, with the blow-down that undoes it.
pub fn blow_up(g: &PlumbingGraph, choice: u8, pick: usize, sign: bool) -> Option<(NeumannMove, NeumannMove)> {
    let (a_kind, b_kind) = if sign { (MoveKind::APlus, MoveKind::BPlus) } else { (MoveKind::AMinus, MoveKind::BMinus) };
    let x = next_id(g);
    let vs = g.vertices();
    match choice % 3 {
        0 => {
            let edges: Vec<(u32, u32)> = g.edges().collect();
            if edges.is_empty() {
                return None;
            }
            let (a, b) = edges[pick % edges.len()];
            Some((
                NeumannMove { kind: a_kind, direction: Direction::BlowUp, location: MoveLocation::Edge(a, b) },
                NeumannMove { kind: a_kind, direction: Direction::BlowDown, location: MoveLocation::Vertex(x) },
            ))
        }
        1 => {
            let v = vs[pick % vs.len()].id;
            Some((
                NeumannMove { kind: b_kind, direction: Direction::BlowUp, location: MoveLocation::Vertex(v) },
                NeumannMove { kind: b_kind, direction: Direction::BlowDown, location: MoveLocation::Vertex(x) },
            ))
        }
        _ => {
            let v = vs[pick % vs.len()];
            let nb = g.neighbors(v.id);
            let right: Vec<u32> = nb.iter().enumerate().filter(|(i, _)| (pick >> i) & 1 == 1).map(|(_, &y)| y).collect();
            let left_weight = if sign { -1 } else { v.weight + 1 };
            Some((
                NeumannMove {
                    kind: MoveKind::C,
                    direction: Direction::BlowUp,
                    location: MoveLocation::Split { vertex: v.id, left_weight, right },
                },
                NeumannMove { kind: MoveKind::C, direction: Direction::BlowDown, location: MoveLocation::Vertex(x) },
            ))
        }
    }
}
