//! Random connected periodic graphs for property tests.

#![allow(dead_code)]

use gapcount_core::graph::{build_graph, EdgeSpec, GraphSpecDocument, PeriodicGraph, VertexSpec};
use proptest::prelude::*;

/// A spanning skeleton (a path through the cell plus one self-orbit edge
/// per axis at the first vertex) keeps every draw connected; extra edges
/// with cell vectors in `{-1, 0, 1}^d` add variety.
pub fn graph_spec(with_q: bool) -> impl Strategy<Value = GraphSpecDocument> {
    (1usize..=2, 1usize..=3).prop_flat_map(move |(dim, nu)| {
        let offsets = proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, dim), nu);
        let qs = proptest::collection::vec(if with_q { -2.0..2.0f64 } else { 0.0..f64::MIN_POSITIVE }, nu);
        let extra = proptest::collection::vec((1..=nu, 1..=nu, proptest::collection::vec(-1i64..=1, dim)), 0..4);
        (Just(dim), Just(nu), offsets, qs, extra).prop_map(move |(dim, nu, offsets, qs, extra)| {
            let vertices = offsets
                .into_iter()
                .zip(qs)
                .enumerate()
                .map(|(i, (offset, q))| VertexSpec {
                    id: i + 1,
                    offset,
                    q: if with_q { q } else { 0.0 },
                })
                .collect();
            let mut edges: Vec<EdgeSpec> = (1..nu)
                .map(|j| EdgeSpec {
                    from: j,
                    to: j + 1,
                    cell: vec![0; dim],
                })
                .collect();
            for axis in 0..dim {
                let mut cell = vec![0; dim];
                cell[axis] = 1;
                edges.push(EdgeSpec { from: 1, to: 1, cell });
            }
            edges.extend(extra.into_iter().map(|(from, to, cell)| EdgeSpec { from, to, cell }));
            GraphSpecDocument { dim, vertices, edges }
        })
    })
}

pub fn graph(with_q: bool) -> impl Strategy<Value = PeriodicGraph> {
    graph_spec(with_q).prop_map(|s| build_graph(&s).expect("skeleton keeps the graph valid"))
}
