mod common;

use std::f64::consts::PI;

use gapcount_core::floquet::{
    band_structure, check_edge_regularity, fiber_matrix, find_gaps, BandSampler, GapEdge, RegularityOptions,
};
use gapcount_core::graph::{assemble_truncated, build_graph, EdgeSpec, GraphSpecDocument, PeriodicGraph, VertexSpec};
use gapcount_core::linalg::symmetric_eigenvalues;
use proptest::prelude::*;

fn quasimomentum(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-PI..PI, dim)
}

/// Graphs whose edges all join distinct vertices of the cell.
fn graph_without_self_orbits() -> impl Strategy<Value = PeriodicGraph> {
    (1usize..=2, 2usize..=3).prop_flat_map(|(dim, nu)| {
        let qs = proptest::collection::vec(-2.0..2.0f64, nu);
        let extra = proptest::collection::vec((1..=nu, 1..=nu, proptest::collection::vec(-1i64..=1, dim)), 0..4);
        (Just(dim), Just(nu), qs, extra).prop_map(|(dim, nu, qs, extra)| {
            let vertices = qs
                .into_iter()
                .enumerate()
                .map(|(i, q)| VertexSpec {
                    id: i + 1,
                    offset: vec![i as f64 / nu as f64; dim],
                    q,
                })
                .collect();
            let mut edges: Vec<EdgeSpec> = (1..nu).map(|j| EdgeSpec { from: j, to: j + 1, cell: vec![0; dim] }).collect();
            for axis in 0..dim {
                let mut cell = vec![0; dim];
                cell[axis] = 1;
                edges.push(EdgeSpec { from: 1, to: 2, cell });
            }
            edges.extend(
                extra
                    .into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(from, to, cell)| EdgeSpec { from, to, cell }),
            );
            build_graph(&GraphSpecDocument { dim, vertices, edges }).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fiber_is_hermitian(g in common::graph(true), seed in quasimomentum(2)) {
        let k = &seed[..g.dim()];
        let h = fiber_matrix(&g, k).entries;
        prop_assert!((&h - h.adjoint()).camax() <= 1e-15);
    }

    #[test]
    fn bands_are_even_and_sorted(g in common::graph(true), seed in quasimomentum(2)) {
        let k = &seed[..g.dim()];
        let minus: Vec<f64> = k.iter().map(|x| -x).collect();
        let e = g.energies(k);
        let f = g.energies(&minus);
        for s in 0..e.len() {
            prop_assert!((e[s] - f[s]).abs() <= 1e-12, "{e:?} vs {f:?}");
        }
        prop_assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_is_constant_without_self_orbits(g in graph_without_self_orbits(), seed in quasimomentum(2)) {
        let k = &seed[..g.dim()];
        let trace: f64 = g.energies(k).iter().sum();
        let expected: f64 = g.degrees().iter().zip(g.potential()).map(|(&d, &q)| d as f64 + q).sum();
        prop_assert!((trace - expected).abs() <= 1e-12);
    }

    #[test]
    fn laplacian_bands_are_nonnegative(g in common::graph(false)) {
        let bs = band_structure(&g, 16).unwrap();
        prop_assert!(bs.values.iter().all(|&e| e >= -1e-10));
    }

    #[test]
    fn compressions_stay_in_the_band_range(g in common::graph(true), radius in 0usize..3) {
        let bs = band_structure(&g, 32).unwrap();
        let gaps = find_gaps(&bs);
        let opts = RegularityOptions::default();
        let low = check_edge_regularity(&g, &gaps[0], GapEdge::Right, &opts).unwrap().edge_value;
        let high = check_edge_regularity(&g, gaps.last().unwrap(), GapEdge::Left, &opts).unwrap().edge_value;
        let low = low.min(bs.global_min());
        let high = high.max(bs.global_max());
        let eig = symmetric_eigenvalues(&assemble_truncated(&g, radius).to_dense()).unwrap();
        for e in eig {
            prop_assert!(low - 1e-10 <= e && e <= high + 1e-10, "{e} outside [{low}, {high}]");
        }
    }
}

#[test]
fn lattice_grid_contains_exact_extrema() {
    for d in 1..=3 {
        let bs = band_structure(&PeriodicGraph::lattice(d), 8).unwrap();
        assert_eq!(bs.band_extrema[0], (0.0, 4.0 * d as f64));
    }
}
