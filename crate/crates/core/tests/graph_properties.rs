use std::collections::BTreeSet;

use cookiesync::graph::{
    algebraic_connectivity, classify_nodes, component_partition, detect_communities, graph_stats, laplacian_spectrum,
    modularity, pagerank, EdgeFilter, NodeLabel, PageRankParams, RelationGraph, SpectralParams, StatsParams,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn graph(n: usize, edges: &[(usize, usize)], prefix: &str) -> RelationGraph {
    let names: Vec<String> = (0..n).map(|i| format!("{prefix}{i:02}")).collect();
    let edges: Vec<(String, String)> = edges
        .iter()
        .filter(|(a, b)| a != b)
        .map(|&(a, b)| (names[a].clone(), names[b].clone()))
        .collect();
    RelationGraph::from_sync_edges(&names, &edges)
}

fn random_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..14).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..30)))
}

proptest! {
    #[test]
    fn partition_covers_every_node((n, edges) in random_graph()) {
        let g = graph(n, &edges, "n");
        let parts = component_partition(&g, EdgeFilter::Sync);
        let flat: Vec<&String> = parts.iter().flatten().collect();
        let distinct: BTreeSet<&String> = flat.iter().copied().collect();
        prop_assert_eq!(flat.len(), g.nodes.len());
        prop_assert_eq!(distinct.len(), g.nodes.len());
    }

    #[test]
    fn detected_communities_not_worse_than_one_block((n, edges) in random_graph()) {
        let g = graph(n, &edges, "n");
        prop_assume!(!g.sync_edges.is_empty());
        let parts = detect_communities(&g, EdgeFilter::Sync, 9);
        let whole = vec![g.nodes.iter().cloned().collect::<Vec<_>>()];
        let q = modularity(&g, EdgeFilter::Sync, &parts);
        prop_assert!(q >= modularity(&g, EdgeFilter::Sync, &whole) - 1e-12);
        prop_assert!((-0.5..=1.0).contains(&q));
    }

    #[test]
    fn pagerank_sums_to_one_and_ignores_labels((n, edges) in random_graph()) {
        let params = PageRankParams::default();
        let a = pagerank(&graph(n, &edges, "n"), EdgeFilter::Sync, &params);
        prop_assert!((a.values().sum::<f64>() - 1.0).abs() < 1e-9);
        // reverse the name order
        let b = pagerank(&graph(n, &edges, "z"), EdgeFilter::Sync, &params);
        let relabelled: Vec<(usize, usize)> = edges.iter().map(|&(x, y)| (n - 1 - x, n - 1 - y)).collect();
        let c = pagerank(&graph(n, &relabelled, "n"), EdgeFilter::Sync, &params);
        for i in 0..n {
            let original = a[&format!("n{i:02}")];
            let same_position = b[&format!("z{i:02}")];
            let mirrored = c[&format!("n{:02}", n - 1 - i)];
            prop_assert!((original - same_position).abs() < 1e-9);
            prop_assert!((original - mirrored).abs() < 1e-9);
        }
    }

    #[test]
    fn labels_partition_nodes((n, edges) in random_graph()) {
        let g = graph(n, &edges, "n");
        let classes = classify_nodes(&g);
        prop_assert_eq!(classes.len(), g.nodes.len());
        for c in classes {
            prop_assert_eq!(c.label == NodeLabel::Isolated, c.direct_partners == 0 && c.indirect_partners == 0);
        }
    }

    #[test]
    fn distances_ordered((n, edges) in random_graph()) {
        let s = graph_stats(&graph(n, &edges, "n"), &StatsParams::default());
        if s.largest_component_size >= 2 {
            prop_assert!(s.diameter as f64 >= s.avg_path_length - 1e-12);
            prop_assert!(s.avg_path_length >= 1.0);
            prop_assert!(s.algebraic_connectivity > 0.0);
        } else {
            prop_assert_eq!(s.algebraic_connectivity, 0.0);
        }
    }

    #[test]
    fn laplacian_has_zero_eigenvalue((n, edges) in random_graph()) {
        let g = graph(n, &edges, "n");
        let spectrum = laplacian_spectrum(&g.adjacency(EdgeFilter::Sync));
        prop_assert!(spectrum[0].abs() < 1e-9);
        prop_assert!(spectrum.iter().all(|&x| x > -1e-9));
    }
}

#[test]
fn pagerank_matches_linear_solve_on_star() {
    let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], "n");
    let pr = pagerank(&g, EdgeFilter::Sync, &PageRankParams::default());
    // (I − d·P) r = (1 − d)/n · 1 with P the column-stochastic transition matrix
    let d = 0.85;
    let n = 5;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for leaf in 1..n {
        p[(0, leaf)] = 1.0;
        p[(leaf, 0)] = 0.25;
    }
    let a = DMatrix::<f64>::identity(n, n) - p * d;
    let r = a.lu().solve(&DVector::from_element(n, (1.0 - d) / n as f64)).unwrap();
    for i in 0..n {
        assert!((pr[&format!("n{i:02}")] - r[i]).abs() < 1e-9);
    }
    assert!(r[0] > r[1]);
}

#[test]
fn spectral_small_graphs() {
    let params = SpectralParams::default();
    let cases = [
        (graph(2, &[(0, 1)], "n"), 2.0),
        (graph(3, &[(0, 1), (1, 2), (0, 2)], "n"), 3.0),
        (graph(3, &[(0, 1), (1, 2)], "n"), 1.0),
    ];
    for (g, expected) in cases {
        let value = algebraic_connectivity(&g, EdgeFilter::Sync, &params);
        assert!((value - expected).abs() < 1e-9);
    }
}

#[test]
fn star_classification() {
    let g = graph(8, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (6, 7)], "n");
    let classes = classify_nodes(&g);
    assert_eq!(classes[0].label, NodeLabel::Central);
    assert!(classes[1..6].iter().all(|c| c.label == NodeLabel::Outer));
    // a lone pair: each side has one partner and nobody else
    assert!(classes[6..].iter().all(|c| c.label == NodeLabel::Central));
}
