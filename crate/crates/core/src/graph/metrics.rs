//! Component, distance, clustering and centrality statistics, and the
//! direct/indirect partner classification.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::community::{detect_communities, modularity};
use super::spectral::{fiedler_value, SpectralParams};
use super::{Adjacency, EdgeFilter, RelationGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsParams {
    pub filter: EdgeFilter,
    /// Tie-break seed of community detection.
    pub seed: u64,
    pub spectral: SpectralParams,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams {
            filter: EdgeFilter::Sync,
            seed: 0,
            spectral: SpectralParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub isolated_count: usize,
    /// Components with at least two nodes.
    pub component_count: usize,
    pub largest_component_size: usize,
    pub median_component_size: f64,
    /// λ₂ of the largest component.
    pub algebraic_connectivity: f64,
    /// Over the largest component.
    pub diameter: usize,
    pub avg_path_length: f64,
    /// 2|E|/|V| over non-isolated nodes.
    pub mean_degree: f64,
    pub median_degree: f64,
    pub modularity: f64,
    /// Over non-isolated nodes.
    pub avg_clustering_coefficient: f64,
    /// Communities containing at least one non-isolated node.
    pub community_count: usize,
    pub edge_count: usize,
    pub sync_edge_count: usize,
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

pub fn graph_stats(graph: &RelationGraph, params: &StatsParams) -> GraphStats {
    let adj = graph.adjacency(params.filter);
    let components: Vec<Vec<usize>> = adj.components().into_iter().filter(|c| c.len() > 1).collect();
    let active: Vec<usize> = (0..adj.len()).filter(|&i| adj.degree(i) > 0).collect();
    let edge_count = adj.edge_count();

    let (algebraic_connectivity, paths) = match components.first() {
        Some(largest) => {
            let sub = adj.induced(largest);
            (fiedler_value(&sub, &params.spectral), path_lengths(&sub))
        }
        None => (0.0, PathLengths::default()),
    };
    let communities = detect_communities(graph, params.filter, params.seed);
    let degrees: Vec<f64> = active.iter().map(|&i| adj.degree(i) as f64).collect();

    GraphStats {
        node_count: adj.len(),
        isolated_count: adj.len() - active.len(),
        component_count: components.len(),
        largest_component_size: components.first().map_or(0, Vec::len),
        median_component_size: median(components.iter().map(|c| c.len() as f64).collect()),
        algebraic_connectivity,
        diameter: paths.diameter,
        avg_path_length: paths.average,
        mean_degree: if active.is_empty() {
            0.0
        } else {
            2.0 * edge_count as f64 / active.len() as f64
        },
        median_degree: median(degrees),
        modularity: modularity(graph, params.filter, &communities),
        avg_clustering_coefficient: average_clustering(&adj),
        community_count: communities.iter().filter(|c| c.len() > 1).count(),
        edge_count,
        sync_edge_count: graph.sync_edges.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathLengths {
    pub diameter: usize,
    /// Mean shortest-path length over unordered reachable pairs.
    pub average: f64,
}

/// BFS from every node. Unreachable pairs are skipped.
pub fn path_lengths(adj: &Adjacency) -> PathLengths {
    let n = adj.len();
    let mut diameter = 0;
    let mut total: u64 = 0;
    let mut pairs: u64 = 0;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &w in &adj.neighbors[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for &d in dist.iter().skip(s + 1) {
            if d != usize::MAX {
                diameter = diameter.max(d);
                total += d as u64;
                pairs += 1;
            }
        }
    }
    PathLengths {
        diameter,
        average: if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 },
    }
}

fn local_clustering(adj: &Adjacency, v: usize) -> f64 {
    let ns = &adj.neighbors[v];
    let k = ns.len();
    if k < 2 {
        return 0.0;
    }
    let mut closed = 0usize;
    for (i, &a) in ns.iter().enumerate() {
        for &b in &ns[i + 1..] {
            if adj.neighbors[a].binary_search(&b).is_ok() {
                closed += 1;
            }
        }
    }
    2.0 * closed as f64 / (k * (k - 1)) as f64
}

/// Mean local clustering coefficient over nodes with at least one edge.
pub fn average_clustering(adj: &Adjacency) -> f64 {
    let active: Vec<usize> = (0..adj.len()).filter(|&i| adj.degree(i) > 0).collect();
    if active.is_empty() {
        return 0.0;
    }
    active.iter().map(|&v| local_clustering(adj, v)).sum::<f64>() / active.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    /// L1 change between iterations at which to stop.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

/// Power iteration with every undirected edge followed both ways. The rank of
/// nodes without edges is spread uniformly.
pub fn pagerank(graph: &RelationGraph, filter: EdgeFilter, params: &PageRankParams) -> BTreeMap<String, f64> {
    let adj = graph.adjacency(filter);
    let n = adj.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    for _ in 0..params.max_iterations {
        let dangling: f64 = (0..n).filter(|&i| adj.degree(i) == 0).map(|i| rank[i]).sum();
        let base = (1.0 - params.damping) / nf + params.damping * dangling / nf;
        let mut next = vec![base; n];
        for (v, ns) in adj.neighbors.iter().enumerate() {
            if ns.is_empty() {
                continue;
            }
            let share = params.damping * rank[v] / ns.len() as f64;
            for &w in ns {
                next[w] += share;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if change < params.tolerance {
            break;
        }
    }
    adj.names.into_iter().zip(rank).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLabel {
    Central,
    Outer,
    Balanced,
    Isolated,
}

impl NodeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Central => "central",
            NodeLabel::Outer => "outer",
            NodeLabel::Balanced => "balanced",
            NodeLabel::Isolated => "isolated",
        }
    }

    /// Labels a node by its direct and indirect partner counts; the 4×
    /// thresholds are inclusive.
    pub fn from_counts(direct: usize, indirect: usize) -> NodeLabel {
        if direct == 0 && indirect == 0 {
            NodeLabel::Isolated
        } else if indirect == 0 {
            NodeLabel::Central
        } else if direct == 0 {
            NodeLabel::Outer
        } else if direct >= 4 * indirect {
            NodeLabel::Central
        } else if indirect >= 4 * direct {
            NodeLabel::Outer
        } else {
            NodeLabel::Balanced
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeClassification {
    pub company: String,
    pub direct_partners: usize,
    pub indirect_partners: usize,
    pub label: NodeLabel,
}

/// Direct partners are sync neighbours; indirect partners are the remaining
/// members of the node's sync component. Sorted by company.
pub fn classify_nodes(graph: &RelationGraph) -> Vec<NodeClassification> {
    let adj = graph.adjacency(EdgeFilter::Sync);
    let mut component_size = vec![1usize; adj.len()];
    for c in adj.components() {
        for &v in &c {
            component_size[v] = c.len();
        }
    }
    (0..adj.len())
        .map(|v| {
            let direct = adj.degree(v);
            let indirect = component_size[v] - direct - 1;
            NodeClassification {
                company: adj.names[v].clone(),
                direct_partners: direct,
                indirect_partners: indirect,
                label: NodeLabel::from_counts(direct, indirect),
            }
        })
        .collect()
}

/// Rounds half-up (towards +∞ at the midpoint) to `decimals` places.
pub fn round_half_up(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale + 0.5 + 1e-9).floor() / scale
}

/// 100·(after − before)/before, rounded half-up to two decimals.
pub fn percent_change(before: f64, after: f64) -> Result<f64> {
    if before == 0.0 {
        return Err(Error::UndefinedChange);
    }
    Ok(round_half_up(100.0 * (after - before) / before, 2))
}
