//! Newman modularity and greedy agglomerative community detection.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EdgeFilter, RelationGraph};

/// Q = Σ_c (L_c/m − (D_c/2m)²) over unweighted filtered edges, where L_c is
/// the number of edges inside community c and D_c its total degree. Nodes
/// absent from `partition` count as singleton communities. 0 for a graph
/// without edges.
pub fn modularity<'a, S: AsRef<str>>(graph: &'a RelationGraph, filter: EdgeFilter, partition: &'a [Vec<S>]) -> f64 {
    let edges = graph.edges(filter);
    let m = edges.len();
    if m == 0 {
        return 0.0;
    }
    let mut community: HashMap<&str, usize> = HashMap::new();
    for (c, members) in partition.iter().enumerate() {
        for n in members {
            community.insert(n.as_ref(), c);
        }
    }
    let mut next = partition.len();
    let mut id_of = |n: &'a str| -> usize {
        *community.entry(n).or_insert_with(|| {
            next += 1;
            next - 1
        })
    };
    let mut inside: HashMap<usize, u64> = HashMap::new();
    let mut degree: HashMap<usize, u64> = HashMap::new();
    for (a, b) in edges {
        let (ca, cb) = (id_of(a), id_of(b));
        *degree.entry(ca).or_insert(0) += 1;
        *degree.entry(cb).or_insert(0) += 1;
        if ca == cb {
            *inside.entry(ca).or_insert(0) += 1;
        }
    }
    let m = m as f64;
    let mut ids: Vec<usize> = degree.keys().copied().collect();
    ids.sort_unstable();
    ids.iter()
        .map(|c| {
            let l = inside.get(c).copied().unwrap_or(0) as f64;
            let d = degree[c] as f64;
            l / m - (d / (2.0 * m)).powi(2)
        })
        .sum()
}

/// Greedy modularity maximisation: starting from singletons, repeatedly merge
/// the pair of connected communities with the largest positive gain until no
/// merge improves modularity. Ties between equal gains are broken by a
/// seed-derived ranking of the communities, so a fixed seed gives a fixed
/// partition. Returns a partition of every node (isolated nodes stay alone),
/// largest community first.
pub fn detect_communities(graph: &RelationGraph, filter: EdgeFilter, seed: u64) -> Vec<Vec<String>> {
    let adj = graph.adjacency(filter);
    let n = adj.len();
    let m2 = 2 * adj.edge_count() as i128;
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut degree: Vec<i128> = (0..n).map(|i| adj.degree(i) as i128).collect();
    let mut links: Vec<BTreeMap<usize, i128>> = adj
        .neighbors
        .iter()
        .map(|ns| ns.iter().map(|&j| (j, 1)).collect())
        .collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut alive = vec![true; n];

    loop {
        // gain of merging a and b, scaled by 2m²: 2m·l_ab − D_a·D_b
        let mut best: Option<(i128, (usize, usize), usize, usize)> = None;
        for a in (0..n).filter(|&a| alive[a]) {
            for (&b, &l) in links[a].range(a + 1..) {
                let gain = m2 * l - degree[a] * degree[b];
                let tie = (rank[a].min(rank[b]), rank[a].max(rank[b]));
                let better = match &best {
                    None => true,
                    Some((g, t, _, _)) => gain > *g || (gain == *g && tie < *t),
                };
                if better {
                    best = Some((gain, tie, a, b));
                }
            }
        }
        let Some((gain, _, a, b)) = best else { break };
        if gain <= 0 {
            break;
        }
        alive[b] = false;
        degree[a] += degree[b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        let from_b = std::mem::take(&mut links[b]);
        links[a].remove(&b);
        for (k, l) in from_b {
            if k == a {
                continue;
            }
            links[k].remove(&b);
            *links[k].entry(a).or_insert(0) += l;
            *links[a].entry(k).or_insert(0) += l;
        }
    }

    let mut out: Vec<Vec<String>> = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|mut m| {
            m.sort_unstable();
            m.into_iter().map(|i| adj.names[i].clone()).collect()
        })
        .collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    out
}
