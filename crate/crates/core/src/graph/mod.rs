//! Company relation graph and the statistics computed over it.
//!
//! Nodes are companies. Two undirected edge kinds connect them: `embed`
//! (a site's company loads content from a third-party company) and `sync`
//! (two companies exchange a user ID). Statistics default to the sync edges.

mod community;
mod export;
mod metrics;
mod spectral;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::company::CompanyDb;
use crate::log_model::RequestRecord;
use crate::sync::SyncEvent;

pub use community::{detect_communities, modularity};
pub use export::{component_changes_csv, graph_metrics_csv, to_dot, GraphDocument, GraphEdge, MeasurementStats};
pub use metrics::{
    average_clustering, classify_nodes, graph_stats, pagerank, path_lengths, percent_change, round_half_up, GraphStats,
    NodeClassification, NodeLabel, PageRankParams, PathLengths, StatsParams,
};
pub use spectral::{algebraic_connectivity, laplacian_spectrum, SpectralParams, DEFAULT_DENSE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Embed,
    Sync,
}

/// Which edges an analysis runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeFilter {
    #[default]
    Sync,
    Embed,
    Both,
}

impl EdgeFilter {
    fn admits(self, kind: EdgeKind) -> bool {
        matches!(
            (self, kind),
            (EdgeFilter::Both, _) | (EdgeFilter::Sync, EdgeKind::Sync) | (EdgeFilter::Embed, EdgeKind::Embed)
        )
    }
}

/// An unordered company pair, stored with the smaller name first.
pub type Pair = (String, String);

fn pair(a: &str, b: &str) -> Pair {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelationGraph {
    pub measurement_id: String,
    pub nodes: BTreeSet<String>,
    /// Weight: distinct (profile, ID value) observations.
    pub sync_edges: BTreeMap<Pair, u64>,
    /// Weight: distinct profiles observing the embed.
    pub embed_edges: BTreeMap<Pair, u64>,
}

/// One site company loading content from a different company.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmbedObservation {
    pub site_company: String,
    pub third_party_company: String,
    pub profile_id: String,
}

/// Embed observations of `requests` plus every company seen at all (request
/// hosts and top-level sites).
pub fn collect_embeds(requests: &[RequestRecord], db: &CompanyDb) -> (Vec<EmbedObservation>, BTreeSet<String>) {
    let mut cache: HashMap<&str, String> = HashMap::new();
    let mut observations = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for r in requests {
        let host = cache
            .entry(&r.url.host)
            .or_insert_with(|| db.resolve(&r.url.host))
            .clone();
        let site = cache
            .entry(&r.top_level_site)
            .or_insert_with(|| db.resolve(&r.top_level_site))
            .clone();
        if host != site {
            observations.insert(EmbedObservation {
                site_company: site.clone(),
                third_party_company: host.clone(),
                profile_id: r.profile_id.clone(),
            });
        }
        seen.insert(host);
        seen.insert(site);
    }
    (observations.into_iter().collect(), seen)
}

/// Builds the graph of one measurement. `extra_nodes` are companies observed
/// without any edge; they become isolated nodes.
pub fn build_graph<'a>(
    measurement_id: &str,
    events: &[SyncEvent],
    embeds: &[EmbedObservation],
    extra_nodes: impl IntoIterator<Item = &'a String>,
) -> RelationGraph {
    let mut nodes: BTreeSet<String> = extra_nodes.into_iter().cloned().collect();
    let mut sync: BTreeMap<Pair, BTreeSet<(&str, &str)>> = BTreeMap::new();
    for e in events {
        nodes.insert(e.sender_company.clone());
        nodes.insert(e.receiver_company.clone());
        if e.sender_company == e.receiver_company {
            continue;
        }
        sync.entry(pair(&e.sender_company, &e.receiver_company))
            .or_default()
            .insert((&e.profile_id, &e.id.value));
    }
    let mut embed: BTreeMap<Pair, BTreeSet<&str>> = BTreeMap::new();
    for o in embeds {
        nodes.insert(o.site_company.clone());
        nodes.insert(o.third_party_company.clone());
        if o.site_company == o.third_party_company {
            continue;
        }
        embed
            .entry(pair(&o.site_company, &o.third_party_company))
            .or_default()
            .insert(&o.profile_id);
    }
    RelationGraph {
        measurement_id: measurement_id.to_string(),
        nodes,
        sync_edges: sync.into_iter().map(|(k, v)| (k, v.len() as u64)).collect(),
        embed_edges: embed.into_iter().map(|(k, v)| (k, v.len() as u64)).collect(),
    }
}

impl RelationGraph {
    /// A graph over `nodes` with unit-weight sync edges.
    pub fn from_sync_edges<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> RelationGraph {
        let mut g = RelationGraph::default();
        g.nodes.extend(nodes.iter().map(|n| n.as_ref().to_string()));
        for (a, b) in edges {
            g.add_edge(EdgeKind::Sync, a.as_ref(), b.as_ref(), 1);
        }
        g
    }

    /// Adds an edge (and its endpoints). Self-loops are ignored; weights of
    /// repeated edges accumulate.
    pub fn add_edge(&mut self, kind: EdgeKind, a: &str, b: &str, weight: u64) {
        self.nodes.insert(a.to_string());
        self.nodes.insert(b.to_string());
        if a == b {
            return;
        }
        let edges = match kind {
            EdgeKind::Sync => &mut self.sync_edges,
            EdgeKind::Embed => &mut self.embed_edges,
        };
        *edges.entry(pair(a, b)).or_insert(0) += weight;
    }

    /// Distinct unordered pairs admitted by `filter`.
    pub fn edges(&self, filter: EdgeFilter) -> BTreeSet<&Pair> {
        let mut out = BTreeSet::new();
        if filter.admits(EdgeKind::Sync) {
            out.extend(self.sync_edges.keys());
        }
        if filter.admits(EdgeKind::Embed) {
            out.extend(self.embed_edges.keys());
        }
        out
    }

    pub fn adjacency(&self, filter: EdgeFilter) -> Adjacency {
        Adjacency::new(&self.nodes, self.edges(filter))
    }
}

/// Index-based unweighted adjacency lists over every node of a graph, in
/// sorted node order.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub names: Vec<String>,
    pub neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    fn new<'a>(nodes: &BTreeSet<String>, edges: impl IntoIterator<Item = &'a Pair>) -> Adjacency {
        let names: Vec<String> = nodes.iter().cloned().collect();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut neighbors = vec![Vec::new(); names.len()];
        for (a, b) in edges {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        Adjacency { names, neighbors }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components as sorted index lists, including singletons,
    /// ordered by size descending then by first member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.len()];
        let mut comps = Vec::new();
        for start in 0..self.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            label[start] = id;
            let mut members = vec![start];
            let mut next = 0;
            while next < members.len() {
                let v = members[next];
                next += 1;
                for &w in &self.neighbors[v] {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        members.push(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        comps
    }

    /// The subgraph induced by `members` (given in ascending order).
    pub fn induced(&self, members: &[usize]) -> Adjacency {
        let local: HashMap<usize, usize> = members.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        Adjacency {
            names: members.iter().map(|&g| self.names[g].clone()).collect(),
            neighbors: members
                .iter()
                .map(|&g| self.neighbors[g].iter().filter_map(|w| local.get(w).copied()).collect())
                .collect(),
        }
    }

    fn names_of(&self, members: &[usize]) -> Vec<String> {
        members.iter().map(|&i| self.names[i].clone()).collect()
    }
}

/// Connected components over the filtered edges, excluding isolated nodes,
/// largest first (ties by name).
pub fn connected_components(graph: &RelationGraph, filter: EdgeFilter) -> Vec<Vec<String>> {
    let adj = graph.adjacency(filter);
    adj.components()
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| adj.names_of(&c))
        .collect()
}

/// Every node in exactly one part: the components plus each isolated node
/// as a singleton.
pub fn component_partition(graph: &RelationGraph, filter: EdgeFilter) -> Vec<Vec<String>> {
    let adj = graph.adjacency(filter);
    adj.components().into_iter().map(|c| adj.names_of(&c)).collect()
}
