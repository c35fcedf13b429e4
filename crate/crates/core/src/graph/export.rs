//! DOT, JSON and CSV renderings of graphs and their statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{percent_change, round_half_up, GraphStats};
use super::{EdgeKind, RelationGraph};
use crate::log_model::Measurement;
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub kind: EdgeKind,
    pub weight: u64,
}

/// JSON form of a [`RelationGraph`] with the measurement it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub format_version: String,
    pub measurement: Measurement,
    pub nodes: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

impl GraphDocument {
    pub fn new(graph: &RelationGraph, measurement: &Measurement) -> GraphDocument {
        let edge = |kind| {
            move |((a, b), w): (&(String, String), &u64)| GraphEdge {
                source: a.clone(),
                target: b.clone(),
                kind,
                weight: *w,
            }
        };
        let mut edges: Vec<GraphEdge> = graph.sync_edges.iter().map(edge(EdgeKind::Sync)).collect();
        edges.extend(graph.embed_edges.iter().map(edge(EdgeKind::Embed)));
        GraphDocument {
            format_version: FORMAT_VERSION.to_string(),
            measurement: measurement.clone(),
            nodes: graph.nodes.iter().cloned().collect(),
            edges,
        }
    }

    pub fn to_graph(&self) -> RelationGraph {
        let mut g = RelationGraph {
            measurement_id: self.measurement.id.clone(),
            nodes: self.nodes.iter().cloned().collect(),
            ..RelationGraph::default()
        };
        for e in &self.edges {
            g.add_edge(e.kind, &e.source, &e.target, e.weight);
        }
        g
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected DOT graph; edges carry `kind` and `weight` attributes.
pub fn to_dot(graph: &RelationGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", dot_quote(&graph.measurement_id));
    for n in &graph.nodes {
        let _ = writeln!(out, "  {};", dot_quote(n));
    }
    for (kind, edges, style) in [
        ("sync", &graph.sync_edges, "solid"),
        ("embed", &graph.embed_edges, "dashed"),
    ] {
        for ((a, b), w) in edges {
            let _ = writeln!(
                out,
                "  {} -- {} [kind={kind}, weight={w}, style={style}];",
                dot_quote(a),
                dot_quote(b)
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Statistics of one measurement's graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStats {
    pub measurement: Measurement,
    pub stats: GraphStats,
}

fn ordered(rows: &[MeasurementStats]) -> Vec<&MeasurementStats> {
    let mut rows: Vec<&MeasurementStats> = rows.iter().collect();
    rows.sort_by_key(|r| r.measurement.ordinal);
    rows
}

fn csv_error(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

fn change_cell(before: f64, after: f64, first: bool) -> String {
    if first {
        return String::new();
    }
    match percent_change(before, after) {
        Ok(p) => format!("{p:+.2}"),
        Err(_) => String::new(),
    }
}

/// Component overview per measurement with percent changes relative to the
/// first measurement (lowest ordinal).
pub fn component_changes_csv(rows: &[MeasurementStats]) -> Result<String> {
    let rows = ordered(rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "week",
        "measurement",
        "components",
        "components_change_pct",
        "largest_component",
        "largest_component_change_pct",
        "algebraic_connectivity",
        "algebraic_connectivity_change_pct",
    ])
    .map_err(csv_error)?;
    let Some(base) = rows.first().map(|r| r.stats.clone()) else {
        return finish(w);
    };
    for (i, r) in rows.iter().enumerate() {
        let s = &r.stats;
        let first = i == 0;
        w.write_record([
            r.measurement.week_label.clone(),
            r.measurement.id.clone(),
            s.component_count.to_string(),
            change_cell(base.component_count as f64, s.component_count as f64, first),
            s.largest_component_size.to_string(),
            change_cell(
                base.largest_component_size as f64,
                s.largest_component_size as f64,
                first,
            ),
            format!("{:.4}", round_half_up(s.algebraic_connectivity, 4)),
            change_cell(
                round_half_up(base.algebraic_connectivity, 4),
                round_half_up(s.algebraic_connectivity, 4),
                first,
            ),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

/// Structural characteristics per measurement (over non-isolated nodes).
pub fn graph_metrics_csv(rows: &[MeasurementStats]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "week",
        "measurement",
        "diameter",
        "mean_degree",
        "median_degree",
        "modularity",
        "avg_clustering_coefficient",
        "avg_path_length",
        "communities",
    ])
    .map_err(csv_error)?;
    for r in ordered(rows) {
        let s = &r.stats;
        w.write_record([
            r.measurement.week_label.clone(),
            r.measurement.id.clone(),
            s.diameter.to_string(),
            format!("{:.3}", s.mean_degree),
            format!("{:.1}", s.median_degree),
            format!("{:.3}", s.modularity),
            format!("{:.3}", s.avg_clustering_coefficient),
            format!("{:.3}", s.avg_path_length),
            s.community_count.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_stats, StatsParams};

    fn measurement(ordinal: u32, week: &str) -> Measurement {
        Measurement {
            id: format!("M{ordinal}"),
            ordinal,
            week_label: week.into(),
            pre_gdpr: ordinal == 1,
        }
    }

    fn stats(components: usize, largest: usize, lambda: f64) -> GraphStats {
        let mut s = graph_stats(&RelationGraph::default(), &StatsParams::default());
        s.component_count = components;
        s.largest_component_size = largest;
        s.algebraic_connectivity = lambda;
        s
    }

    #[test]
    fn json_round_trip() {
        let mut g = RelationGraph::from_sync_edges(&["a", "b", "c"], &[("a", "b")]);
        g.measurement_id = "M1".into();
        g.add_edge(EdgeKind::Embed, "c", "a", 2);
        let doc = GraphDocument::new(&g, &measurement(1, "CW20"));
        let text = serde_json::to_string(&doc).unwrap();
        let back: GraphDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_graph(), g);
    }

    #[test]
    fn dot_has_typed_edges() {
        let mut g = RelationGraph::from_sync_edges(&["a", "b"], &[("a", "b")]);
        g.add_edge(EdgeKind::Embed, "a", "c", 1);
        let dot = to_dot(&g);
        assert!(dot.contains("\"a\" -- \"b\" [kind=sync"));
        assert!(dot.contains("\"a\" -- \"c\" [kind=embed"));
    }

    #[test]
    fn table_changes() {
        let rows = vec![
            MeasurementStats {
                measurement: measurement(2, "CW21"),
                stats: stats(38, 296, 0.1494),
            },
            MeasurementStats {
                measurement: measurement(1, "CW20"),
                stats: stats(59, 429, 0.1187),
            },
        ];
        let csv = component_changes_csv(&rows).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "CW20,M1,59,,429,,0.1187,");
        assert_eq!(lines[2], "CW21,M2,38,-35.59,296,-31.00,0.1494,+25.86");
        assert_eq!(graph_metrics_csv(&rows).unwrap().lines().count(), 3);
    }
}
