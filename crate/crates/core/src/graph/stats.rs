use std::collections::BTreeMap;

use serde::Serialize;

use super::KnowledgeGraph;

/// Summary counts of a graph.
///
/// The median paper count uses the lower of the two middle values when the
/// number of triplets is even. An empty graph reports a median of 0 with
/// `median_empty` set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub per_layer_node_counts: BTreeMap<String, usize>,
    pub per_relation_edge_counts: BTreeMap<String, usize>,
    pub cross_layer_count: usize,
    pub cross_layer_fraction: f64,
    pub median_paper_count: u32,
    pub median_empty: bool,
    pub flagged_count: usize,
}

impl GraphStats {
    pub(super) fn compute(graph: &KnowledgeGraph) -> Self {
        let mut per_layer_node_counts = BTreeMap::new();
        for (_, e) in graph.entities() {
            *per_layer_node_counts
                .entry(e.layer().code().to_string())
                .or_insert(0) += 1;
        }

        let mut per_relation_edge_counts = BTreeMap::new();
        let mut cross_layer_count = 0;
        let mut flagged_count = 0;
        let mut counts = Vec::with_capacity(graph.triplet_count());
        for (_, t) in graph.triplets() {
            *per_relation_edge_counts
                .entry(t.relation().name().to_string())
                .or_insert(0) += 1;
            let head_layer = graph.entities[t.head().index()].layer();
            let tail_layer = graph.entities[t.tail().index()].layer();
            if head_layer != tail_layer {
                cross_layer_count += 1;
            }
            if t.is_low_evidence() {
                flagged_count += 1;
            }
            counts.push(t.paper_count());
        }

        let edge_count = counts.len();
        counts.sort_unstable();
        let median_paper_count = if counts.is_empty() {
            0
        } else {
            counts[(counts.len() - 1) / 2]
        };

        GraphStats {
            node_count: graph.entity_count(),
            edge_count,
            per_layer_node_counts,
            per_relation_edge_counts,
            cross_layer_count,
            cross_layer_fraction: if edge_count == 0 {
                0.0
            } else {
                cross_layer_count as f64 / edge_count as f64
            },
            median_paper_count,
            median_empty: edge_count == 0,
            flagged_count,
        }
    }
}
