//! Reasoning paths through a retrieved subgraph and their text rendering.
//!
//! A hop renders as `(head, relation[Np], tail)` in the triplet's stored
//! direction, where `N` is the paper count; hops traversed against the
//! stored direction carry a `^-1` suffix on the relation. Hops are joined
//! with ` -> `.

use std::collections::{BTreeMap, BTreeSet};

use super::{RetrieveError, Subgraph};
use crate::graph::{EntityId, KnowledgeGraph, TripletId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hop {
    pub triplet: TripletId,
    /// True when walked from the triplet's tail to its head.
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReasoningPath {
    pub origin: EntityId,
    pub hops: Vec<Hop>,
}

impl ReasoningPath {
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Visited nodes, origin first.
    pub fn nodes(&self, graph: &KnowledgeGraph) -> Vec<EntityId> {
        let mut nodes = vec![self.origin];
        for hop in &self.hops {
            let t = graph.triplet(hop.triplet).expect("path triplet in graph");
            nodes.push(if hop.reversed { t.head() } else { t.tail() });
        }
        nodes
    }

    pub fn end(&self, graph: &KnowledgeGraph) -> EntityId {
        *self.nodes(graph).last().expect("origin present")
    }
}

type Adjacency = BTreeMap<EntityId, Vec<(Hop, EntityId)>>;

fn adjacency(graph: &KnowledgeGraph, subgraph: &Subgraph) -> Adjacency {
    let mut adj: Adjacency = subgraph.nodes().iter().map(|&v| (v, Vec::new())).collect();
    for &tid in subgraph.edges() {
        let t = graph.triplet(tid).expect("subgraph edge in graph");
        adj.entry(t.head()).or_default().push((
            Hop {
                triplet: tid,
                reversed: false,
            },
            t.tail(),
        ));
        adj.entry(t.tail()).or_default().push((
            Hop {
                triplet: tid,
                reversed: true,
            },
            t.head(),
        ));
    }
    adj
}

/// Sinks: non-seed nodes with exactly one distinct neighbor, or every
/// non-seed node when there are no such leaves.
pub fn sinks(
    graph: &KnowledgeGraph,
    subgraph: &Subgraph,
    seeds: &BTreeSet<EntityId>,
) -> BTreeSet<EntityId> {
    let adj = adjacency(graph, subgraph);
    let non_seed = || adj.keys().copied().filter(|v| !seeds.contains(v));
    let leaves: BTreeSet<EntityId> = non_seed()
        .filter(|v| {
            let distinct: BTreeSet<EntityId> = adj[v].iter().map(|&(_, w)| w).collect();
            distinct.len() == 1
        })
        .collect();
    if leaves.is_empty() {
        non_seed().collect()
    } else {
        leaves
    }
}

/// Every simple path of at most `max_depth` hops from a seed to a sink.
///
/// Ordered by seed name, then the sequence of visited node names, then
/// relation names.
pub fn enumerate_paths(
    graph: &KnowledgeGraph,
    subgraph: &Subgraph,
    seeds: &[EntityId],
    max_depth: usize,
) -> Vec<ReasoningPath> {
    let seed_set: BTreeSet<EntityId> = seeds
        .iter()
        .copied()
        .filter(|s| subgraph.contains(*s))
        .collect();
    let sinks = sinks(graph, subgraph, &seed_set);
    let adj = adjacency(graph, subgraph);

    let mut found = Vec::new();
    for &seed in &seed_set {
        let mut visited = BTreeSet::from([seed]);
        let mut hops = Vec::new();
        walk(
            seed,
            seed,
            &adj,
            &sinks,
            max_depth,
            &mut visited,
            &mut hops,
            &mut found,
        );
    }
    sort_paths(graph, &mut found);
    found
}

#[allow(clippy::too_many_arguments)]
fn walk(
    origin: EntityId,
    at: EntityId,
    adj: &Adjacency,
    sinks: &BTreeSet<EntityId>,
    max_depth: usize,
    visited: &mut BTreeSet<EntityId>,
    hops: &mut Vec<Hop>,
    found: &mut Vec<ReasoningPath>,
) {
    if hops.len() == max_depth {
        return;
    }
    for &(hop, next) in &adj[&at] {
        if visited.contains(&next) {
            continue;
        }
        hops.push(hop);
        if sinks.contains(&next) {
            found.push(ReasoningPath {
                origin,
                hops: hops.clone(),
            });
        }
        visited.insert(next);
        walk(origin, next, adj, sinks, max_depth, visited, hops, found);
        visited.remove(&next);
        hops.pop();
    }
}

pub(crate) fn sort_paths(graph: &KnowledgeGraph, paths: &mut [ReasoningPath]) {
    paths.sort_by_cached_key(|p| {
        let names: Vec<String> = p
            .nodes(graph)
            .into_iter()
            .map(|v| graph.folded_name(v))
            .collect();
        let relations: Vec<(String, bool)> = p
            .hops
            .iter()
            .map(|h| {
                let t = graph.triplet(h.triplet).expect("path triplet in graph");
                (t.relation().name().to_string(), h.reversed)
            })
            .collect();
        let ids: Vec<TripletId> = p.hops.iter().map(|h| h.triplet).collect();
        (names, relations, ids)
    });
}

/// One-hop paths from each center to each of its neighbors inside the
/// subgraph, centers in the given order. An edge joining two centers is
/// emitted once, from the earlier center.
pub fn neighbourhood_paths(
    graph: &KnowledgeGraph,
    subgraph: &Subgraph,
    centers: &[EntityId],
) -> Vec<ReasoningPath> {
    let adj = adjacency(graph, subgraph);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &c in centers {
        let Some(edges) = adj.get(&c) else { continue };
        let mut local: Vec<ReasoningPath> = edges
            .iter()
            .filter(|(hop, _)| !seen.contains(&hop.triplet))
            .map(|&(hop, _)| ReasoningPath {
                origin: c,
                hops: vec![hop],
            })
            .collect();
        sort_paths(graph, &mut local);
        for p in local {
            seen.insert(p.hops[0].triplet);
            out.push(p);
        }
    }
    out
}

pub fn render_hop(graph: &KnowledgeGraph, hop: Hop) -> Result<String, RetrieveError> {
    let t = graph
        .triplet(hop.triplet)
        .ok_or(RetrieveError::DanglingTriplet(hop.triplet))?;
    let marker = if hop.reversed { "^-1" } else { "" };
    Ok(format!(
        "({}, {}{}[{}p], {})",
        graph.name(t.head()),
        t.relation().name(),
        marker,
        t.paper_count(),
        graph.name(t.tail())
    ))
}

pub fn serialize_path(
    path: &ReasoningPath,
    graph: &KnowledgeGraph,
) -> Result<String, RetrieveError> {
    let hops = path
        .hops
        .iter()
        .map(|&h| render_hop(graph, h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(hops.join(" -> "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Entity, GraphBuilder, Layer, Provenance, RelationLabel};

    fn build(
        names: &[&str],
        edges: &[(usize, &str, usize, u32)],
    ) -> (KnowledgeGraph, Vec<EntityId>) {
        let mut b = GraphBuilder::new();
        let ids: Vec<_> = names
            .iter()
            .map(|n| b.add_entity(Entity::new(*n, Layer::Gene)).unwrap())
            .collect();
        for &(h, r, t, n) in edges {
            b.add_triplet(
                ids[h],
                RelationLabel::new(r).unwrap(),
                ids[t],
                n,
                Provenance::Manual,
            )
            .unwrap();
        }
        (b.freeze(), ids)
    }

    fn render_all(g: &KnowledgeGraph, paths: &[ReasoningPath]) -> Vec<String> {
        paths
            .iter()
            .map(|p| serialize_path(p, g).unwrap())
            .collect()
    }

    #[test]
    fn chain_has_single_leaf_path() {
        let (g, ids) = build(&["A", "B", "C"], &[(0, "r", 1, 1), (1, "s", 2, 2)]);
        let sub = Subgraph::whole(&g);
        let paths = enumerate_paths(&g, &sub, &ids[..1], 4);
        assert_eq!(render_all(&g, &paths), ["(A, r[1p], B) -> (B, s[2p], C)"]);
    }

    #[test]
    fn star_from_hub() {
        let (g, ids) = build(
            &["H", "X", "Y", "Z"],
            &[(0, "r", 1, 1), (0, "r", 2, 1), (3, "r", 0, 1)],
        );
        let paths = enumerate_paths(&g, &Subgraph::whole(&g), &ids[..1], 4);
        assert_eq!(
            render_all(&g, &paths),
            ["(H, r[1p], X)", "(H, r[1p], Y)", "(Z, r^-1[1p], H)"]
        );
    }

    #[test]
    fn singleton_has_no_paths() {
        let (g, ids) = build(&["A"], &[]);
        assert!(enumerate_paths(&g, &Subgraph::whole(&g), &ids, 4).is_empty());
    }

    #[test]
    fn depth_limit_applies() {
        let (g, ids) = build(&["A", "B", "C"], &[(0, "r", 1, 1), (1, "r", 2, 1)]);
        assert!(enumerate_paths(&g, &Subgraph::whole(&g), &ids[..1], 1).is_empty());
    }

    #[test]
    fn render_format() {
        let (g, _) = build(&["Valproate", "Dravet Syndrome"], &[(0, "treats", 1, 12)]);
        let (tid, _) = g.triplets().next().unwrap();
        let forward = ReasoningPath {
            origin: EntityId::from_index(0),
            hops: vec![Hop {
                triplet: tid,
                reversed: false,
            }],
        };
        assert_eq!(
            serialize_path(&forward, &g).unwrap(),
            "(Valproate, treats[12p], Dravet Syndrome)"
        );
        let back = ReasoningPath {
            origin: EntityId::from_index(1),
            hops: vec![Hop {
                triplet: tid,
                reversed: true,
            }],
        };
        assert_eq!(
            serialize_path(&back, &g).unwrap(),
            "(Valproate, treats^-1[12p], Dravet Syndrome)"
        );
        let dangling = ReasoningPath {
            origin: EntityId::from_index(0),
            hops: vec![Hop {
                triplet: TripletId::from_index(4),
                reversed: false,
            }],
        };
        assert!(matches!(
            serialize_path(&dangling, &g),
            Err(RetrieveError::DanglingTriplet(_))
        ));
    }

    #[test]
    fn cycle_falls_back_to_all_non_seeds() {
        let (g, ids) = build(
            &["A", "B", "C"],
            &[(0, "r", 1, 1), (1, "r", 2, 1), (2, "r", 0, 1)],
        );
        let paths = enumerate_paths(&g, &Subgraph::whole(&g), &ids[..1], 4);
        // A->B, A->B->C, A->C, A->C->B
        assert_eq!(paths.len(), 4);
    }
}
