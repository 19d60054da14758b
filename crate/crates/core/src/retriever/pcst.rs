//! Greedy prize-collecting Steiner expansion under a node budget.
//!
//! The objective of a connected node set `S` is
//! `sum(prize(v) for v in S) - c * (|S| - 1)`, where every tree edge costs
//! the mean prize `c` over the candidate set. Expansion from a seed
//! repeatedly attaches the candidate whose shortest connecting path has the
//! largest non-negative gain (prizes collected along the path minus `c` per
//! hop) and still fits the budget. Every seed is tried as the start, under
//! every budget up to the limit; the best objective wins, ties going to the
//! higher-prize seed and then to the larger budget.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{PrizeMap, RetrieveError, Subgraph};
use crate::graph::{EntityId, KnowledgeGraph, TripletId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PcstOutcome<T> {
    /// Selected nodes with every triplet among them.
    pub subgraph: Subgraph,
    /// Edges used to connect the selection, in insertion order.
    pub tree_edges: Vec<TripletId>,
    pub objective: T,
    pub edge_cost: T,
}

/// Uniform edge cost: mean prize over `candidates`.
pub fn edge_cost<T: Scalar>(prizes: &PrizeMap<T>, candidates: &BTreeSet<EntityId>) -> T {
    if candidates.is_empty() {
        return T::zero();
    }
    let total: T = candidates.iter().map(|&v| prizes.get(v)).sum();
    total / T::from_usize(candidates.len()).expect("candidate count fits scalar")
}

/// Objective of a node set under uniform edge cost.
pub fn objective<T: Scalar>(prizes: &PrizeMap<T>, nodes: &BTreeSet<EntityId>, cost: T) -> T {
    let collected: T = nodes.iter().map(|&v| prizes.get(v)).sum();
    let edges = T::from_usize(nodes.len().saturating_sub(1)).expect("node count fits scalar");
    collected - cost * edges
}

struct Reach<T> {
    hops: usize,
    gathered: T,
    via: Option<(EntityId, TripletId)>,
}

pub fn pcst_extract<T: Scalar>(
    graph: &KnowledgeGraph,
    prizes: &PrizeMap<T>,
    candidates: &BTreeSet<EntityId>,
    seeds: &[EntityId],
    max_nodes: usize,
) -> Result<PcstOutcome<T>, RetrieveError> {
    if max_nodes == 0 {
        return Err(RetrieveError::InvalidConfig(
            "max_nodes must be at least 1".into(),
        ));
    }
    if let Some(&bad) = candidates.iter().find(|&&v| !graph.contains(v)) {
        return Err(RetrieveError::UnknownEntity(bad));
    }
    let mut starts: Vec<(EntityId, T, String)> = seeds
        .iter()
        .copied()
        .filter(|s| candidates.contains(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|s| (s, prizes.get(s), graph.folded_name(s)))
        .collect();
    if starts.is_empty() {
        return Err(RetrieveError::NoSeedInCandidates);
    }
    starts.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.2.cmp(&b.2))
    });

    let cost = edge_cost(prizes, candidates);
    let mut best: Option<(BTreeSet<EntityId>, Vec<TripletId>, T)> = None;
    let widest = max_nodes.min(candidates.len());
    for (start, _, _) in starts {
        for budget in (1..=widest).rev() {
            let (tree, tree_edges) = grow(graph, prizes, candidates, start, budget, cost);
            let value = objective(prizes, &tree, cost);
            if best.as_ref().is_none_or(|(_, _, b)| value > *b) {
                best = Some((tree, tree_edges, value));
            }
        }
    }
    let (tree, tree_edges, objective) = best.expect("at least one start");
    Ok(PcstOutcome {
        subgraph: Subgraph::induced(graph, tree),
        tree_edges,
        objective,
        edge_cost: cost,
    })
}

/// Greedy expansion from a single start node.
fn grow<T: Scalar>(
    graph: &KnowledgeGraph,
    prizes: &PrizeMap<T>,
    candidates: &BTreeSet<EntityId>,
    start: EntityId,
    max_nodes: usize,
    cost: T,
) -> (BTreeSet<EntityId>, Vec<TripletId>) {
    let mut tree: BTreeSet<EntityId> = BTreeSet::from([start]);
    let mut tree_edges = Vec::new();

    while tree.len() < max_nodes {
        let room = max_nodes - tree.len();
        let reach = shortest_attachments(graph, prizes, candidates, &tree, room);

        let mut best: Option<(EntityId, T, String)> = None;
        for (&v, r) in &reach {
            let gain = r.gathered - cost * T::from_usize(r.hops).expect("hop count fits scalar");
            if gain < T::zero() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, g, name)) => gain > *g || (gain == *g && graph.folded_name(v) < *name),
            };
            if better {
                best = Some((v, gain, graph.folded_name(v)));
            }
        }
        let Some((target, _, _)) = best else { break };

        let mut node = target;
        while let Some((prev, edge)) = reach.get(&node).and_then(|r| r.via) {
            tree.insert(node);
            tree_edges.push(edge);
            node = prev;
        }
    }
    (tree, tree_edges)
}
/// Breadth-first layers out of the current tree, restricted to candidates
/// and to at most `room` hops. Among equally short paths the one gathering
/// the most prize wins; earlier discoveries win ties.
fn shortest_attachments<T: Scalar>(
    graph: &KnowledgeGraph,
    prizes: &PrizeMap<T>,
    candidates: &BTreeSet<EntityId>,
    tree: &BTreeSet<EntityId>,
    room: usize,
) -> HashMap<EntityId, Reach<T>> {
    let mut reach: HashMap<EntityId, Reach<T>> = HashMap::new();
    let mut queue: VecDeque<(EntityId, usize)> = tree.iter().map(|&v| (v, 0)).collect();
    while let Some((u, hops)) = queue.pop_front() {
        if hops == room {
            continue;
        }
        // final once dequeued: every shorter path was processed earlier
        let gathered_u = if hops == 0 {
            T::zero()
        } else {
            reach[&u].gathered
        };
        let neighbors = graph
            .neighbors(u, crate::graph::Direction::Both)
            .expect("tree nodes exist");
        for n in neighbors {
            let v = n.other;
            if tree.contains(&v) || !candidates.contains(&v) {
                continue;
            }
            let via_gather = gathered_u + prizes.get(v);
            match reach.get_mut(&v) {
                None => {
                    reach.insert(
                        v,
                        Reach {
                            hops: hops + 1,
                            gathered: via_gather,
                            via: Some((u, n.triplet)),
                        },
                    );
                    queue.push_back((v, hops + 1));
                }
                Some(r) if r.hops == hops + 1 && via_gather > r.gathered => {
                    r.gathered = via_gather;
                    r.via = Some((u, n.triplet));
                }
                Some(_) => {}
            }
        }
    }
    reach
}
