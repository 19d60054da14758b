//! Graph-RAG retrieval.
//!
//! Three modes share one pipeline: seed entities are linked in the query,
//! a subgraph is selected, and its seed-to-sink paths are rendered as the
//! serialized context.
//!
//! * `ppr_pcst`: Personalized PageRank from the seeds gives node prizes; a
//!   greedy prize-collecting Steiner expansion picks a connected subgraph
//!   inside the seeds' depth-limited neighbourhood.
//! * `semantic`: the top-k nodes by embedding cosine plus their immediate
//!   neighbours.
//! * `hybrid`: the union of both, pruned back to the node budget.
//!
//! All traversal treats triplets as undirected; direction survives only in
//! the rendered hops.

pub mod config;
pub mod embed;
pub mod paths;
pub mod pcst;
pub mod ppr;

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::{EntityId, KnowledgeGraph, TripletId};
use crate::normalizer::{NormalizeError, Normalizer, NormalizerConfig};
use crate::scalar::Scalar;

pub use config::{RetrievalConfig, RetrievalMode};
pub use embed::{
    embed_node, embed_text, EmbedError, Embedder, EmbeddingVector, NodeEmbeddings, TrigramEmbedder,
};
pub use paths::{enumerate_paths, neighbourhood_paths, serialize_path, Hop, ReasoningPath};
pub use pcst::{pcst_extract, PcstOutcome};
pub use ppr::{depth_filter, ppr, PprOutcome, PrizeMap};

#[derive(Debug, Error)]
pub enum RetrieveError {
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("graph has no entities")]
    EmptyGraph,
    #[error("no seed among the candidate nodes")]
    NoSeedInCandidates,
    #[error("query is empty")]
    EmptyQuery,
    #[error("path refers to triplet {0:?} absent from the graph")]
    DanglingTriplet(TripletId),
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// A node set of a parent graph together with every triplet among them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subgraph {
    nodes: BTreeSet<EntityId>,
    edges: BTreeSet<TripletId>,
}

impl Subgraph {
    pub fn induced(graph: &KnowledgeGraph, nodes: BTreeSet<EntityId>) -> Self {
        let edges = graph
            .triplets()
            .filter(|(_, t)| nodes.contains(&t.head()) && nodes.contains(&t.tail()))
            .map(|(id, _)| id)
            .collect();
        Subgraph { nodes, edges }
    }

    pub fn whole(graph: &KnowledgeGraph) -> Self {
        Subgraph::induced(graph, graph.entity_ids().collect())
    }

    pub fn nodes(&self) -> &BTreeSet<EntityId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<TripletId> {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.nodes.contains(&id)
    }

    /// Connected components (ignoring direction), each sorted by id.
    pub fn components(&self, graph: &KnowledgeGraph) -> Vec<BTreeSet<EntityId>> {
        let mut unseen = self.nodes.clone();
        let mut out = Vec::new();
        while let Some(&start) = unseen.iter().next() {
            unseen.remove(&start);
            let mut comp = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for tid in graph.incident(u) {
                    if !self.edges.contains(&tid) {
                        continue;
                    }
                    let v = graph
                        .triplet(tid)
                        .and_then(|t| t.other_end(u))
                        .expect("edge endpoint");
                    if unseen.remove(&v) {
                        comp.insert(v);
                        queue.push_back(v);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self, graph: &KnowledgeGraph) -> bool {
        self.components(graph).len() <= 1
    }

    /// Materializes the view as a standalone graph.
    pub fn to_graph(&self, graph: &KnowledgeGraph) -> KnowledgeGraph {
        graph
            .induced_subgraph(self.nodes.iter().copied())
            .expect("subgraph nodes belong to graph")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticOutcome<T> {
    /// The top-k nodes with their cosine scores, best first.
    pub ranked: Vec<(EntityId, T)>,
    pub subgraph: Subgraph,
}

/// Top-k nodes by cosine similarity to the query, grown by one hop.
pub fn semantic_retrieve<T: Scalar, E: Embedder<T> + ?Sized>(
    graph: &KnowledgeGraph,
    table: &NodeEmbeddings<T>,
    embedder: &E,
    query: &str,
    top_k: usize,
) -> Result<SemanticOutcome<T>, RetrieveError> {
    if query.trim().is_empty() {
        return Err(RetrieveError::EmptyQuery);
    }
    let q = embed_text(embedder, query)?;
    let mut ranked = table.rank(graph, &q);
    ranked.truncate(top_k);
    let mut nodes = BTreeSet::new();
    for &(id, _) in &ranked {
        nodes.insert(id);
        for tid in graph.incident(id) {
            nodes.insert(
                graph
                    .triplet(tid)
                    .and_then(|t| t.other_end(id))
                    .expect("edge endpoint"),
            );
        }
    }
    Ok(SemanticOutcome {
        ranked,
        subgraph: Subgraph::induced(graph, nodes),
    })
}

/// Union of a PPR-PCST and a semantic subgraph.
///
/// Over budget, non-seed nodes are dropped in ascending prize order
/// (nodes only present in the semantic subgraph count as prize 0; ties
/// drop the folded-name-smaller node first), then seeds likewise if still
/// necessary. The result is the largest connected component that holds a
/// seed; equal sizes prefer the component whose smallest seed name sorts
/// first.
pub fn hybrid_union<T: Scalar>(
    graph: &KnowledgeGraph,
    pcst: &Subgraph,
    semantic: &Subgraph,
    prizes: &PrizeMap<T>,
    seeds: &[EntityId],
    max_nodes: usize,
) -> Subgraph {
    let mut nodes: BTreeSet<EntityId> = pcst.nodes().union(semantic.nodes()).copied().collect();
    let seed_set: BTreeSet<EntityId> = seeds.iter().copied().collect();
    if nodes.len() > max_nodes {
        let prize = |v: EntityId| {
            if pcst.contains(v) {
                prizes.get(v)
            } else {
                T::zero()
            }
        };
        let mut order: Vec<(bool, T, String, EntityId)> = nodes
            .iter()
            .map(|&v| (seed_set.contains(&v), prize(v), graph.folded_name(v), v))
            .collect();
        order.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                .then_with(|| a.2.cmp(&b.2))
        });
        let excess = nodes.len() - max_nodes;
        for (_, _, _, v) in order.into_iter().take(excess) {
            nodes.remove(&v);
        }
    }
    let merged = Subgraph::induced(graph, nodes);
    let best = merged
        .components(graph)
        .into_iter()
        .filter_map(|comp| {
            let first_seed = comp
                .iter()
                .filter(|v| seed_set.contains(v))
                .map(|&v| graph.folded_name(v))
                .min()?;
            Some((comp, first_seed))
        })
        .reduce(|a, b| {
            if b.0.len() > a.0.len() || (b.0.len() == a.0.len() && b.1 < a.1) {
                b
            } else {
                a
            }
        });
    match best {
        Some((comp, _)) => Subgraph::induced(graph, comp),
        None => Subgraph::default(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalOutput<T> {
    /// Mode actually run; differs from the configured one after a fallback.
    pub mode: RetrievalMode,
    pub seeds: Vec<EntityId>,
    pub subgraph: Subgraph,
    /// PageRank prizes when the mode computed them.
    pub prizes: Option<PrizeMap<T>>,
    pub paths: Vec<ReasoningPath>,
    /// Rendered paths joined by `\n`.
    pub context: String,
    pub warnings: Vec<String>,
}

/// Retrieval over one frozen graph with a node embedding table built once.
pub struct Retriever<'a, T: Scalar, E: Embedder<T>> {
    graph: &'a KnowledgeGraph,
    embedder: &'a E,
    table: NodeEmbeddings<T>,
    config: RetrievalConfig<T>,
    normalizer: NormalizerConfig,
}

impl<'a, T: Scalar, E: Embedder<T>> Retriever<'a, T, E> {
    pub fn new(
        graph: &'a KnowledgeGraph,
        embedder: &'a E,
        config: RetrievalConfig<T>,
        normalizer: NormalizerConfig,
    ) -> Result<Self, RetrieveError> {
        config.validate()?;
        normalizer.validate()?;
        let table = NodeEmbeddings::build(graph, embedder)?;
        Ok(Retriever {
            graph,
            embedder,
            table,
            config,
            normalizer,
        })
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        self.graph
    }

    pub fn config(&self) -> &RetrievalConfig<T> {
        &self.config
    }

    pub fn embeddings(&self) -> &NodeEmbeddings<T> {
        &self.table
    }

    /// Seed entities linked in `query`, in text order without repeats.
    pub fn link_seeds(&self, query: &str) -> Result<Vec<EntityId>, RetrieveError> {
        let links = Normalizer::<T>::new(self.graph, self.normalizer)?.link(query);
        let mut seeds = Vec::new();
        for l in links {
            if !seeds.contains(&l.entity) {
                seeds.push(l.entity);
            }
        }
        Ok(seeds)
    }

    /// PageRank prizes, depth-filtered candidates, and the greedy Steiner
    /// subgraph for `seeds`.
    pub fn ppr_pcst(
        &self,
        seeds: &[EntityId],
    ) -> Result<(PprOutcome<T>, PcstOutcome<T>), RetrieveError> {
        let scores = ppr(self.graph, seeds, &self.config)?;
        let candidates = depth_filter(self.graph, seeds, self.config.max_depth)?;
        let tree = pcst_extract(
            self.graph,
            &scores.prizes,
            &candidates,
            seeds,
            self.config.max_nodes,
        )?;
        Ok((scores, tree))
    }

    pub fn semantic(&self, query: &str) -> Result<SemanticOutcome<T>, RetrieveError> {
        semantic_retrieve(
            self.graph,
            &self.table,
            self.embedder,
            query,
            self.config.top_k,
        )
    }

    pub fn hybrid(
        &self,
        query: &str,
        seeds: &[EntityId],
    ) -> Result<(PprOutcome<T>, Subgraph), RetrieveError> {
        let (scores, tree) = self.ppr_pcst(seeds)?;
        let sem = self.semantic(query)?;
        let merged = hybrid_union(
            self.graph,
            &tree.subgraph,
            &sem.subgraph,
            &scores.prizes,
            seeds,
            self.config.max_nodes,
        );
        Ok((scores, merged))
    }

    pub fn retrieve(&self, query: &str) -> Result<RetrievalOutput<T>, RetrieveError> {
        if self.graph.is_empty() {
            return Err(RetrieveError::EmptyGraph);
        }
        if query.trim().is_empty() {
            return Err(RetrieveError::EmptyQuery);
        }
        let seeds = self.link_seeds(query)?;
        let mut warnings = Vec::new();
        let mut mode = self.config.mode;
        if seeds.is_empty() && mode != RetrievalMode::Semantic {
            warnings.push(
                "no seed entity linked in query; falling back to semantic retrieval".to_string(),
            );
            mode = RetrievalMode::Semantic;
        }
        let nonconverged = |p: &PprOutcome<T>| {
            format!(
                "PageRank stopped after {} iterations without reaching tolerance (residual {})",
                p.iterations, p.residual
            )
        };

        let (subgraph, prizes, paths, path_seeds) = match mode {
            RetrievalMode::PprPcst => {
                let (scores, tree) = self.ppr_pcst(&seeds)?;
                if !scores.converged {
                    warnings.push(nonconverged(&scores));
                }
                let paths =
                    enumerate_paths(self.graph, &tree.subgraph, &seeds, self.config.max_depth);
                (tree.subgraph, Some(scores.prizes), paths, seeds)
            }
            RetrievalMode::Semantic => {
                let sem = self.semantic(query)?;
                let centers: Vec<EntityId> = sem.ranked.iter().map(|&(id, _)| id).collect();
                let paths = neighbourhood_paths(self.graph, &sem.subgraph, &centers);
                (sem.subgraph, None, paths, centers)
            }
            RetrievalMode::Hybrid => {
                let (scores, merged) = self.hybrid(query, &seeds)?;
                if !scores.converged {
                    warnings.push(nonconverged(&scores));
                }
                let paths = enumerate_paths(self.graph, &merged, &seeds, self.config.max_depth);
                (merged, Some(scores.prizes), paths, seeds)
            }
        };

        let context = paths
            .iter()
            .map(|p| serialize_path(p, self.graph))
            .collect::<Result<Vec<_>, _>>()?
            .join("\n");
        Ok(RetrievalOutput {
            mode,
            seeds: path_seeds,
            subgraph,
            prizes,
            paths,
            context,
            warnings,
        })
    }
}
