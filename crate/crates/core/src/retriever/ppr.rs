//! Personalized PageRank over the undirected view of the graph.

use std::collections::{BTreeSet, VecDeque};

use super::{RetrievalConfig, RetrieveError};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::scalar::Scalar;

/// Relevance score per entity, indexed by entity id.
#[derive(Debug, Clone, PartialEq)]
pub struct PrizeMap<T>(Vec<T>);

impl<T: Scalar> PrizeMap<T> {
    /// Wraps raw scores, rescaling them to sum to one. Returns `None` for
    /// negative, non-finite, or all-zero input.
    pub fn from_scores(scores: Vec<T>) -> Option<Self> {
        if scores.iter().any(|s| !s.is_finite() || *s < T::zero()) {
            return None;
        }
        let total: T = scores.iter().copied().sum();
        if total <= T::zero() {
            return None;
        }
        Some(PrizeMap(scores.into_iter().map(|s| s / total).collect()))
    }

    pub fn get(&self, id: EntityId) -> T {
        self.0.get(id.index()).copied().unwrap_or_else(T::zero)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> T {
        self.0.iter().copied().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PprOutcome<T> {
    pub prizes: PrizeMap<T>,
    pub iterations: usize,
    /// L1 change of the last iteration.
    pub residual: T,
    /// False when the iteration cap was hit before the tolerance was met.
    pub converged: bool,
}

pub(crate) fn check_seeds(
    graph: &KnowledgeGraph,
    seeds: &[EntityId],
) -> Result<Vec<EntityId>, RetrieveError> {
    if seeds.is_empty() {
        return Err(RetrieveError::EmptySeedSet);
    }
    let mut distinct: Vec<EntityId> = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !graph.contains(s) {
            return Err(RetrieveError::UnknownEntity(s));
        }
        if !distinct.contains(&s) {
            distinct.push(s);
        }
    }
    Ok(distinct)
}

/// Power iteration on `r <- alpha * s + (1 - alpha) * W^T r`.
///
/// `s` is uniform over the seeds and `W` is the row-stochastic random-walk
/// matrix of the undirected multigraph (each triplet counts once per
/// endpoint). Mass on isolated nodes restarts at the seeds. Iteration stops
/// once the L1 change drops below `ppr_tolerance` or after
/// `ppr_max_iterations` rounds.
pub fn ppr<T: Scalar>(
    graph: &KnowledgeGraph,
    seeds: &[EntityId],
    config: &RetrievalConfig<T>,
) -> Result<PprOutcome<T>, RetrieveError> {
    config.validate()?;
    if graph.is_empty() {
        return Err(RetrieveError::EmptyGraph);
    }
    let seeds = check_seeds(graph, seeds)?;
    let n = graph.entity_count();
    let alpha = config.alpha;
    let walk = T::one() - alpha;

    let mut restart = vec![T::zero(); n];
    let share = T::one() / T::from_usize(seeds.len()).expect("seed count fits scalar");
    for s in &seeds {
        restart[s.index()] = share;
    }
    let inv_degree: Vec<T> = graph
        .entity_ids()
        .map(|id| match graph.degree(id) {
            0 => T::zero(),
            d => T::one() / T::from_usize(d).expect("degree fits scalar"),
        })
        .collect();
    let edges: Vec<(usize, usize)> = graph
        .triplets()
        .map(|(_, t)| (t.head().index(), t.tail().index()))
        .collect();

    let mut scores = restart.clone();
    let mut next = vec![T::zero(); n];
    let mut iterations = 0;
    let mut residual = T::infinity();
    let mut converged = false;
    while iterations < config.ppr_max_iterations {
        iterations += 1;
        let dangling: T = (0..n)
            .filter(|&i| inv_degree[i] == T::zero())
            .map(|i| scores[i])
            .sum();
        for i in 0..n {
            next[i] = (alpha + walk * dangling) * restart[i];
        }
        for &(h, t) in &edges {
            next[t] += walk * scores[h] * inv_degree[h];
            next[h] += walk * scores[t] * inv_degree[t];
        }
        residual = scores.iter().zip(&next).map(|(&a, &b)| (a - b).abs()).sum();
        std::mem::swap(&mut scores, &mut next);
        if residual < config.ppr_tolerance {
            converged = true;
            break;
        }
    }

    let prizes = PrizeMap::from_scores(scores).expect("PageRank mass stays positive");
    Ok(PprOutcome {
        prizes,
        iterations,
        residual,
        converged,
    })
}

/// Nodes within `max_depth` undirected hops of any seed, seeds included.
pub fn depth_filter(
    graph: &KnowledgeGraph,
    seeds: &[EntityId],
    max_depth: usize,
) -> Result<BTreeSet<EntityId>, RetrieveError> {
    let seeds = check_seeds(graph, seeds)?;
    let mut depth = vec![usize::MAX; graph.entity_count()];
    let mut queue = VecDeque::new();
    for s in seeds {
        depth[s.index()] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        let d = depth[u.index()];
        if d == max_depth {
            continue;
        }
        for tid in graph.incident(u) {
            let v = graph
                .triplet(tid)
                .and_then(|t| t.other_end(u))
                .expect("adjacency consistent");
            if depth[v.index()] == usize::MAX {
                depth[v.index()] = d + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(graph
        .entity_ids()
        .filter(|id| depth[id.index()] != usize::MAX)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Entity, GraphBuilder, Layer, Provenance, RelationLabel};

    fn chain(names: &[&str]) -> (KnowledgeGraph, Vec<EntityId>) {
        let mut b = GraphBuilder::new();
        let ids: Vec<_> = names
            .iter()
            .map(|n| b.add_entity(Entity::new(*n, Layer::Gene)).unwrap())
            .collect();
        for w in ids.windows(2) {
            b.add_triplet(
                w[0],
                RelationLabel::new("r").unwrap(),
                w[1],
                1,
                Provenance::Manual,
            )
            .unwrap();
        }
        (b.freeze(), ids)
    }

    #[test]
    fn isolated_seed_keeps_all_mass() {
        let (g, ids) = chain(&["A"]);
        let out = ppr(&g, &ids, &RetrievalConfig::<f64>::default()).unwrap();
        assert!(out.converged);
        assert!((out.prizes.get(ids[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_graph_matches_closed_form() {
        // A-B-C, seed A: r = a s + (1-a) W^T r solved by hand
        //   rA = a + (1-a) rB/2, rB = (1-a)(rA + rC), rC = (1-a) rB/2
        let (g, ids) = chain(&["A", "B", "C"]);
        let a = 0.15f64;
        let w = 1.0 - a;
        let rb_over_ra = w / (1.0 - w * w / 2.0);
        let ra = a / (1.0 - w * rb_over_ra / 2.0);
        let rb = rb_over_ra * ra;
        let rc = w * rb / 2.0;
        let out = ppr(&g, &ids[..1], &RetrievalConfig::<f64>::default()).unwrap();
        for (id, expect) in ids.iter().zip([ra, rb, rc]) {
            assert!((out.prizes.get(*id) - expect).abs() < 1e-9, "{id:?}");
        }
        assert!((ra + rb + rc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_precision_runs() {
        let (g, ids) = chain(&["A", "B", "C", "D"]);
        let out = ppr(&g, &ids[..1], &RetrievalConfig::<f32>::default()).unwrap();
        assert!((out.prizes.total() - 1.0).abs() < 1e-5);
        assert!(out.prizes.get(ids[0]) > out.prizes.get(ids[3]));
    }

    #[test]
    fn seed_errors() {
        let (g, _) = chain(&["A", "B"]);
        let c = RetrievalConfig::<f64>::default();
        assert!(matches!(ppr(&g, &[], &c), Err(RetrieveError::EmptySeedSet)));
        let ghost = EntityId::from_index(5);
        assert!(matches!(
            ppr(&g, &[ghost], &c),
            Err(RetrieveError::UnknownEntity(_))
        ));
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let (g, ids) = chain(&["A", "B", "C"]);
        let c = RetrievalConfig::<f64> {
            ppr_max_iterations: 3,
            ..Default::default()
        };
        let out = ppr(&g, &ids[..1], &c).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert!((out.prizes.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_filter_on_chain() {
        let (g, ids) = chain(&["A", "B", "C", "D", "E", "F"]);
        let got = depth_filter(&g, &ids[..1], 4).unwrap();
        assert_eq!(got, ids[..5].iter().copied().collect());
        assert!(depth_filter(&g, &[], 4).is_err());
    }
}
