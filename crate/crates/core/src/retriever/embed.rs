//! Text embeddings and the precomputed node table used for cosine search.

use std::cmp::Ordering;

use thiserror::Error;

use crate::graph::{fold, Entity, EntityId, KnowledgeGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("embedding of {0:?} is the zero vector")]
    ZeroVector(String),
    #[error("embedder returned dimension {found}, declared {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding of {0:?} has non-finite components")]
    NonFinite(String),
}

/// Maps text to a fixed-dimension real vector. Normalization is applied by
/// the caller, so implementations may return raw feature counts.
pub trait Embedder<T: Scalar> {
    fn dimension(&self) -> usize;
    fn embed_raw(&self, text: &str) -> Vec<T>;
}

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T>(Vec<T>);

impl<T: Scalar> EmbeddingVector<T> {
    pub fn normalize(raw: Vec<T>, expected_dim: usize, text: &str) -> Result<Self, EmbedError> {
        if raw.len() != expected_dim {
            return Err(EmbedError::DimensionMismatch {
                expected: expected_dim,
                found: raw.len(),
            });
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(text.to_string()));
        }
        let norm = raw.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(EmbedError::ZeroVector(text.to_string()));
        }
        Ok(EmbeddingVector(raw.into_iter().map(|x| x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Cosine similarity; both vectors are unit norm so this is the dot product.
    pub fn cosine(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }
}

pub fn embed_text<T: Scalar, E: Embedder<T> + ?Sized>(
    embedder: &E,
    text: &str,
) -> Result<EmbeddingVector<T>, EmbedError> {
    EmbeddingVector::normalize(embedder.embed_raw(text), embedder.dimension(), text)
}

/// The text embedded for a node: canonical name, a space, then definition.
pub fn node_text(entity: &Entity) -> String {
    format!("{} {}", entity.canonical_name(), entity.definition())
}

pub fn embed_node<T: Scalar, E: Embedder<T> + ?Sized>(
    entity: &Entity,
    embedder: &E,
) -> Result<EmbeddingVector<T>, EmbedError> {
    embed_text(embedder, &node_text(entity))
}

/// Character-trigram feature hashing.
///
/// Text is case-folded with whitespace collapsed, padded with one space on
/// each side, and every window of three characters is hashed with 64-bit
/// FNV-1a into one of `dimension` buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrigramEmbedder {
    dimension: usize,
}

impl TrigramEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        TrigramEmbedder { dimension }
    }
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        TrigramEmbedder::new(Self::DEFAULT_DIMENSION)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

impl<T: Scalar> Embedder<T> for TrigramEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_raw(&self, text: &str) -> Vec<T> {
        let mut features = vec![T::zero(); self.dimension];
        let folded = fold(text);
        if folded.is_empty() {
            return features;
        }
        let chars: Vec<char> = format!(" {folded} ").chars().collect();
        let mut buf = String::new();
        for window in chars.windows(3) {
            buf.clear();
            buf.extend(window);
            let bucket = (fnv1a(buf.as_bytes()) % self.dimension as u64) as usize;
            features[bucket] += T::one();
        }
        features
    }
}

/// Node embeddings computed once per frozen graph, indexed by entity id.
#[derive(Debug, Clone)]
pub struct NodeEmbeddings<T> {
    vectors: Vec<EmbeddingVector<T>>,
    dimension: usize,
}

impl<T: Scalar> NodeEmbeddings<T> {
    pub fn build<E: Embedder<T> + ?Sized>(
        graph: &KnowledgeGraph,
        embedder: &E,
    ) -> Result<Self, EmbedError> {
        let vectors = graph
            .entities()
            .map(|(_, e)| embed_node(e, embedder))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NodeEmbeddings {
            vectors,
            dimension: embedder.dimension(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, id: EntityId) -> Option<&EmbeddingVector<T>> {
        self.vectors.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Every node scored against `query`, best first; equal scores fall back
    /// to folded canonical name.
    pub fn rank(&self, graph: &KnowledgeGraph, query: &EmbeddingVector<T>) -> Vec<(EntityId, T)> {
        let mut scored: Vec<(EntityId, T, String)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let id = EntityId::from_index(i);
                (id, v.cosine(query), graph.folded_name(id))
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.2.cmp(&b.2))
        });
        scored.into_iter().map(|(id, s, _)| (id, s)).collect()
    }
}
