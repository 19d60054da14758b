//! Typed, evidence-weighted knowledge graph for epilepsy-domain clinical
//! knowledge, with rule-based relation extraction, entity normalization and
//! Graph-RAG retrieval.
//!
//! Retrieval math is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common instantiations.

pub mod cli;
pub mod extractor;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod normalizer;
pub mod retriever;
pub mod scalar;

pub use graph::{
    fold, Entity, EntityId, GraphBuilder, GraphError, KnowledgeGraph, Layer, Provenance,
    RelationLabel, Triplet, TripletId,
};
pub use scalar::Scalar;

pub type RetrievalConfigF64 = retriever::RetrievalConfig<f64>;
pub type RetrievalConfigF32 = retriever::RetrievalConfig<f32>;
pub type PrizeMapF64 = retriever::PrizeMap<f64>;
pub type PrizeMapF32 = retriever::PrizeMap<f32>;
pub type EmbeddingF64 = retriever::EmbeddingVector<f64>;
pub type EmbeddingF32 = retriever::EmbeddingVector<f32>;
pub type RetrieverF64<'a> = retriever::Retriever<'a, f64, retriever::TrigramEmbedder>;
pub type RetrieverF32<'a> = retriever::Retriever<'a, f32, retriever::TrigramEmbedder>;
