//! Mention normalization and dictionary-based entity linking.
//!
//! A mention is resolved by the first stage that clears its threshold:
//! exact canonical name, curated alias, fuzzy string similarity, then
//! embedding similarity. Linking scans query or sentence text for the
//! longest token n-grams that resolve through the exact, alias or fuzzy
//! stages.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{fold, EntityId, GraphBuilder, GraphError, KnowledgeGraph};
use crate::retriever::embed::{embed_text, EmbedError, Embedder, NodeEmbeddings};
use crate::scalar::Scalar;

/// Longest n-gram considered while linking.
pub const MAX_LINK_TOKENS: usize = 6;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("mention is empty")]
    EmptyMention,
    #[error("invalid normalizer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizerConfig {
    pub fuzzy_threshold: f64,
    pub semantic_threshold: f64,
    pub link_confidence: f64,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        NormalizerConfig {
            fuzzy_threshold: 0.85,
            semantic_threshold: 0.8,
            link_confidence: 0.8,
        }
    }
}

impl NormalizerConfig {
    pub fn validate(&self) -> Result<(), NormalizeError> {
        for (name, v) in [
            ("fuzzy_threshold", self.fuzzy_threshold),
            ("semantic_threshold", self.semantic_threshold),
            ("link_confidence", self.link_confidence),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(NormalizeError::InvalidConfig(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Exact,
    Alias,
    Fuzzy,
    Semantic,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationResult {
    pub mention: String,
    pub resolved: Option<EntityId>,
    pub stage: Stage,
    pub score: f64,
}

/// A linked span of text. `start..end` are byte offsets into the scanned text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityLink {
    pub entity: EntityId,
    pub start: usize,
    pub end: usize,
    pub stage: Stage,
    pub score: f64,
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)` over case-folded characters.
pub fn fuzzy_score(a: &str, b: &str) -> Result<f64, NormalizeError> {
    let a = fold(a);
    let b = fold(b);
    if a.is_empty() || b.is_empty() {
        return Err(NormalizeError::EmptyMention);
    }
    Ok(folded_similarity(&a, &b))
}

fn folded_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    1.0 - strsim::levenshtein(a, b) as f64 / longest as f64
}

struct SemanticStage<'a, T: Scalar> {
    table: &'a NodeEmbeddings<T>,
    embedder: &'a dyn Embedder<T>,
}

/// Normalization and linking against one frozen graph.
pub struct Normalizer<'a, T: Scalar = f64> {
    graph: &'a KnowledgeGraph,
    config: NormalizerConfig,
    semantic: Option<SemanticStage<'a, T>>,
    // folded vocabulary keys bucketed by token count, for fuzzy linking
    by_tokens: HashMap<usize, Vec<(&'a str, EntityId)>>,
}

impl<'a, T: Scalar> Normalizer<'a, T> {
    pub fn new(
        graph: &'a KnowledgeGraph,
        config: NormalizerConfig,
    ) -> Result<Self, NormalizeError> {
        config.validate()?;
        let mut by_tokens: HashMap<usize, Vec<(&'a str, EntityId)>> = HashMap::new();
        for (key, id, _) in graph.vocabulary() {
            by_tokens
                .entry(key.split(' ').count())
                .or_default()
                .push((key, id));
        }
        Ok(Normalizer {
            graph,
            config,
            semantic: None,
            by_tokens,
        })
    }

    /// Enables the embedding stage, using a node table built from the same graph.
    pub fn with_semantic(
        mut self,
        table: &'a NodeEmbeddings<T>,
        embedder: &'a dyn Embedder<T>,
    ) -> Self {
        self.semantic = Some(SemanticStage { table, embedder });
        self
    }

    pub fn config(&self) -> &NormalizerConfig {
        &self.config
    }

    fn prefer(&self, a: (EntityId, f64), b: (EntityId, f64)) -> (EntityId, f64) {
        match a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if self.graph.folded_name(b.0) < self.graph.folded_name(a.0) {
                    b
                } else {
                    a
                }
            }
        }
    }

    fn best_fuzzy<'k>(
        &self,
        key: &str,
        candidates: impl Iterator<Item = (&'k str, EntityId)>,
    ) -> Option<(EntityId, f64)> {
        let mut best: Option<(EntityId, f64)> = None;
        for (vocab, id) in candidates {
            let score = folded_similarity(key, vocab);
            if score >= self.config.fuzzy_threshold {
                best = Some(match best {
                    None => (id, score),
                    Some(cur) => self.prefer(cur, (id, score)),
                });
            }
        }
        best
    }

    pub fn normalize(&self, mention: &str) -> Result<NormalizationResult, NormalizeError> {
        let key = fold(mention);
        if key.is_empty() {
            return Err(NormalizeError::EmptyMention);
        }
        let result = |resolved: Option<EntityId>, stage, score| NormalizationResult {
            mention: mention.to_string(),
            resolved,
            stage,
            score,
        };
        if let Some(id) = self.graph.find_canonical(&key) {
            return Ok(result(Some(id), Stage::Exact, 1.0));
        }
        if let Some(id) = self.graph.find_alias(&key) {
            return Ok(result(Some(id), Stage::Alias, 1.0));
        }
        let vocab = self.graph.vocabulary().map(|(k, id, _)| (k, id));
        if let Some((id, score)) = self.best_fuzzy(&key, vocab) {
            return Ok(result(Some(id), Stage::Fuzzy, score));
        }
        if let Some(stage) = &self.semantic {
            let query = embed_text(stage.embedder, mention)?;
            if let Some(&(id, score)) = stage.table.rank(self.graph, &query).first() {
                let score = score.to_f64_lossy().clamp(0.0, 1.0);
                if score >= self.config.semantic_threshold {
                    return Ok(result(Some(id), Stage::Semantic, score));
                }
            }
        }
        Ok(result(None, Stage::Unresolved, 0.0))
    }

    /// Links entity mentions in `text`, longest match first, returning
    /// non-overlapping links in left-to-right order.
    pub fn link(&self, text: &str) -> Vec<EntityLink> {
        let tokens = tokenize(text);
        let mut candidates: Vec<(usize, usize, EntityLink)> = Vec::new();
        for start in 0..tokens.len() {
            for len in 1..=MAX_LINK_TOKENS.min(tokens.len() - start) {
                let span = &tokens[start..start + len];
                let key = fold(&span.iter().map(|t| t.text).collect::<Vec<_>>().join(" "));
                let hit = if let Some(id) = self.graph.find_canonical(&key) {
                    Some((id, Stage::Exact, 1.0))
                } else if let Some(id) = self.graph.find_alias(&key) {
                    Some((id, Stage::Alias, 1.0))
                } else {
                    self.by_tokens
                        .get(&len)
                        .and_then(|bucket| self.best_fuzzy(&key, bucket.iter().copied()))
                        .map(|(id, s)| (id, Stage::Fuzzy, s))
                };
                if let Some((entity, stage, score)) = hit {
                    if score >= self.config.link_confidence {
                        candidates.push((
                            start,
                            len,
                            EntityLink {
                                entity,
                                start: span[0].start,
                                end: span[len - 1].end,
                                stage,
                                score,
                            },
                        ));
                    }
                }
            }
        }

        candidates.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then_with(|| (b.2.end - b.2.start).cmp(&(a.2.end - a.2.start)))
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut taken = vec![false; tokens.len()];
        let mut links = Vec::new();
        for (start, len, link) in candidates {
            if taken[start..start + len].iter().any(|&t| t) {
                continue;
            }
            taken[start..start + len].iter_mut().for_each(|t| *t = true);
            links.push(link);
        }
        links.sort_by_key(|l| l.start);
        links
    }
}

pub fn normalize_mention(
    mention: &str,
    graph: &KnowledgeGraph,
    semantic: Option<(&NodeEmbeddings<f64>, &dyn Embedder<f64>)>,
    config: NormalizerConfig,
) -> Result<NormalizationResult, NormalizeError> {
    let mut normalizer = Normalizer::new(graph, config)?;
    if let Some((table, embedder)) = semantic {
        normalizer = normalizer.with_semantic(table, embedder);
    }
    normalizer.normalize(mention)
}

pub fn link_entities(
    text: &str,
    graph: &KnowledgeGraph,
    config: NormalizerConfig,
) -> Result<Vec<EntityLink>, NormalizeError> {
    Ok(Normalizer::<f64>::new(graph, config)?.link(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token<'t> {
    pub text: &'t str,
    pub start: usize,
    pub end: usize,
}

/// Whitespace tokens with leading and trailing non-alphanumerics stripped;
/// inner punctuation ("Nav1.1", "first-line") is kept.
pub(crate) fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut word_start = None;
    fn push<'t>(text: &'t str, from: usize, to: usize, tokens: &mut Vec<Token<'t>>) {
        let raw = &text[from..to];
        let trimmed_front = raw.trim_start_matches(|c: char| !c.is_alphanumeric());
        let trimmed = trimmed_front.trim_end_matches(|c: char| !c.is_alphanumeric());
        if !trimmed.is_empty() {
            let start = from + (raw.len() - trimmed_front.len());
            tokens.push(Token {
                text: &text[start..start + trimmed.len()],
                start,
                end: start + trimmed.len(),
            });
        }
    }
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = word_start.take() {
                push(text, s, i, &mut tokens);
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        push(text, s, text.len(), &mut tokens);
    }
    tokens
}

#[derive(Debug, Error)]
pub enum AliasTableError {
    #[error("malformed alias table: {0}")]
    Malformed(String),
    #[error("alias {alias:?} points at unknown entity {canonical:?}")]
    UnknownCanonical { alias: String, canonical: String },
    #[error("alias {alias:?}: {source}")]
    Graph { alias: String, source: GraphError },
}

/// Curated synonyms loaded from a JSON object `{alias: canonical_name}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable(BTreeMap<String, String>);

impl AliasTable {
    pub fn parse<R: Read>(reader: R) -> Result<Self, AliasTableError> {
        serde_json::from_reader(reader)
            .map(AliasTable)
            .map_err(|e| AliasTableError::Malformed(e.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    /// Attaches each alias to the entity whose canonical name it targets.
    pub fn apply(&self, builder: &mut GraphBuilder) -> Result<usize, AliasTableError> {
        for (alias, canonical) in &self.0 {
            let id = builder.graph().find_canonical(canonical).ok_or_else(|| {
                AliasTableError::UnknownCanonical {
                    alias: alias.clone(),
                    canonical: canonical.clone(),
                }
            })?;
            builder
                .add_alias(id, alias)
                .map_err(|source| AliasTableError::Graph {
                    alias: alias.clone(),
                    source,
                })?;
        }
        Ok(self.0.len())
    }
}
