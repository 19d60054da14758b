//! Rule-based relation extraction.
//!
//! A [`TriggerTemplate`] fires on an ordered pair of linked entities when
//! their layers match the template and one of its trigger phrases occurs
//! (case-insensitively) in the text strictly between the two spans. The
//! earlier entity becomes the head.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    AddOutcome, EntityId, GraphBuilder, KnowledgeGraph, Layer, Provenance, RelationLabel,
};
use crate::normalizer::EntityLink;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("template {index}: {reason}")]
    InvalidTemplate { index: usize, reason: String },
    #[error("candidate {index}: {reason}")]
    InvalidCandidate { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerTemplate {
    pub subject_layer: Layer,
    pub trigger_phrases: Vec<String>,
    pub object_layer: Layer,
    pub relation: RelationLabel,
}

impl TriggerTemplate {
    pub fn new(
        subject_layer: Layer,
        phrases: &[&str],
        object_layer: Layer,
        relation: &str,
    ) -> Self {
        TriggerTemplate {
            subject_layer,
            trigger_phrases: phrases.iter().map(|p| p.to_string()).collect(),
            object_layer,
            relation: RelationLabel::new(relation).expect("non-empty relation"),
        }
    }

    fn validate(&self, index: usize) -> Result<(), ExtractError> {
        if self.trigger_phrases.is_empty() {
            return Err(ExtractError::InvalidTemplate {
                index,
                reason: "trigger_phrases must not be empty".into(),
            });
        }
        if self.trigger_phrases.iter().any(|p| p.trim().is_empty()) {
            return Err(ExtractError::InvalidTemplate {
                index,
                reason: "trigger phrases must not be blank".into(),
            });
        }
        Ok(())
    }

    fn fires_on(&self, between: &str) -> bool {
        let between = between.to_lowercase();
        self.trigger_phrases
            .iter()
            .any(|p| between.contains(&p.trim().to_lowercase()))
    }
}

/// The six built-in templates, one per canonical relation.
pub fn default_templates() -> Vec<TriggerTemplate> {
    let protein = Layer::Other("Protein".into());
    let anatomy = Layer::Other("Anatomy".into());
    vec![
        TriggerTemplate::new(
            Layer::Treatment,
            &["recommended for", "first-line", "effective in"],
            Layer::Syndrome,
            "treats",
        ),
        TriggerTemplate::new(
            Layer::Treatment,
            &["avoid", "contraindicated", "not recommended"],
            Layer::Gene,
            "contraindicated_with",
        ),
        TriggerTemplate::new(
            Layer::Gene,
            &["associated with", "linked to", "implicated in"],
            Layer::Syndrome,
            "associated_with",
        ),
        TriggerTemplate::new(
            Layer::Diagnostic,
            &["characteristic of", "consistent with", "seen in"],
            Layer::Syndrome,
            "characteristic_of",
        ),
        TriggerTemplate::new(
            Layer::Gene,
            &["encodes", "produces", "results in"],
            protein,
            "encodes",
        ),
        TriggerTemplate::new(
            Layer::Gene,
            &["expressed in", "detected in", "localised to"],
            anatomy,
            "expressed_in",
        ),
    ]
}

/// Reads a JSON array of `{subject_layer, trigger_phrases, object_layer, relation}`.
pub fn parse_templates<R: Read>(reader: R) -> Result<Vec<TriggerTemplate>, ExtractError> {
    let templates: Vec<TriggerTemplate> =
        serde_json::from_reader(reader).map_err(|e| ExtractError::Malformed(e.to_string()))?;
    for (i, t) in templates.iter().enumerate() {
        t.validate(i)?;
    }
    Ok(templates)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTriplet {
    pub head: EntityId,
    pub relation: RelationLabel,
    pub tail: EntityId,
    pub paper_count: u32,
    pub source_sentence: String,
    pub provenance: Provenance,
    /// Set when conflict resolution kept this candidate as one of several
    /// tied relations for the same pair.
    pub needs_review: bool,
}

/// Emits one candidate per (ordered link pair, matching template).
///
/// Pairs follow text order; within a pair, candidates are sorted by
/// relation name.
pub fn match_templates(
    sentence: &str,
    links: &[EntityLink],
    graph: &KnowledgeGraph,
    templates: &[TriggerTemplate],
) -> Vec<CandidateTriplet> {
    let mut links: Vec<&EntityLink> = links.iter().collect();
    links.sort_by_key(|l| (l.start, l.end));
    let mut out = Vec::new();
    for (i, first) in links.iter().enumerate() {
        for second in &links[i + 1..] {
            if first.entity == second.entity || first.end > second.start {
                continue;
            }
            let (Some(head), Some(tail)) =
                (graph.entity(first.entity), graph.entity(second.entity))
            else {
                continue;
            };
            let between = &sentence[first.end..second.start];
            let mut relations: Vec<&RelationLabel> = templates
                .iter()
                .filter(|t| &t.subject_layer == head.layer() && &t.object_layer == tail.layer())
                .filter(|t| t.fires_on(between))
                .map(|t| &t.relation)
                .collect();
            relations.sort();
            relations.dedup();
            out.extend(relations.into_iter().map(|r| CandidateTriplet {
                head: first.entity,
                relation: r.clone(),
                tail: second.entity,
                paper_count: 1,
                source_sentence: sentence.to_string(),
                provenance: Provenance::RuleBased,
                needs_review: false,
            }));
        }
    }
    out
}

/// Merges identical `(head, relation, tail)` candidates by summing counts,
/// then keeps only the highest-count relation(s) for each `(head, tail)`
/// pair. Ties are all kept and marked for review. Output follows first
/// appearance.
pub fn resolve_conflicts(candidates: Vec<CandidateTriplet>) -> Vec<CandidateTriplet> {
    let mut merged: Vec<CandidateTriplet> = Vec::new();
    let mut index: HashMap<(EntityId, RelationLabel, EntityId), usize> = HashMap::new();
    for c in candidates {
        let key = (c.head, c.relation.clone(), c.tail);
        match index.get(&key) {
            Some(&i) => merged[i].paper_count = merged[i].paper_count.saturating_add(c.paper_count),
            None => {
                index.insert(key, merged.len());
                merged.push(c);
            }
        }
    }

    let mut best: HashMap<(EntityId, EntityId), (u32, usize)> = HashMap::new();
    for c in &merged {
        let entry = best.entry((c.head, c.tail)).or_insert((0, 0));
        if c.paper_count > entry.0 {
            *entry = (c.paper_count, 1);
        } else if c.paper_count == entry.0 {
            entry.1 += 1;
        }
    }
    merged
        .into_iter()
        .filter_map(|mut c| {
            let (max, holders) = best[&(c.head, c.tail)];
            (c.paper_count == max).then(|| {
                c.needs_review = holders > 1;
                c
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CommitReport {
    pub inserted: usize,
    pub merged: usize,
    pub rejected: Vec<Rejection>,
}

/// Inserts candidates through the graph's merge rules. Failures are
/// collected in the report.
pub fn commit_candidates(
    builder: &mut GraphBuilder,
    candidates: &[CandidateTriplet],
) -> CommitReport {
    let mut report = CommitReport::default();
    for (index, c) in candidates.iter().enumerate() {
        match builder.add_triplet(
            c.head,
            c.relation.clone(),
            c.tail,
            c.paper_count,
            c.provenance,
        ) {
            Ok(AddOutcome::Inserted(_)) => report.inserted += 1,
            Ok(AddOutcome::Merged(_)) => report.merged += 1,
            Err(e) => report.rejected.push(Rejection {
                index,
                reason: e.to_string(),
            }),
        }
    }
    report
}

/// Name-keyed candidate shape used in JSON files, including candidates
/// produced by external extractors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(default = "one")]
    pub paper_count: u32,
    #[serde(default)]
    pub source_sentence: String,
    #[serde(default = "external")]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub needs_review: bool,
}

fn one() -> u32 {
    1
}

fn external() -> Provenance {
    Provenance::ExternalExtractor
}

impl CandidateRecord {
    pub fn from_candidate(c: &CandidateTriplet, graph: &KnowledgeGraph) -> Self {
        CandidateRecord {
            head: graph.name(c.head).to_string(),
            relation: c.relation.name().to_string(),
            tail: graph.name(c.tail).to_string(),
            paper_count: c.paper_count,
            source_sentence: c.source_sentence.clone(),
            provenance: c.provenance,
            needs_review: c.needs_review,
        }
    }
}

/// Reads external candidates and resolves their endpoints against `graph`.
///
/// Only `rule_based` and `external_extractor` provenance are accepted.
pub fn parse_candidates<R: Read>(
    reader: R,
    graph: &KnowledgeGraph,
) -> Result<Vec<CandidateTriplet>, ExtractError> {
    let records: Vec<CandidateRecord> =
        serde_json::from_reader(reader).map_err(|e| ExtractError::Malformed(e.to_string()))?;
    records
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let invalid = |reason: String| ExtractError::InvalidCandidate { index, reason };
            if r.provenance == Provenance::Manual {
                return Err(invalid(
                    "candidate provenance must be rule_based or external_extractor".into(),
                ));
            }
            if r.paper_count == 0 {
                return Err(invalid("paper_count must be at least 1".into()));
            }
            let head = graph
                .resolve(&r.head)
                .ok_or_else(|| invalid(format!("unknown head {:?}", r.head)))?;
            let tail = graph
                .resolve(&r.tail)
                .ok_or_else(|| invalid(format!("unknown tail {:?}", r.tail)))?;
            let relation = RelationLabel::new(&r.relation).map_err(|e| invalid(e.to_string()))?;
            Ok(CandidateTriplet {
                head,
                relation,
                tail,
                paper_count: r.paper_count,
                source_sentence: r.source_sentence,
                provenance: r.provenance,
                needs_review: false,
            })
        })
        .collect()
}

const ABBREVIATIONS: [&str; 14] = [
    "e.g.", "i.e.", "et al.", "etc.", "vs.", "cf.", "approx.", "fig.", "dr.", "no.", "mr.", "ms.",
    "st.", "resp.",
];

/// Splits text on `.`, `!` and `?` followed by whitespace or end of input,
/// skipping common abbreviations. Blank lines also end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    for paragraph in text.split("\n\n") {
        let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
        let mut start = 0;
        for (k, &(i, c)) in chars.iter().enumerate() {
            if !matches!(c, '.' | '!' | '?') {
                continue;
            }
            let at_end = k + 1 == chars.len();
            if !at_end && !chars[k + 1].1.is_whitespace() {
                continue;
            }
            let end = i + c.len_utf8();
            let piece = &paragraph[start..end];
            if c == '.' {
                let lower = piece.to_lowercase();
                let guarded = ABBREVIATIONS.iter().any(|a| {
                    lower.ends_with(a)
                        && lower[..lower.len() - a.len()]
                            .chars()
                            .last()
                            .is_none_or(|p| !p.is_alphanumeric())
                });
                if guarded && !at_end {
                    continue;
                }
            }
            push_sentence(&mut sentences, piece);
            start = end;
        }
        push_sentence(&mut sentences, &paragraph[start..]);
    }
    sentences
}

fn push_sentence(out: &mut Vec<String>, piece: &str) {
    let s = piece.split_whitespace().collect::<Vec<_>>().join(" ");
    if !s.is_empty() {
        out.push(s);
    }
}

/// Relation counts of a candidate list, for reports.
pub fn relation_histogram(candidates: &[CandidateTriplet]) -> BTreeMap<String, usize> {
    let mut hist = BTreeMap::new();
    for c in candidates {
        *hist.entry(c.relation.name().to_string()).or_insert(0) += 1;
    }
    hist
}
