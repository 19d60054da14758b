//! Evaluation metrics over model outputs and retrieved subgraphs.
//!
//! Multiple-choice accuracy, ROUGE-L, KG evidence coverage, drug safety
//! and guideline concordance. Rule tables and items are plain JSON; every
//! score is a fraction in `[0, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{fold, KnowledgeGraph};
use crate::retriever::Subgraph;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{items} items but {responses} responses")]
    LengthMismatch { items: usize, responses: usize },
    #[error("nothing to score")]
    EmptySet,
    #[error("subgraph has no entities")]
    EmptySubgraph,
    #[error("no case is covered by any rule")]
    AllCasesInapplicable,
    #[error("invalid item {id:?}: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("invalid rule {index}: {reason}")]
    InvalidRule { index: usize, reason: String },
    #[error("malformed JSON: {0}")]
    Malformed(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqItem {
    pub id: String,
    #[serde(default)]
    pub question: String,
    /// Label to option text; labels iterate in sorted order.
    pub options: BTreeMap<String, String>,
    pub gold: String,
}

impl McqItem {
    pub fn validate(&self) -> Result<(), MetricError> {
        let bad = |reason: &str| {
            Err(MetricError::InvalidItem {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.options.len() < 2 {
            return bad("needs at least two options");
        }
        if !self.options.contains_key(&self.gold) {
            return bad("gold label is not an option");
        }
        if self
            .options
            .keys()
            .any(|l| l.is_empty() || !l.chars().all(char::is_alphanumeric))
        {
            return bad("option labels must be non-empty and alphanumeric");
        }
        Ok(())
    }
}

pub fn parse_items<R: Read>(reader: R) -> Result<Vec<McqItem>, MetricError> {
    let items: Vec<McqItem> = serde_json::from_reader(reader)?;
    for item in &items {
        item.validate()?;
    }
    Ok(items)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whether `needle` occurs in `haystack` on word boundaries.
fn find_bounded(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(at, _)| {
        let before = haystack[..at].chars().next_back();
        let after = haystack[at + needle.len()..].chars().next();
        let starts_word = needle.chars().next().is_some_and(is_word_char);
        let ends_word = needle.chars().next_back().is_some_and(is_word_char);
        (!starts_word || !before.is_some_and(is_word_char))
            && (!ends_word || !after.is_some_and(is_word_char))
    })
}

/// The option label chosen by a free-text response.
///
/// The earliest standalone label (case-sensitive, e.g. `B`, `B)`, `(B)`,
/// `Answer: B.`) wins; otherwise the first option, in label order, whose
/// full text occurs case-insensitively.
pub fn extract_choice(response: &str, options: &BTreeMap<String, String>) -> Option<String> {
    let mut earliest: Option<(usize, &String)> = None;
    for label in options.keys() {
        let hit = response.match_indices(label.as_str()).find(|(at, _)| {
            let before = response[..*at].chars().next_back();
            let after = response[at + label.len()..].chars().next();
            !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
        });
        if let Some((at, _)) = hit {
            if earliest.is_none_or(|(best, _)| at < best) {
                earliest = Some((at, label));
            }
        }
    }
    if let Some((_, label)) = earliest {
        return Some(label.clone());
    }
    let lowered = response.to_lowercase();
    options
        .iter()
        .find(|(_, text)| {
            let t = text.trim().to_lowercase();
            !t.is_empty() && lowered.contains(&t)
        })
        .map(|(label, _)| label.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub value: f64,
    pub correct: usize,
    pub total: usize,
    pub unparsed: usize,
}

pub fn top1_accuracy<S: AsRef<str>>(
    items: &[McqItem],
    responses: &[S],
) -> Result<AccuracyReport, MetricError> {
    if items.len() != responses.len() {
        return Err(MetricError::LengthMismatch {
            items: items.len(),
            responses: responses.len(),
        });
    }
    if items.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut correct = 0;
    let mut unparsed = 0;
    for (item, response) in items.iter().zip(responses) {
        match extract_choice(response.as_ref(), &item.options) {
            Some(label) if label == item.gold => correct += 1,
            Some(_) => {}
            None => unparsed += 1,
        }
    }
    Ok(AccuracyReport {
        value: correct as f64 / items.len() as f64,
        correct,
        total: items.len(),
        unparsed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Lowercased, punctuation-stripped whitespace tokens.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&rouge_tokens(candidate), &rouge_tokens(reference))
}

pub fn rouge_l_tokens<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeScore {
    let zero = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    if candidate.is_empty() || reference.is_empty() {
        return zero;
    }
    let l = lcs_len(candidate, reference) as f64;
    if l == 0.0 {
        return zero;
    }
    let precision = l / candidate.len() as f64;
    let recall = l / reference.len() as f64;
    RougeScore {
        precision,
        recall,
        f1: 2.0 * precision * recall / (precision + recall),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub value: f64,
    pub covered: usize,
    pub total: usize,
    /// Canonical names of subgraph entities absent from the text.
    pub missing: Vec<String>,
}

/// Share of subgraph entities whose canonical name or an alias occurs in
/// `output` (case-insensitive, whole words).
pub fn kg_evidence_coverage(
    subgraph: &Subgraph,
    output: &str,
    graph: &KnowledgeGraph,
) -> Result<CoverageReport, MetricError> {
    if subgraph.node_count() == 0 {
        return Err(MetricError::EmptySubgraph);
    }
    let text = output.to_lowercase();
    let mut covered = 0;
    let mut missing = Vec::new();
    for &id in subgraph.nodes() {
        let entity = graph.entity(id).expect("subgraph node in graph");
        let hit = std::iter::once(entity.canonical_name())
            .chain(entity.aliases().iter().map(String::as_str))
            .any(|n| find_bounded(&text, &n.to_lowercase()));
        if hit {
            covered += 1;
        } else {
            missing.push(entity.canonical_name().to_string());
        }
    }
    let total = subgraph.node_count();
    Ok(CoverageReport {
        value: covered as f64 / total as f64,
        covered,
        total,
        missing,
    })
}

/// One guideline rule: when every context entity holds, the recommended
/// treatments are endorsed and the contraindicated ones forbidden.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    #[serde(default)]
    pub context: Vec<String>,
    #[serde(default)]
    pub recommended: Vec<String>,
    #[serde(default)]
    pub contraindicated: Vec<String>,
}

fn folded_set<'s>(names: impl IntoIterator<Item = &'s String>) -> BTreeSet<String> {
    names.into_iter().map(|n| fold(n)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleTable {
    rules: Vec<CompiledRule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CompiledRule {
    context: BTreeSet<String>,
    recommended: BTreeSet<String>,
    contraindicated: BTreeSet<String>,
}

impl RuleTable {
    pub fn new(rules: Vec<Rule>) -> Result<Self, MetricError> {
        let mut compiled = Vec::with_capacity(rules.len());
        for (index, r) in rules.iter().enumerate() {
            let rule = CompiledRule {
                context: folded_set(&r.context),
                recommended: folded_set(&r.recommended),
                contraindicated: folded_set(&r.contraindicated),
            };
            if let Some(both) = rule.recommended.intersection(&rule.contraindicated).next() {
                return Err(MetricError::InvalidRule {
                    index,
                    reason: format!("{both:?} is both recommended and contraindicated"),
                });
            }
            compiled.push(rule);
        }
        Ok(RuleTable { rules: compiled })
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self, MetricError> {
        let rules: Vec<Rule> = serde_json::from_reader(reader)?;
        RuleTable::new(rules)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn applicable<'r>(
        &'r self,
        context: &'r BTreeSet<String>,
    ) -> impl Iterator<Item = &'r CompiledRule> + 'r {
        self.rules
            .iter()
            .filter(move |r| r.context.is_subset(context))
    }
}

/// A patient context and the treatments a system recommended for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    #[serde(default)]
    pub id: Option<String>,
    pub context: Vec<String>,
    pub recommended: Vec<String>,
}

pub fn parse_cases<R: Read>(reader: R) -> Result<Vec<Case>, MetricError> {
    Ok(serde_json::from_reader(reader)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseReport {
    pub value: f64,
    /// Cases counted in the denominator.
    pub applicable: usize,
    /// Cases meeting the criterion.
    pub passing: usize,
    /// Cases left out of the denominator.
    pub excluded: usize,
}

/// Share of cases recommending nothing that an applicable rule forbids.
pub fn drug_safety_score(cases: &[Case], rules: &RuleTable) -> Result<CaseReport, MetricError> {
    if cases.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let safe = cases
        .iter()
        .filter(|case| {
            let context = folded_set(&case.context);
            let recommended = folded_set(&case.recommended);
            let ok = rules
                .applicable(&context)
                .all(|r| r.contraindicated.is_disjoint(&recommended));
            ok
        })
        .count();
    Ok(CaseReport {
        value: safe as f64 / cases.len() as f64,
        applicable: cases.len(),
        passing: safe,
        excluded: 0,
    })
}

/// Share of covered cases whose whole recommendation sits inside the
/// recommended set of some applicable rule. Cases no rule covers are
/// excluded.
pub fn guideline_concordance(cases: &[Case], rules: &RuleTable) -> Result<CaseReport, MetricError> {
    if cases.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut applicable = 0;
    let mut concordant = 0;
    for case in cases {
        let context = folded_set(&case.context);
        let recommended = folded_set(&case.recommended);
        let mut covering = rules.applicable(&context).peekable();
        if covering.peek().is_none() {
            continue;
        }
        applicable += 1;
        if covering.any(|r| recommended.is_subset(&r.recommended)) {
            concordant += 1;
        }
    }
    if applicable == 0 {
        return Err(MetricError::AllCasesInapplicable);
    }
    Ok(CaseReport {
        value: concordant as f64 / applicable as f64,
        applicable,
        passing: concordant,
        excluded: cases.len() - applicable,
    })
}
