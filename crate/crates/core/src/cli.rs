//! Command-line front end.
//!
//! JSON and retrieved context go to standard output, diagnostics to
//! standard error. Exit codes:
//!
//! - `0` success
//! - `1` domain error (unresolved endpoint, empty graph, empty denominator)
//! - `2` usage, I/O or parse error
//!
//! Configuration precedence: built-in defaults, then `--config` file, then
//! command-line flags.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::extractor::{
    commit_candidates, default_templates, match_templates, parse_candidates, parse_templates,
    relation_histogram, resolve_conflicts, split_sentences, CandidateRecord, CandidateTriplet,
};
use crate::graph::KnowledgeGraph;
use crate::ingest::{
    self, load_graph, read_edge_file, read_node_file, EdgeRecord, LoadError, NodeRecord,
};
use crate::metrics::{self, MetricError, RuleTable};
use crate::normalizer::{AliasTable, AliasTableError, Normalizer, NormalizerConfig};
use crate::retriever::{
    RetrievalConfig, RetrievalMode, RetrieveError, Retriever, Subgraph, TrigramEmbedder,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<ingest::Error> for Failure {
    fn from(e: ingest::Error) -> Self {
        match e {
            ingest::Error::Load(_) => Failure::Domain(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<RetrieveError> for Failure {
    fn from(e: RetrieveError) -> Self {
        match e {
            RetrieveError::InvalidConfig(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

/// Every tunable of a run, mirrored one-to-one by the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub max_nodes: usize,
    pub max_depth: usize,
    pub top_k: usize,
    pub ppr_tolerance: f64,
    pub ppr_max_iterations: usize,
    pub mode: RetrievalMode,
    pub fuzzy_threshold: f64,
    pub semantic_threshold: f64,
    pub link_confidence: f64,
    /// Exported graph directory.
    pub graph: Option<PathBuf>,
    /// Where `retrieve` writes its subgraph JSON.
    pub json: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = RetrievalConfig::<f64>::default();
        let n = NormalizerConfig::default();
        RunConfig {
            alpha: r.alpha,
            max_nodes: r.max_nodes,
            max_depth: r.max_depth,
            top_k: r.top_k,
            ppr_tolerance: r.ppr_tolerance,
            ppr_max_iterations: r.ppr_max_iterations,
            mode: r.mode,
            fuzzy_threshold: n.fuzzy_threshold,
            semantic_threshold: n.semantic_threshold,
            link_confidence: n.link_confidence,
            graph: None,
            json: None,
        }
    }
}

impl RunConfig {
    pub fn retrieval(&self) -> RetrievalConfig<f64> {
        RetrievalConfig {
            alpha: self.alpha,
            max_nodes: self.max_nodes,
            max_depth: self.max_depth,
            top_k: self.top_k,
            ppr_tolerance: self.ppr_tolerance,
            ppr_max_iterations: self.ppr_max_iterations,
            mode: self.mode,
        }
    }

    pub fn normalizer(&self) -> NormalizerConfig {
        NormalizerConfig {
            fuzzy_threshold: self.fuzzy_threshold,
            semantic_threshold: self.semantic_threshold,
            link_confidence: self.link_confidence,
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kgrag",
    version,
    about = "Build, extract into, query and evaluate a clinical knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load node and edge files, export the graph, print its statistics.
    Build(BuildArgs),
    /// Retrieve a subgraph for a query and print its reasoning paths.
    Retrieve(RetrieveArgs),
    /// Extract candidate triplets from sentences with trigger templates.
    Extract(ExtractArgs),
    /// Compute an evaluation metric.
    Eval(EvalArgs),
    /// Print the effective run configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Node JSON files.
    #[arg(long, required = true, num_args = 1..)]
    nodes: Vec<PathBuf>,
    /// Edge JSON files.
    #[arg(long, num_args = 1..)]
    edges: Vec<PathBuf>,
    /// Alias table JSON (`{alias: canonical_name}`).
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Output directory for the exported graph.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TuningArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// PageRank restart probability [default: 0.15].
    #[arg(long)]
    alpha: Option<f64>,
    /// Node budget for the retrieved subgraph [default: 30].
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Hop limit around the seeds [default: 4].
    #[arg(long)]
    max_depth: Option<usize>,
    /// Semantic candidate count [default: 10].
    #[arg(long)]
    top_k: Option<usize>,
    /// PageRank convergence threshold [default: 1e-10].
    #[arg(long)]
    ppr_tolerance: Option<f64>,
    /// PageRank iteration cap [default: 1000].
    #[arg(long)]
    ppr_max_iterations: Option<usize>,
    /// Retrieval mode [default: ppr_pcst].
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RetrievalMode>,
    /// Minimum fuzzy similarity for a name match [default: 0.85].
    #[arg(long)]
    fuzzy_threshold: Option<f64>,
    /// Minimum cosine for a semantic name match [default: 0.8].
    #[arg(long)]
    semantic_threshold: Option<f64>,
    /// Minimum confidence for linking a query span [default: 0.8].
    #[arg(long)]
    link_confidence: Option<f64>,
}

fn parse_mode(s: &str) -> Result<RetrievalMode, String> {
    s.parse().map_err(|e: RetrieveError| e.to_string())
}

impl TuningArgs {
    fn resolve(
        &self,
        graph: Option<&PathBuf>,
        json: Option<&PathBuf>,
    ) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        take!(
            alpha,
            max_nodes,
            max_depth,
            top_k,
            ppr_tolerance,
            ppr_max_iterations,
            mode,
            fuzzy_threshold,
            semantic_threshold,
            link_confidence
        );
        if let Some(g) = graph {
            c.graph = Some(g.clone());
        }
        if let Some(j) = json {
            c.json = Some(j.clone());
        }
        c.retrieval()
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        c.normalizer()
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    /// Exported graph directory.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Query text.
    #[arg(long)]
    query: String,
    /// Also write the retrieved subgraph as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Exported graph directory.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Plain-text file of sentences.
    #[arg(long)]
    sentences: Option<PathBuf>,
    /// Template JSON replacing the built-in templates.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Extra candidate triplets from an external extractor (JSON).
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Commit accepted candidates and export the new graph here.
    #[arg(long)]
    commit: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    Top1,
    RougeL,
    Kgec,
    Dfs,
    Gc,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    metric: Metric,
    /// MCQ items JSON (top1).
    #[arg(long)]
    items: Option<PathBuf>,
    /// JSON array of response strings (top1) or candidate texts (rouge-l).
    #[arg(long)]
    responses: Option<PathBuf>,
    /// JSON array of reference texts (rouge-l).
    #[arg(long)]
    references: Option<PathBuf>,
    /// Exported graph directory (kgec).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Subgraph JSON written by `retrieve --json` (kgec).
    #[arg(long)]
    subgraph: Option<PathBuf>,
    /// Generated output text file (kgec).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Case JSON (dfs, gc).
    #[arg(long)]
    cases: Option<PathBuf>,
    /// Rule table JSON (dfs, gc).
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[command(flatten)]
    tuning: TuningArgs,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(&a, out, err),
        Command::Retrieve(a) => cmd_retrieve(&a, out, err),
        Command::Extract(a) => cmd_extract(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Config(a) => a
            .tuning
            .resolve(None, None)
            .and_then(|c| write_json(out, &c)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {f}");
            f.code()
        }
    }
}

fn write_json<S: Serialize>(out: &mut dyn Write, value: &S) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    writeln!(out, "{text}")?;
    Ok(())
}

fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<io::BufReader<fs::File>, Failure> {
    fs::File::open(path)
        .map(io::BufReader::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn require<'p>(value: Option<&'p PathBuf>, flag: &str) -> Result<&'p PathBuf, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required input --{flag}")))
}

/// Maps a position in concatenated records back to its file.
fn locate(spans: &[(PathBuf, usize)], index: usize) -> (String, usize) {
    let mut offset = 0;
    for (path, len) in spans {
        if index < offset + len {
            return (path.display().to_string(), index - offset);
        }
        offset += len;
    }
    ("<unknown>".into(), index)
}

fn cmd_build(a: &BuildArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mut nodes: Vec<NodeRecord> = Vec::new();
    let mut node_spans = Vec::new();
    for path in &a.nodes {
        let records = read_node_file(path)?;
        node_spans.push((path.clone(), records.len()));
        nodes.extend(records);
    }
    let mut edges: Vec<EdgeRecord> = Vec::new();
    let mut edge_spans = Vec::new();
    for path in &a.edges {
        let records = read_edge_file(path)?;
        edge_spans.push((path.clone(), records.len()));
        edges.extend(records);
    }
    let aliases = match &a.aliases {
        Some(path) => Some(
            AliasTable::parse(open(path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };

    let graph = match load_graph(&nodes, &edges) {
        Ok(g) => g,
        Err(LoadError::Unresolved(list)) => {
            for u in &list {
                let (file, record) = locate(&edge_spans, u.record);
                let role = match u.role {
                    ingest::EndpointRole::Head => "head",
                    ingest::EndpointRole::Tail => "tail",
                };
                writeln!(
                    err,
                    "{file}: edge record {record}: unresolved {role} {:?}",
                    u.reference
                )?;
            }
            return Err(Failure::Domain(format!(
                "{} unresolved edge endpoint(s)",
                list.len()
            )));
        }
        Err(LoadError::Node { index, source }) => {
            let (file, record) = locate(&node_spans, index);
            return Err(Failure::Domain(format!(
                "{file}: node record {record}: {source}"
            )));
        }
        Err(LoadError::Edge { index, source }) => {
            let (file, record) = locate(&edge_spans, index);
            return Err(Failure::Domain(format!(
                "{file}: edge record {record}: {source}"
            )));
        }
    };
    let graph = match aliases {
        Some(table) => {
            let mut builder = graph.into_builder();
            table.apply(&mut builder).map_err(|e| match e {
                AliasTableError::Malformed(_) => Failure::Usage(e.to_string()),
                _ => Failure::Domain(e.to_string()),
            })?;
            builder.freeze()
        }
        None => graph,
    };

    ingest::write_export(&a.out, &ingest::export_graph(&graph))?;
    write_json(out, &graph.stats())
}

fn load_graph_arg(path: Option<&PathBuf>) -> Result<KnowledgeGraph, Failure> {
    let path = require(path, "graph")?;
    Ok(ingest::load_graph_dir(path)?)
}

fn cmd_retrieve(a: &RetrieveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = a.tuning.resolve(a.graph.as_ref(), a.json.as_ref())?;
    let graph = load_graph_arg(config.graph.as_ref())?;
    let embedder = TrigramEmbedder::default();
    let retriever = Retriever::new(&graph, &embedder, config.retrieval(), config.normalizer())?;
    let result = retriever.retrieve(&a.query)?;
    for w in &result.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if let Some(path) = &config.json {
        let doc = subgraph_json(&graph, &a.query, &result)?;
        let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
        fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    if !result.context.is_empty() {
        writeln!(out, "{}", result.context)?;
    }
    Ok(())
}

fn subgraph_json(
    graph: &KnowledgeGraph,
    query: &str,
    result: &crate::retriever::RetrievalOutput<f64>,
) -> Result<serde_json::Value, Failure> {
    let nodes: Vec<_> = result
        .subgraph
        .nodes()
        .iter()
        .map(|&id| {
            let e = graph.entity(id).expect("subgraph node");
            let mut node = json!({ "name": e.canonical_name(), "layer": e.layer().code() });
            if let Some(p) = &result.prizes {
                node["prize"] = json!(p.get(id));
            }
            node
        })
        .collect();
    let edges: Vec<_> = result
        .subgraph
        .edges()
        .iter()
        .map(|&tid| {
            let t = graph.triplet(tid).expect("subgraph edge");
            json!({
                "head": graph.name(t.head()),
                "relation": t.relation().name(),
                "tail": graph.name(t.tail()),
                "paper_count": t.paper_count(),
            })
        })
        .collect();
    let paths = result
        .paths
        .iter()
        .map(|p| crate::retriever::serialize_path(p, graph))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({
        "query": query,
        "mode": result.mode,
        "seeds": result.seeds.iter().map(|&s| graph.name(s)).collect::<Vec<_>>(),
        "nodes": nodes,
        "edges": edges,
        "paths": paths,
        "warnings": result.warnings,
    }))
}

#[derive(Serialize)]
struct RejectedCandidate {
    candidate: CandidateRecord,
    reason: String,
}

fn cmd_extract(a: &ExtractArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = a.tuning.resolve(a.graph.as_ref(), None)?;
    let graph = load_graph_arg(config.graph.as_ref())?;
    let templates = match &a.templates {
        Some(path) => parse_templates(open(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => default_templates(),
    };
    let normalizer = Normalizer::<f64>::new(&graph, config.normalizer())
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let mut sentence_count = 0;
    let mut raw: Vec<CandidateTriplet> = Vec::new();
    if let Some(path) = &a.sentences {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        for sentence in split_sentences(&text) {
            sentence_count += 1;
            let links = normalizer.link(&sentence);
            raw.extend(match_templates(&sentence, &links, &graph, &templates));
        }
    }
    if let Some(path) = &a.candidates {
        let external = parse_candidates(open(path)?, &graph)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        raw.extend(external);
    }
    if a.sentences.is_none() && a.candidates.is_none() {
        return Err(Failure::Usage(
            "missing required input --sentences or --candidates".into(),
        ));
    }

    let accepted = resolve_conflicts(raw.clone());
    let mut rejected: Vec<RejectedCandidate> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for c in &raw {
        let key = (c.head, c.relation.clone(), c.tail);
        let kept = accepted
            .iter()
            .any(|k| (k.head, &k.relation, k.tail) == (c.head, &c.relation, c.tail));
        if !kept && seen.insert(key) {
            let mut record = CandidateRecord::from_candidate(c, &graph);
            record.paper_count = raw
                .iter()
                .filter(|o| (o.head, &o.relation, o.tail) == (c.head, &c.relation, c.tail))
                .map(|o| o.paper_count)
                .sum();
            rejected.push(RejectedCandidate {
                candidate: record,
                reason: "outweighed by a better-supported relation for the same pair".into(),
            });
        }
    }

    let mut report = json!({
        "sentences": sentence_count,
        "accepted": accepted.iter().map(|c| CandidateRecord::from_candidate(c, &graph)).collect::<Vec<_>>(),
        "rejected": rejected,
        "relations": relation_histogram(&accepted),
    });
    if let Some(dir) = &a.commit {
        let mut builder = graph.into_builder();
        let commit = commit_candidates(&mut builder, &accepted);
        let updated = builder.freeze();
        ingest::write_export(dir, &ingest::export_graph(&updated))?;
        report["commit"] = json!({
            "inserted": commit.inserted,
            "merged": commit.merged,
            "rejected": commit.rejected,
            "stats": updated.stats(),
        });
    }
    write_json(out, &report)
}

fn metric_failure(e: MetricError) -> Failure {
    let name = match e {
        MetricError::LengthMismatch { .. } => "length_mismatch",
        MetricError::EmptySet => "empty_set",
        MetricError::EmptySubgraph => "empty_subgraph",
        MetricError::AllCasesInapplicable => "all_cases_inapplicable",
        MetricError::InvalidItem { .. }
        | MetricError::InvalidRule { .. }
        | MetricError::Malformed(_) => {
            return Failure::Usage(e.to_string());
        }
    };
    Failure::Domain(format!("{name}: {e}"))
}

#[derive(Deserialize)]
struct SubgraphDoc {
    nodes: Vec<SubgraphNode>,
}

#[derive(Deserialize)]
struct SubgraphNode {
    name: String,
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    match a.metric {
        Metric::Top1 => {
            let items_path = require(a.items.as_ref(), "items")?;
            let items = metrics::parse_items(open(items_path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", items_path.display())))?;
            let responses: Vec<String> = read_json(require(a.responses.as_ref(), "responses")?)?;
            let r = metrics::top1_accuracy(&items, &responses).map_err(metric_failure)?;
            write_json(
                out,
                &json!({ "metric": "top1", "value": r.value, "correct": r.correct, "total": r.total, "unparsed": r.unparsed }),
            )
        }
        Metric::RougeL => {
            let candidates: Vec<String> = read_json(require(a.responses.as_ref(), "responses")?)?;
            let references: Vec<String> = read_json(require(a.references.as_ref(), "references")?)?;
            if candidates.len() != references.len() {
                return Err(metric_failure(MetricError::LengthMismatch {
                    items: references.len(),
                    responses: candidates.len(),
                }));
            }
            if candidates.is_empty() {
                return Err(metric_failure(MetricError::EmptySet));
            }
            let scores: Vec<_> = candidates
                .iter()
                .zip(&references)
                .map(|(c, r)| metrics::rouge_l(c, r))
                .collect();
            let n = scores.len() as f64;
            let mean = |f: fn(&metrics::RougeScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
            write_json(
                out,
                &json!({
                    "metric": "rouge-l",
                    "count": scores.len(),
                    "precision": mean(|s| s.precision),
                    "recall": mean(|s| s.recall),
                    "f1": mean(|s| s.f1),
                    "scores": scores,
                }),
            )
        }
        Metric::Kgec => {
            let graph = load_graph_arg(a.graph.as_ref())?;
            let sub_path = require(a.subgraph.as_ref(), "subgraph")?;
            let doc: SubgraphDoc = read_json(sub_path)?;
            let mut nodes = std::collections::BTreeSet::new();
            for node in &doc.nodes {
                let id = graph.find_canonical(&node.name).ok_or_else(|| {
                    Failure::Usage(format!(
                        "{}: unknown entity {:?}",
                        sub_path.display(),
                        node.name
                    ))
                })?;
                nodes.insert(id);
            }
            let text_path = require(a.output.as_ref(), "output")?;
            let text = fs::read_to_string(text_path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", text_path.display())))?;
            let subgraph = Subgraph::induced(&graph, nodes);
            let r =
                metrics::kg_evidence_coverage(&subgraph, &text, &graph).map_err(metric_failure)?;
            write_json(
                out,
                &json!({ "metric": "kgec", "value": r.value, "covered": r.covered, "total": r.total, "missing": r.missing }),
            )
        }
        Metric::Dfs | Metric::Gc => {
            let cases_path = require(a.cases.as_ref(), "cases")?;
            let cases = metrics::parse_cases(open(cases_path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", cases_path.display())))?;
            let rules_path = require(a.rules.as_ref(), "rules")?;
            let rules = RuleTable::parse(open(rules_path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", rules_path.display())))?;
            let (name, r) = match a.metric {
                Metric::Dfs => ("dfs", metrics::drug_safety_score(&cases, &rules)),
                _ => ("gc", metrics::guideline_concordance(&cases, &rules)),
            };
            let r = r.map_err(metric_failure)?;
            write_json(
                out,
                &json!({
                    "metric": name,
                    "value": r.value,
                    "applicable": r.applicable,
                    "passing": r.passing,
                    "excluded": r.excluded,
                    "total": cases.len(),
                }),
            )
        }
    }
}
