//! Node/edge JSON files and graph persistence.
//!
//! Node files are JSON arrays of
//! `{"name", "identifier", "source", "layer", "aliases"?, "definition"?}`;
//! edge files are JSON arrays of
//! `{"head", "relation", "tail", "paper_count", "provenance"?}`.
//! `aliases` and `definition` extend the published node schema.
//!
//! An exported graph is a directory with `nodes/<layer>.json` and
//! `edges/<relation>.json`; [`load_graph_dir`] reads it back.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{
    fold, Entity, GraphBuilder, GraphError, KnowledgeGraph, Layer, Provenance, RelationLabel,
    CANONICAL_RELATIONS,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("expected a JSON array of records")]
    NotAnArray,
    #[error("record {index}: missing field {field:?}")]
    MissingField { index: usize, field: &'static str },
    #[error("record {index}: field {field:?} {reason}")]
    InvalidField {
        index: usize,
        field: &'static str,
        reason: String,
    },
    #[error("record {index}: invalid layer {value:?}")]
    InvalidLayer { index: usize, value: String },
    #[error("record {index}: paper_count must be a positive integer")]
    NonpositiveCount { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndpointRole {
    Head,
    Tail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnresolvedEndpoint {
    /// Position of the edge record in the input list.
    pub record: usize,
    pub role: EndpointRole,
    pub reference: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{} unresolved edge endpoint(s): {}", .0.len(), describe_unresolved(.0))]
    Unresolved(Vec<UnresolvedEndpoint>),
    #[error("node record {index}: {source}")]
    Node { index: usize, source: GraphError },
    #[error("edge record {index}: {source}")]
    Edge { index: usize, source: GraphError },
}

fn describe_unresolved(list: &[UnresolvedEndpoint]) -> String {
    list.iter()
        .map(|u| format!("{:?} (record {})", u.reference, u.record))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: IngestError },
    #[error(transparent)]
    Load(#[from] LoadError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeRecord {
    pub name: String,
    pub identifier: String,
    pub source: String,
    pub layer: Layer,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub paper_count: u32,
    pub provenance: Provenance,
}

fn parse_array<R: Read>(reader: R) -> Result<Vec<Value>, IngestError> {
    let value: Value =
        serde_json::from_reader(reader).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    match value {
        Value::Array(items) => Ok(items),
        _ => Err(IngestError::NotAnArray),
    }
}

fn as_object(index: usize, value: &Value) -> Result<&Map<String, Value>, IngestError> {
    value.as_object().ok_or(IngestError::InvalidField {
        index,
        field: "record",
        reason: "is not a JSON object".into(),
    })
}

fn string_field(
    index: usize,
    obj: &Map<String, Value>,
    field: &'static str,
    non_empty: bool,
) -> Result<String, IngestError> {
    match obj.get(field) {
        None => Err(IngestError::MissingField { index, field }),
        Some(Value::String(s)) => {
            if non_empty && s.trim().is_empty() {
                Err(IngestError::InvalidField {
                    index,
                    field,
                    reason: "must not be empty".into(),
                })
            } else {
                Ok(s.clone())
            }
        }
        Some(_) => Err(IngestError::InvalidField {
            index,
            field,
            reason: "must be a string".into(),
        }),
    }
}

/// Parses a node file. Unknown keys are ignored; records keep file order.
pub fn parse_nodes<R: Read>(reader: R) -> Result<Vec<NodeRecord>, IngestError> {
    parse_array(reader)?
        .iter()
        .enumerate()
        .map(|(index, value)| {
            let obj = as_object(index, value)?;
            let name = string_field(index, obj, "name", true)?;
            let identifier = string_field(index, obj, "identifier", false)?;
            let source = string_field(index, obj, "source", false)?;
            let layer_raw = string_field(index, obj, "layer", false)?;
            let layer = layer_raw
                .parse::<Layer>()
                .map_err(|_| IngestError::InvalidLayer {
                    index,
                    value: layer_raw.clone(),
                })?;
            let aliases = match obj.get("aliases") {
                None | Some(Value::Null) => Vec::new(),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|a| {
                        a.as_str()
                            .map(str::to_string)
                            .ok_or(IngestError::InvalidField {
                                index,
                                field: "aliases",
                                reason: "must contain only strings".into(),
                            })
                    })
                    .collect::<Result<_, _>>()?,
                Some(_) => {
                    return Err(IngestError::InvalidField {
                        index,
                        field: "aliases",
                        reason: "must be an array of strings".into(),
                    })
                }
            };
            let definition = match obj.get("definition") {
                None | Some(Value::Null) => String::new(),
                Some(_) => string_field(index, obj, "definition", false)?,
            };
            Ok(NodeRecord {
                name,
                identifier,
                source,
                layer,
                aliases,
                definition,
            })
        })
        .collect()
}

/// Parses an edge file. `provenance` defaults to `manual`.
pub fn parse_edges<R: Read>(reader: R) -> Result<Vec<EdgeRecord>, IngestError> {
    parse_array(reader)?
        .iter()
        .enumerate()
        .map(|(index, value)| {
            let obj = as_object(index, value)?;
            let head = string_field(index, obj, "head", true)?;
            let relation = string_field(index, obj, "relation", true)?;
            let tail = string_field(index, obj, "tail", true)?;
            let paper_count = match obj.get("paper_count") {
                None => {
                    return Err(IngestError::MissingField {
                        index,
                        field: "paper_count",
                    })
                }
                Some(Value::Number(n)) => {
                    if let Some(v) = n.as_u64() {
                        if v == 0 {
                            return Err(IngestError::NonpositiveCount { index });
                        }
                        u32::try_from(v).map_err(|_| IngestError::InvalidField {
                            index,
                            field: "paper_count",
                            reason: "is too large".into(),
                        })?
                    } else if n.as_i64().is_some() {
                        return Err(IngestError::NonpositiveCount { index });
                    } else {
                        return Err(IngestError::InvalidField {
                            index,
                            field: "paper_count",
                            reason: "must be an integer".into(),
                        });
                    }
                }
                Some(_) => {
                    return Err(IngestError::InvalidField {
                        index,
                        field: "paper_count",
                        reason: "must be an integer".into(),
                    })
                }
            };
            let provenance = match obj.get("provenance") {
                None | Some(Value::Null) => Provenance::Manual,
                Some(v) => {
                    serde_json::from_value(v.clone()).map_err(|_| IngestError::InvalidField {
                        index,
                        field: "provenance",
                        reason: "must be one of rule_based, external_extractor, manual".into(),
                    })?
                }
            };
            Ok(EdgeRecord {
                head,
                relation,
                tail,
                paper_count,
                provenance,
            })
        })
        .collect()
}

/// Inserts every node, then every edge, and freezes the result.
///
/// Endpoints resolve by canonical name, then alias, then identifier. All
/// unresolved endpoints are reported together.
pub fn load_graph(nodes: &[NodeRecord], edges: &[EdgeRecord]) -> Result<KnowledgeGraph, LoadError> {
    let mut builder = GraphBuilder::new();
    for (index, n) in nodes.iter().enumerate() {
        let entity = Entity::new(n.name.clone(), n.layer.clone())
            .with_identifier(n.identifier.clone())
            .with_source(n.source.clone())
            .with_definition(n.definition.clone())
            .with_aliases(n.aliases.iter().cloned());
        builder
            .add_entity(entity)
            .map_err(|source| LoadError::Node { index, source })?;
    }

    let mut unresolved = Vec::new();
    let mut resolved = Vec::with_capacity(edges.len());
    for (record, e) in edges.iter().enumerate() {
        let head = builder.graph().resolve(&e.head);
        let tail = builder.graph().resolve(&e.tail);
        if head.is_none() {
            unresolved.push(UnresolvedEndpoint {
                record,
                role: EndpointRole::Head,
                reference: e.head.clone(),
            });
        }
        if tail.is_none() {
            unresolved.push(UnresolvedEndpoint {
                record,
                role: EndpointRole::Tail,
                reference: e.tail.clone(),
            });
        }
        if let (Some(h), Some(t)) = (head, tail) {
            resolved.push((record, h, t));
        }
    }
    if !unresolved.is_empty() {
        return Err(LoadError::Unresolved(unresolved));
    }

    for (index, head, tail) in resolved {
        let e = &edges[index];
        let relation =
            RelationLabel::new(&e.relation).map_err(|source| LoadError::Edge { index, source })?;
        builder
            .add_triplet(head, relation, tail, e.paper_count, e.provenance)
            .map_err(|source| LoadError::Edge { index, source })?;
    }
    Ok(builder.freeze())
}

/// One exported file, path relative to the export root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportFile {
    pub path: String,
    pub contents: Vec<u8>,
}

fn file_stem(raw: &str) -> String {
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn to_json<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(records).expect("records serialize");
    out.push(b'\n');
    out
}

/// Folded head, folded tail, relation.
type EdgeKey = (String, String, String);

/// Renders a graph as node files per layer and edge files per relation,
/// sorted by folded name. The five numbered layers and six canonical
/// relations always get a file, possibly an empty array.
pub fn export_graph(graph: &KnowledgeGraph) -> Vec<ExportFile> {
    let mut node_files: BTreeMap<String, Vec<(String, NodeRecord)>> = Layer::NUMBERED
        .iter()
        .map(|l| (file_stem(l.code()), Vec::new()))
        .collect();
    for (_, e) in graph.entities() {
        node_files
            .entry(file_stem(e.layer().code()))
            .or_default()
            .push((
                fold(e.canonical_name()),
                NodeRecord {
                    name: e.canonical_name().to_string(),
                    identifier: e.identifier().to_string(),
                    source: e.ontology_source().to_string(),
                    layer: e.layer().clone(),
                    aliases: e.aliases().to_vec(),
                    definition: e.definition().to_string(),
                },
            ));
    }

    let mut edge_files: BTreeMap<String, Vec<(EdgeKey, EdgeRecord)>> = CANONICAL_RELATIONS
        .iter()
        .map(|r| (file_stem(r), Vec::new()))
        .collect();
    for (_, t) in graph.triplets() {
        let head = graph.name(t.head());
        let tail = graph.name(t.tail());
        edge_files
            .entry(file_stem(t.relation().name()))
            .or_default()
            .push((
                (fold(head), fold(tail), t.relation().name().to_string()),
                EdgeRecord {
                    head: head.to_string(),
                    relation: t.relation().name().to_string(),
                    tail: tail.to_string(),
                    paper_count: t.paper_count(),
                    provenance: t.provenance(),
                },
            ));
    }

    let mut files = Vec::new();
    for (stem, mut records) in node_files {
        records.sort_by(|a, b| a.0.cmp(&b.0));
        let records: Vec<_> = records.into_iter().map(|(_, r)| r).collect();
        files.push(ExportFile {
            path: format!("nodes/{stem}.json"),
            contents: to_json(&records),
        });
    }
    for (stem, mut records) in edge_files {
        records.sort_by(|a, b| a.0.cmp(&b.0));
        let records: Vec<_> = records.into_iter().map(|(_, r)| r).collect();
        files.push(ExportFile {
            path: format!("edges/{stem}.json"),
            contents: to_json(&records),
        });
    }
    files
}

/// Writes an export under `root`, creating `nodes/` and `edges/`.
pub fn write_export(root: &Path, files: &[ExportFile]) -> Result<(), Error> {
    for file in files {
        let path = root.join(&file.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, &file.contents).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}

pub fn read_node_file(path: &Path) -> Result<Vec<NodeRecord>, Error> {
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_nodes(io::BufReader::new(file)).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_edge_file(path: &Path) -> Result<Vec<EdgeRecord>, Error> {
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edges(io::BufReader::new(file)).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|ext| ext == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Loads an exported graph directory.
pub fn load_graph_dir(root: &Path) -> Result<KnowledgeGraph, Error> {
    let mut nodes = Vec::new();
    for path in json_files(&root.join("nodes"))? {
        nodes.extend(read_node_file(&path)?);
    }
    let mut edges = Vec::new();
    for path in json_files(&root.join("edges"))? {
        edges.extend(read_edge_file(&path)?);
    }
    Ok(load_graph(&nodes, &edges)?)
}
