//! Typed heterogeneous knowledge graph.
//!
//! Entities belong to exactly one clinical [`Layer`] and are connected by
//! directed, evidence-weighted [`Triplet`]s. A graph is assembled through a
//! [`GraphBuilder`] and then frozen into an immutable [`KnowledgeGraph`] that
//! can be shared freely between readers.

mod stats;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use stats::GraphStats;

/// The six relation types covered by the built-in extraction templates.
pub const CANONICAL_RELATIONS: [&str; 6] = [
    "treats",
    "contraindicated_with",
    "associated_with",
    "characteristic_of",
    "encodes",
    "expressed_in",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("entity name must not be empty")]
    EmptyName,
    #[error("name {0:?} collides with an existing canonical name or alias")]
    DuplicateName(String),
    #[error("identifier {0:?} is already assigned to another entity")]
    DuplicateIdentifier(String),
    #[error("invalid layer {0:?}")]
    InvalidLayer(String),
    #[error("relation name must not be empty")]
    EmptyRelation,
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("self-loop on entity {0:?}")]
    SelfLoop(String),
    #[error("paper count must be at least 1")]
    NonpositiveCount,
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Case-folds a name for index lookups: trimmed, lower-cased, inner
/// whitespace collapsed to single spaces.
pub fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        EntityId(u32::try_from(index).expect("entity count fits in u32"))
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TripletId(u32);

impl TripletId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        TripletId(u32::try_from(index).expect("triplet count fits in u32"))
    }
}

/// Clinical stratum of an entity.
///
/// The five numbered layers serialize as `L1`..`L5`; auxiliary categories
/// such as `Protein` or `Anatomy` serialize as their tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Syndrome,
    Diagnostic,
    Gene,
    Treatment,
    Outcome,
    Other(String),
}

impl Layer {
    pub const NUMBERED: [Layer; 5] = [
        Layer::Syndrome,
        Layer::Diagnostic,
        Layer::Gene,
        Layer::Treatment,
        Layer::Outcome,
    ];

    /// Builds an auxiliary layer, rejecting empty tags and tags that would
    /// parse back as one of the numbered layers.
    pub fn other(tag: &str) -> Result<Layer> {
        match tag.parse::<Layer>()? {
            layer @ Layer::Other(_) => Ok(layer),
            _ => Err(GraphError::InvalidLayer(tag.to_string())),
        }
    }

    pub fn code(&self) -> &str {
        match self {
            Layer::Syndrome => "L1",
            Layer::Diagnostic => "L2",
            Layer::Gene => "L3",
            Layer::Treatment => "L4",
            Layer::Outcome => "L5",
            Layer::Other(tag) => tag,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Layer::Syndrome => "Syndrome",
            Layer::Diagnostic => "Diagnostic",
            Layer::Gene => "Gene",
            Layer::Treatment => "Treatment",
            Layer::Outcome => "Outcome",
            Layer::Other(tag) => tag,
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Layer::Other(tag) => Layer::other(tag).is_ok() && tag.trim() == tag,
            _ => true,
        }
    }
}

impl FromStr for Layer {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self> {
        let tag = s.trim();
        let invalid = || GraphError::InvalidLayer(s.to_string());
        if tag.is_empty() {
            return Err(invalid());
        }
        let lower = tag.to_ascii_lowercase();
        let layer = match lower.as_str() {
            "l1" | "syndrome" => Layer::Syndrome,
            "l2" | "diagnostic" => Layer::Diagnostic,
            "l3" | "gene" => Layer::Gene,
            "l4" | "treatment" => Layer::Treatment,
            "l5" | "outcome" => Layer::Outcome,
            _ => {
                // Anything shaped like a layer code outside L1..L5 is a typo,
                // not an auxiliary category.
                let digits = &lower[1..];
                if lower.starts_with('l')
                    && !digits.is_empty()
                    && digits.chars().all(|c| c.is_ascii_digit())
                {
                    return Err(invalid());
                }
                Layer::Other(tag.to_string())
            }
        };
        Ok(layer)
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for Layer {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Layer {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// A relation name. Any non-empty name is accepted; the six templated
/// types are reported by [`RelationLabel::is_canonical`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationLabel(String);

impl RelationLabel {
    pub fn new(name: &str) -> Result<Self> {
        let name = name.trim();
        if name.is_empty() {
            return Err(GraphError::EmptyRelation);
        }
        Ok(RelationLabel(name.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_canonical(&self) -> bool {
        CANONICAL_RELATIONS.contains(&self.0.as_str())
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for RelationLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        RelationLabel::new(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RuleBased,
    ExternalExtractor,
    #[default]
    Manual,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::RuleBased => "rule_based",
            Provenance::ExternalExtractor => "external_extractor",
            Provenance::Manual => "manual",
        }
    }
}

/// A graph node. Identity inside a graph is its [`EntityId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    canonical_name: String,
    layer: Layer,
    identifier: String,
    ontology_source: String,
    aliases: Vec<String>,
    definition: String,
}

impl Entity {
    pub fn new(canonical_name: impl Into<String>, layer: Layer) -> Self {
        Entity {
            canonical_name: canonical_name.into().trim().to_string(),
            layer,
            identifier: String::new(),
            ontology_source: String::new(),
            aliases: Vec::new(),
            definition: String::new(),
        }
    }

    pub fn with_identifier(mut self, identifier: impl Into<String>) -> Self {
        self.identifier = identifier.into().trim().to_string();
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.ontology_source = source.into();
        self
    }

    pub fn with_definition(mut self, definition: impl Into<String>) -> Self {
        self.definition = definition.into();
        self
    }

    pub fn with_alias(mut self, alias: impl Into<String>) -> Self {
        self.aliases.push(alias.into().trim().to_string());
        self
    }

    pub fn with_aliases<I, S>(mut self, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.aliases
            .extend(aliases.into_iter().map(|a| a.into().trim().to_string()));
        self
    }

    pub fn canonical_name(&self) -> &str {
        &self.canonical_name
    }

    pub fn layer(&self) -> &Layer {
        &self.layer
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn ontology_source(&self) -> &str {
        &self.ontology_source
    }

    /// Aliases, sorted by folded form.
    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }

    pub fn definition(&self) -> &str {
        &self.definition
    }
}

/// A directed fact `(head, relation, tail)` with its supporting paper count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triplet {
    head: EntityId,
    relation: RelationLabel,
    tail: EntityId,
    paper_count: u32,
    provenance: Provenance,
}

impl Triplet {
    pub fn head(&self) -> EntityId {
        self.head
    }

    pub fn relation(&self) -> &RelationLabel {
        &self.relation
    }

    pub fn tail(&self) -> EntityId {
        self.tail
    }

    pub fn paper_count(&self) -> u32 {
        self.paper_count
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Flagged when fewer than two independent sources support the fact.
    pub fn is_low_evidence(&self) -> bool {
        self.paper_count < 2
    }

    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other_end(&self, node: EntityId) -> Option<EntityId> {
        if node == self.head {
            Some(self.tail)
        } else if node == self.tail {
            Some(self.head)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub triplet: TripletId,
    pub other: EntityId,
    /// True when the triplet points from the queried entity to `other`.
    pub outgoing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Inserted(TripletId),
    Merged(TripletId),
}

impl AddOutcome {
    pub fn id(self) -> TripletId {
        match self {
            AddOutcome::Inserted(id) | AddOutcome::Merged(id) => id,
        }
    }
}

/// A frozen graph. All methods are read-only.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    triplets: Vec<Triplet>,
    out_adj: Vec<Vec<TripletId>>,
    in_adj: Vec<Vec<TripletId>>,
    edge_index: HashMap<(EntityId, String, EntityId), TripletId>,
    canonical_index: HashMap<String, EntityId>,
    alias_index: HashMap<String, EntityId>,
    identifier_index: HashMap<String, EntityId>,
}

impl KnowledgeGraph {
    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn triplet_count(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn contains(&self, id: EntityId) -> bool {
        id.index() < self.entities.len()
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.index())
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entities.len()).map(EntityId::from_index)
    }

    pub fn entities(&self) -> impl Iterator<Item = (EntityId, &Entity)> + '_ {
        self.entities
            .iter()
            .enumerate()
            .map(|(i, e)| (EntityId::from_index(i), e))
    }

    pub fn triplet(&self, id: TripletId) -> Option<&Triplet> {
        self.triplets.get(id.index())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (TripletId, &Triplet)> + '_ {
        self.triplets
            .iter()
            .enumerate()
            .map(|(i, t)| (TripletId::from_index(i), t))
    }

    /// Canonical name of `id`. Panics on an id from another graph.
    pub fn name(&self, id: EntityId) -> &str {
        &self.entities[id.index()].canonical_name
    }

    pub fn folded_name(&self, id: EntityId) -> String {
        fold(self.name(id))
    }

    pub fn find_canonical(&self, name: &str) -> Option<EntityId> {
        self.canonical_index.get(&fold(name)).copied()
    }

    pub fn find_alias(&self, name: &str) -> Option<EntityId> {
        self.alias_index.get(&fold(name)).copied()
    }

    pub fn find_identifier(&self, identifier: &str) -> Option<EntityId> {
        self.identifier_index.get(identifier.trim()).copied()
    }

    /// Resolves a reference by canonical name, then alias, then identifier.
    pub fn resolve(&self, reference: &str) -> Option<EntityId> {
        self.find_canonical(reference)
            .or_else(|| self.find_alias(reference))
            .or_else(|| self.find_identifier(reference))
    }

    /// Every folded canonical name and alias with its entity; the flag is
    /// true for aliases.
    pub fn vocabulary(&self) -> impl Iterator<Item = (&str, EntityId, bool)> + '_ {
        self.canonical_index
            .iter()
            .map(|(k, &id)| (k.as_str(), id, false))
            .chain(
                self.alias_index
                    .iter()
                    .map(|(k, &id)| (k.as_str(), id, true)),
            )
    }

    pub fn find_triplet(
        &self,
        head: EntityId,
        relation: &str,
        tail: EntityId,
    ) -> Option<TripletId> {
        self.edge_index
            .get(&(head, relation.to_string(), tail))
            .copied()
    }

    fn check(&self, id: EntityId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(GraphError::UnknownEntity(id.to_string()))
        }
    }

    /// Incident triplets of `id`, ordered by the other entity's folded
    /// canonical name, then relation name.
    pub fn neighbors(&self, id: EntityId, direction: Direction) -> Result<Vec<Neighbor>> {
        self.check(id)?;
        let mut out = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            out.extend(self.out_adj[id.index()].iter().map(|&t| Neighbor {
                triplet: t,
                other: self.triplets[t.index()].tail,
                outgoing: true,
            }));
        }
        if matches!(direction, Direction::In | Direction::Both) {
            out.extend(self.in_adj[id.index()].iter().map(|&t| Neighbor {
                triplet: t,
                other: self.triplets[t.index()].head,
                outgoing: false,
            }));
        }
        out.sort_by_cached_key(|n| {
            (
                self.folded_name(n.other),
                self.triplets[n.triplet.index()].relation.0.clone(),
                !n.outgoing,
                n.triplet,
            )
        });
        Ok(out)
    }

    /// Triplet ids incident to `id` in either direction, unsorted.
    pub(crate) fn incident(&self, id: EntityId) -> impl Iterator<Item = TripletId> + '_ {
        self.out_adj[id.index()]
            .iter()
            .chain(self.in_adj[id.index()].iter())
            .copied()
    }

    /// Number of incident triplets, ignoring direction.
    pub fn degree(&self, id: EntityId) -> usize {
        self.out_adj[id.index()].len() + self.in_adj[id.index()].len()
    }

    /// A new graph holding exactly `ids` and every triplet with both
    /// endpoints among them. Entity ids are renumbered in ascending order of
    /// the originals.
    pub fn induced_subgraph<I>(&self, ids: I) -> Result<KnowledgeGraph>
    where
        I: IntoIterator<Item = EntityId>,
    {
        let keep: BTreeSet<EntityId> = ids.into_iter().collect();
        for &id in &keep {
            self.check(id)?;
        }
        let mut builder = GraphBuilder::new();
        let mut remap = HashMap::with_capacity(keep.len());
        for &id in &keep {
            let new_id = builder.add_entity(self.entities[id.index()].clone())?;
            remap.insert(id, new_id);
        }
        for t in &self.triplets {
            if let (Some(&h), Some(&tl)) = (remap.get(&t.head), remap.get(&t.tail)) {
                builder.insert_triplet_unchecked(
                    h,
                    t.relation.clone(),
                    tl,
                    t.paper_count,
                    t.provenance,
                );
            }
        }
        Ok(builder.freeze())
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats::compute(self)
    }

    /// Reopens the graph for mutation.
    pub fn into_builder(self) -> GraphBuilder {
        GraphBuilder { graph: self }
    }

    fn content_key(&self) -> (Vec<EntityKey>, Vec<TripletKey>) {
        let mut entities: Vec<EntityKey> = self
            .entities
            .iter()
            .map(|e| {
                (
                    fold(&e.canonical_name),
                    e.canonical_name.clone(),
                    e.layer.clone(),
                    e.identifier.clone(),
                    e.ontology_source.clone(),
                    e.aliases.clone(),
                    e.definition.clone(),
                )
            })
            .collect();
        entities.sort();
        let mut triplets: Vec<TripletKey> = self
            .triplets
            .iter()
            .map(|t| {
                (
                    fold(self.name(t.head)),
                    t.relation.0.clone(),
                    fold(self.name(t.tail)),
                    t.paper_count,
                    t.provenance,
                )
            })
            .collect();
        triplets.sort();
        (entities, triplets)
    }
}

type EntityKey = (String, String, Layer, String, String, Vec<String>, String);
type TripletKey = (String, String, String, u32, Provenance);

/// Content equality: same entities (all fields) and same triplets, keyed
/// by names rather than internal ids.
impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.content_key() == other.content_key()
    }
}

impl Eq for KnowledgeGraph {}

/// Mutable build-phase graph.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    graph: KnowledgeGraph,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Read access to the partially built graph.
    pub fn graph(&self) -> &KnowledgeGraph {
        &self.graph
    }

    pub fn freeze(self) -> KnowledgeGraph {
        self.graph
    }

    fn name_taken(&self, key: &str) -> bool {
        self.graph.canonical_index.contains_key(key) || self.graph.alias_index.contains_key(key)
    }

    pub fn add_entity(&mut self, mut entity: Entity) -> Result<EntityId> {
        entity.canonical_name = entity.canonical_name.trim().to_string();
        if entity.canonical_name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        if !entity.layer.is_valid() {
            return Err(GraphError::InvalidLayer(entity.layer.code().to_string()));
        }
        let key = fold(&entity.canonical_name);
        if self.name_taken(&key) {
            return Err(GraphError::DuplicateName(entity.canonical_name));
        }

        let mut alias_keys: Vec<(String, String)> = Vec::new();
        for alias in &entity.aliases {
            let alias = alias.trim();
            if alias.is_empty() {
                return Err(GraphError::EmptyName);
            }
            let alias_key = fold(alias);
            if alias_key == key || alias_keys.iter().any(|(k, _)| *k == alias_key) {
                continue;
            }
            if self.name_taken(&alias_key) {
                return Err(GraphError::DuplicateName(alias.to_string()));
            }
            alias_keys.push((alias_key, alias.to_string()));
        }
        alias_keys.sort();

        if !entity.identifier.is_empty()
            && self.graph.identifier_index.contains_key(&entity.identifier)
        {
            return Err(GraphError::DuplicateIdentifier(entity.identifier));
        }

        let id = EntityId::from_index(self.graph.entities.len());
        self.graph.canonical_index.insert(key, id);
        for (alias_key, _) in &alias_keys {
            self.graph.alias_index.insert(alias_key.clone(), id);
        }
        if !entity.identifier.is_empty() {
            self.graph
                .identifier_index
                .insert(entity.identifier.clone(), id);
        }
        entity.aliases = alias_keys.into_iter().map(|(_, a)| a).collect();
        self.graph.entities.push(entity);
        self.graph.out_adj.push(Vec::new());
        self.graph.in_adj.push(Vec::new());
        Ok(id)
    }

    /// Attaches an extra alias to an existing entity. Re-adding a name the
    /// entity already answers to is a no-op.
    pub fn add_alias(&mut self, id: EntityId, alias: &str) -> Result<()> {
        self.graph.check(id)?;
        let alias = alias.trim();
        if alias.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let key = fold(alias);
        match self
            .graph
            .canonical_index
            .get(&key)
            .or_else(|| self.graph.alias_index.get(&key))
        {
            Some(&owner) if owner == id => return Ok(()),
            Some(_) => return Err(GraphError::DuplicateName(alias.to_string())),
            None => {}
        }
        self.graph.alias_index.insert(key, id);
        let entity = &mut self.graph.entities[id.index()];
        entity.aliases.push(alias.to_string());
        entity.aliases.sort_by_cached_key(|a| fold(a));
        Ok(())
    }

    /// Inserts a triplet, or merges it into an existing `(head, relation,
    /// tail)`: counts are summed and a manual provenance takes precedence.
    pub fn add_triplet(
        &mut self,
        head: EntityId,
        relation: RelationLabel,
        tail: EntityId,
        paper_count: u32,
        provenance: Provenance,
    ) -> Result<AddOutcome> {
        self.graph.check(head)?;
        self.graph.check(tail)?;
        if head == tail {
            return Err(GraphError::SelfLoop(self.graph.name(head).to_string()));
        }
        if paper_count == 0 {
            return Err(GraphError::NonpositiveCount);
        }
        Ok(self.insert_triplet_unchecked(head, relation, tail, paper_count, provenance))
    }

    fn insert_triplet_unchecked(
        &mut self,
        head: EntityId,
        relation: RelationLabel,
        tail: EntityId,
        paper_count: u32,
        provenance: Provenance,
    ) -> AddOutcome {
        let key = (head, relation.0.clone(), tail);
        if let Some(&tid) = self.graph.edge_index.get(&key) {
            let existing = &mut self.graph.triplets[tid.index()];
            existing.paper_count = existing.paper_count.saturating_add(paper_count);
            if provenance == Provenance::Manual {
                existing.provenance = Provenance::Manual;
            }
            return AddOutcome::Merged(tid);
        }
        let tid = TripletId::from_index(self.graph.triplets.len());
        self.graph.triplets.push(Triplet {
            head,
            relation,
            tail,
            paper_count,
            provenance,
        });
        self.graph.edge_index.insert(key, tid);
        self.graph.out_adj[head.index()].push(tid);
        self.graph.in_adj[tail.index()].push(tid);
        AddOutcome::Inserted(tid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(name: &str) -> RelationLabel {
        RelationLabel::new(name).unwrap()
    }

    #[test]
    fn add_entity_indexes_name_and_alias() {
        let mut b = GraphBuilder::new();
        let id = b
            .add_entity(Entity::new("Valproate", Layer::Treatment).with_alias("VPA"))
            .unwrap();
        let g = b.graph();
        assert_eq!(g.find_canonical("valproate"), Some(id));
        assert_eq!(g.find_alias("vpa"), Some(id));
        assert_eq!(g.find_canonical("VPA"), None);
    }

    #[test]
    fn case_folded_duplicate_name_rejected() {
        let mut b = GraphBuilder::new();
        b.add_entity(Entity::new("Valproate", Layer::Treatment))
            .unwrap();
        let err = b
            .add_entity(Entity::new("valproate", Layer::Treatment))
            .unwrap_err();
        assert!(matches!(err, GraphError::DuplicateName(_)));
    }

    #[test]
    fn alias_collisions_rejected() {
        let mut b = GraphBuilder::new();
        b.add_entity(Entity::new("Valproate", Layer::Treatment).with_alias("VPA"))
            .unwrap();
        let err = b
            .add_entity(Entity::new("Valproic acid", Layer::Treatment).with_alias("VPA"))
            .unwrap_err();
        assert_eq!(err, GraphError::DuplicateName("VPA".into()));
        // alias equal to someone else's canonical name
        let err = b
            .add_entity(Entity::new("Depakote", Layer::Treatment).with_alias("valproate"))
            .unwrap_err();
        assert!(matches!(err, GraphError::DuplicateName(_)));
        // canonical equal to someone else's alias
        let err = b.add_entity(Entity::new("vpa", Layer::Gene)).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateName(_)));
        assert_eq!(b.graph().entity_count(), 1);
    }

    #[test]
    fn empty_name_rejected() {
        let mut b = GraphBuilder::new();
        assert_eq!(
            b.add_entity(Entity::new("   ", Layer::Gene)),
            Err(GraphError::EmptyName)
        );
        assert_eq!(
            b.add_entity(Entity::new("X", Layer::Other(String::new()))),
            Err(GraphError::InvalidLayer(String::new()))
        );
    }

    #[test]
    fn triplet_insert_and_merge() {
        let mut b = GraphBuilder::new();
        let v = b
            .add_entity(Entity::new("Valproate", Layer::Treatment))
            .unwrap();
        let d = b
            .add_entity(Entity::new("Dravet Syndrome", Layer::Syndrome))
            .unwrap();
        let first = b
            .add_triplet(v, rel("treats"), d, 3, Provenance::RuleBased)
            .unwrap();
        assert!(matches!(first, AddOutcome::Inserted(_)));
        assert!(!b.graph().triplet(first.id()).unwrap().is_low_evidence());
        let second = b
            .add_triplet(v, rel("treats"), d, 2, Provenance::ExternalExtractor)
            .unwrap();
        assert_eq!(second, AddOutcome::Merged(first.id()));
        let t = b.graph().triplet(first.id()).unwrap();
        assert_eq!(t.paper_count(), 5);
        assert_eq!(t.provenance(), Provenance::RuleBased);
        b.add_triplet(v, rel("treats"), d, 1, Provenance::Manual)
            .unwrap();
        assert_eq!(
            b.graph().triplet(first.id()).unwrap().provenance(),
            Provenance::Manual
        );
        assert_eq!(b.graph().triplet_count(), 1);
    }

    #[test]
    fn low_evidence_tracks_count() {
        let mut b = GraphBuilder::new();
        let a = b.add_entity(Entity::new("A", Layer::Gene)).unwrap();
        let c = b.add_entity(Entity::new("C", Layer::Syndrome)).unwrap();
        let t = b
            .add_triplet(a, rel("associated_with"), c, 1, Provenance::Manual)
            .unwrap();
        assert!(b.graph().triplet(t.id()).unwrap().is_low_evidence());
        b.add_triplet(a, rel("associated_with"), c, 1, Provenance::Manual)
            .unwrap();
        assert!(!b.graph().triplet(t.id()).unwrap().is_low_evidence());
    }

    #[test]
    fn triplet_errors() {
        let mut b = GraphBuilder::new();
        let x = b.add_entity(Entity::new("X", Layer::Gene)).unwrap();
        assert_eq!(
            b.add_triplet(x, rel("treats"), x, 1, Provenance::Manual),
            Err(GraphError::SelfLoop("X".into()))
        );
        let y = b.add_entity(Entity::new("Y", Layer::Gene)).unwrap();
        assert_eq!(
            b.add_triplet(x, rel("treats"), y, 0, Provenance::Manual),
            Err(GraphError::NonpositiveCount)
        );
        let ghost = EntityId::from_index(9);
        assert!(matches!(
            b.add_triplet(x, rel("treats"), ghost, 1, Provenance::Manual),
            Err(GraphError::UnknownEntity(_))
        ));
    }

    #[test]
    fn layer_parsing() {
        assert_eq!("L3".parse::<Layer>().unwrap(), Layer::Gene);
        assert_eq!("treatment".parse::<Layer>().unwrap(), Layer::Treatment);
        assert_eq!(
            "Protein".parse::<Layer>().unwrap(),
            Layer::Other("Protein".into())
        );
        assert!("L9".parse::<Layer>().is_err());
        assert!("".parse::<Layer>().is_err());
        assert!(Layer::other("Syndrome").is_err());
        assert_eq!(Layer::Outcome.to_string(), "L5");
    }

    #[test]
    fn relation_canonical_flag_is_case_sensitive() {
        assert!(rel("treats").is_canonical());
        assert!(!rel("Treats").is_canonical());
        assert!(!rel("treated_with").is_canonical());
        assert!(RelationLabel::new("  ").is_err());
    }

    #[test]
    fn star_neighbors_in_name_order() {
        let mut b = GraphBuilder::new();
        let a = b.add_entity(Entity::new("A", Layer::Gene)).unwrap();
        let c = b.add_entity(Entity::new("C", Layer::Gene)).unwrap();
        let bb = b.add_entity(Entity::new("B", Layer::Gene)).unwrap();
        b.add_triplet(a, rel("r"), c, 1, Provenance::Manual)
            .unwrap();
        b.add_triplet(a, rel("r"), bb, 1, Provenance::Manual)
            .unwrap();
        let g = b.freeze();
        let out: Vec<_> = g
            .neighbors(a, Direction::Out)
            .unwrap()
            .into_iter()
            .map(|n| n.other)
            .collect();
        assert_eq!(out, vec![bb, c]);
        assert!(g.neighbors(a, Direction::In).unwrap().is_empty());
        assert!(g.neighbors(EntityId::from_index(7), Direction::In).is_err());
    }

    #[test]
    fn induced_subgraph_of_triangle() {
        let mut b = GraphBuilder::new();
        let a = b.add_entity(Entity::new("A", Layer::Gene)).unwrap();
        let bb = b.add_entity(Entity::new("B", Layer::Gene)).unwrap();
        let c = b.add_entity(Entity::new("C", Layer::Gene)).unwrap();
        b.add_triplet(a, rel("r"), bb, 1, Provenance::Manual)
            .unwrap();
        b.add_triplet(bb, rel("r"), c, 1, Provenance::Manual)
            .unwrap();
        b.add_triplet(c, rel("r"), a, 1, Provenance::Manual)
            .unwrap();
        let g = b.freeze();
        let sub = g.induced_subgraph([a, bb]).unwrap();
        assert_eq!(sub.entity_count(), 2);
        assert_eq!(sub.triplet_count(), 1);
        assert_eq!(g.induced_subgraph(g.entity_ids()).unwrap(), g);
        assert!(g.induced_subgraph([EntityId::from_index(3)]).is_err());
    }

    #[test]
    fn add_alias_after_the_fact() {
        let mut b = GraphBuilder::new();
        let s = b.add_entity(Entity::new("SCN1A", Layer::Gene)).unwrap();
        let v = b
            .add_entity(Entity::new("Valproate", Layer::Treatment))
            .unwrap();
        b.add_alias(s, "Nav1.1").unwrap();
        b.add_alias(s, "nav1.1").unwrap();
        assert_eq!(b.graph().find_alias("NAV1.1"), Some(s));
        assert!(b.add_alias(v, "Nav1.1").is_err());
        assert_eq!(b.graph().entity(s).unwrap().aliases(), ["Nav1.1"]);
    }

    #[test]
    fn fold_collapses_whitespace() {
        assert_eq!(fold("  Dravet \t Syndrome "), "dravet syndrome");
    }
}
