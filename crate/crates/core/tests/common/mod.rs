//! Generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use kgrag::graph::{
    Entity, EntityId, GraphBuilder, KnowledgeGraph, Layer, Provenance, RelationLabel, TripletId,
};
use kgrag::retriever::{PrizeMap, Subgraph};
use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo")
}

const RELATIONS: [&str; 7] = [
    "treats",
    "contraindicated_with",
    "associated_with",
    "characteristic_of",
    "encodes",
    "expressed_in",
    "treated_with",
];

/// A random connected multigraph: a random spanning tree plus `extra`
/// further edges (parallel edges allowed, self-loops excluded).
pub fn random_connected_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
) -> (KnowledgeGraph, Vec<EntityId>) {
    let mut b = GraphBuilder::new();
    let ids: Vec<EntityId> = (0..n)
        .map(|i| {
            let layer = Layer::NUMBERED[rng.random_range(0..5)].clone();
            b.add_entity(Entity::new(format!("Node {i:02}"), layer))
                .unwrap()
        })
        .collect();
    let add = |b: &mut GraphBuilder, rng: &mut ChaCha8Rng, u: usize, v: usize| {
        let (h, t) = if rng.random_bool(0.5) { (u, v) } else { (v, u) };
        let rel = RelationLabel::new(RELATIONS.choose(rng).unwrap()).unwrap();
        b.add_triplet(
            ids[h],
            rel,
            ids[t],
            rng.random_range(1..20),
            Provenance::Manual,
        )
        .unwrap();
    };
    for v in 1..n {
        let u = rng.random_range(0..v);
        add(&mut b, rng, u, v);
    }
    if n >= 2 {
        for _ in 0..extra {
            let u = rng.random_range(0..n);
            let mut v = rng.random_range(0..n);
            while v == u {
                v = rng.random_range(0..n);
            }
            add(&mut b, rng, u, v);
        }
    }
    (b.freeze(), ids)
}

pub fn random_seeds(rng: &mut ChaCha8Rng, ids: &[EntityId], max: usize) -> Vec<EntityId> {
    let k = rng.random_range(1..=max.min(ids.len()));
    let mut seeds: Vec<EntityId> = ids.choose_multiple(rng, k).copied().collect();
    seeds.sort();
    seeds
}

/// Undirected multigraph adjacency counts built straight from the triplet list.
pub fn edge_multiplicity(graph: &KnowledgeGraph) -> HashMap<(usize, usize), usize> {
    let mut m = HashMap::new();
    for (_, t) in graph.triplets() {
        let (a, b) = (t.head().index(), t.tail().index());
        *m.entry((a, b)).or_insert(0) += 1;
        *m.entry((b, a)).or_insert(0) += 1;
    }
    m
}

/// Personalized PageRank by direct linear solve:
/// `(I - (1 - alpha) (W^T + s d^T)) r = alpha s`, where `d` marks isolated nodes.
pub fn dense_ppr(graph: &KnowledgeGraph, seeds: &[EntityId], alpha: f64) -> Vec<f64> {
    let n = graph.entity_count();
    let mult = edge_multiplicity(graph);
    let mut degree = vec![0usize; n];
    for (&(a, _), &c) in &mult {
        degree[a] += c;
    }
    let mut s = DVector::<f64>::zeros(n);
    let distinct: BTreeSet<EntityId> = seeds.iter().copied().collect();
    for id in &distinct {
        s[id.index()] = 1.0 / distinct.len() as f64;
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    for (&(i, j), &c) in &mult {
        // column i of W^T holds row i of W
        m[(j, i)] -= (1.0 - alpha) * c as f64 / degree[i] as f64;
    }
    for i in (0..n).filter(|&i| degree[i] == 0) {
        for j in 0..n {
            m[(j, i)] -= (1.0 - alpha) * s[j];
        }
    }
    let rhs = s * alpha;
    let r = m.lu().solve(&rhs).expect("PageRank system is non-singular");
    r.iter().copied().collect()
}

/// Whether `nodes` is connected using only edges among `nodes`.
pub fn connected_within(graph: &KnowledgeGraph, nodes: &BTreeSet<EntityId>) -> bool {
    let Some(&start) = nodes.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for (_, t) in graph.triplets() {
            let other = if t.head() == u {
                t.tail()
            } else if t.tail() == u {
                t.head()
            } else {
                continue;
            };
            if nodes.contains(&other) && seen.insert(other) {
                stack.push(other);
            }
        }
    }
    seen.len() == nodes.len()
}

/// Nodes within `depth` hops of a seed, by repeated frontier expansion.
pub fn within_depth(
    graph: &KnowledgeGraph,
    seeds: &[EntityId],
    depth: usize,
) -> BTreeSet<EntityId> {
    let mut reached: BTreeSet<EntityId> = seeds.iter().copied().collect();
    for _ in 0..depth {
        let mut next = reached.clone();
        for (_, t) in graph.triplets() {
            if reached.contains(&t.head()) {
                next.insert(t.tail());
            }
            if reached.contains(&t.tail()) {
                next.insert(t.head());
            }
        }
        reached = next;
    }
    reached
}

pub fn uniform_cost(prizes: &PrizeMap<f64>, candidates: &BTreeSet<EntityId>) -> f64 {
    candidates.iter().map(|&v| prizes.get(v)).sum::<f64>() / candidates.len() as f64
}

pub fn set_objective(prizes: &PrizeMap<f64>, nodes: &BTreeSet<EntityId>, cost: f64) -> f64 {
    nodes.iter().map(|&v| prizes.get(v)).sum::<f64>()
        - cost * (nodes.len().saturating_sub(1)) as f64
}

/// Best objective over every connected, seed-containing subset of
/// `candidates` with at most `budget` nodes.
pub fn brute_force_pcst(
    graph: &KnowledgeGraph,
    prizes: &PrizeMap<f64>,
    candidates: &BTreeSet<EntityId>,
    seeds: &[EntityId],
    budget: usize,
) -> f64 {
    let cost = uniform_cost(prizes, candidates);
    let pool: Vec<EntityId> = candidates.iter().copied().collect();
    assert!(pool.len() <= 16, "subset enumeration is exponential");
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1 << pool.len()) {
        if mask.count_ones() as usize > budget {
            continue;
        }
        let set: BTreeSet<EntityId> = (0..pool.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| pool[i])
            .collect();
        if !seeds.iter().any(|s| set.contains(s)) || !connected_within(graph, &set) {
            continue;
        }
        best = best.max(set_objective(prizes, &set, cost));
    }
    best
}

pub type PathKey = (EntityId, Vec<(TripletId, bool)>);

/// Seed-to-sink simple paths by enumerating every node sequence up to
/// `max_depth + 1` long and expanding each consecutive pair over all
/// connecting triplets.
pub fn brute_force_paths(
    graph: &KnowledgeGraph,
    subgraph: &Subgraph,
    seeds: &[EntityId],
    max_depth: usize,
) -> Vec<PathKey> {
    let nodes: Vec<EntityId> = subgraph.nodes().iter().copied().collect();
    let seed_set: BTreeSet<EntityId> = seeds
        .iter()
        .copied()
        .filter(|s| subgraph.contains(*s))
        .collect();
    let mut between: BTreeMap<(EntityId, EntityId), Vec<(TripletId, bool)>> = BTreeMap::new();
    for &tid in subgraph.edges() {
        let t = graph.triplet(tid).unwrap();
        between
            .entry((t.head(), t.tail()))
            .or_default()
            .push((tid, false));
        between
            .entry((t.tail(), t.head()))
            .or_default()
            .push((tid, true));
    }
    let neighbours = |v: EntityId| -> BTreeSet<EntityId> {
        between
            .keys()
            .filter(|(a, _)| *a == v)
            .map(|&(_, b)| b)
            .collect()
    };
    let non_seeds: Vec<EntityId> = nodes
        .iter()
        .copied()
        .filter(|v| !seed_set.contains(v))
        .collect();
    let leaves: BTreeSet<EntityId> = non_seeds
        .iter()
        .copied()
        .filter(|&v| neighbours(v).len() == 1)
        .collect();
    let sinks: BTreeSet<EntityId> = if leaves.is_empty() {
        non_seeds.into_iter().collect()
    } else {
        leaves
    };

    let mut out = Vec::new();
    let n = nodes.len();
    for &seed in &seed_set {
        for hops in 1..=max_depth {
            // odometer over n^hops node sequences
            let mut digits = vec![0usize; hops];
            loop {
                let mut seq = vec![seed];
                seq.extend(digits.iter().map(|&d| nodes[d]));
                let distinct: BTreeSet<EntityId> = seq.iter().copied().collect();
                if distinct.len() == seq.len() && sinks.contains(seq.last().unwrap()) {
                    let mut partial: Vec<Vec<(TripletId, bool)>> = vec![Vec::new()];
                    for w in seq.windows(2) {
                        let choices = between.get(&(w[0], w[1])).cloned().unwrap_or_default();
                        partial = partial
                            .into_iter()
                            .flat_map(|p| {
                                choices.iter().map(move |&c| {
                                    let mut q = p.clone();
                                    q.push(c);
                                    q
                                })
                            })
                            .collect();
                    }
                    out.extend(partial.into_iter().map(|p| (seed, p)));
                }
                let mut i = 0;
                loop {
                    if i == hops {
                        break;
                    }
                    digits[i] += 1;
                    if digits[i] < n {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == hops {
                    break;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParsedHop {
    pub head: String,
    pub relation: String,
    pub reversed: bool,
    pub paper_count: u32,
    pub tail: String,
}

/// Parses one rendered path line back into hops.
pub fn parse_context_line(line: &str) -> Option<Vec<ParsedHop>> {
    line.split(" -> ").map(parse_hop).collect()
}

fn parse_hop(hop: &str) -> Option<ParsedHop> {
    let inner = hop.strip_prefix('(')?.strip_suffix(')')?;
    let (head, rest) = inner.split_once(", ")?;
    let (relation_part, tail) = rest.rsplit_once(", ")?;
    let (label, count) = relation_part.strip_suffix("p]")?.rsplit_once('[')?;
    let (relation, reversed) = match label.strip_suffix("^-1") {
        Some(r) => (r, true),
        None => (label, false),
    };
    Some(ParsedHop {
        head: head.to_string(),
        relation: relation.to_string(),
        reversed,
        paper_count: count.parse().ok()?,
        tail: tail.to_string(),
    })
}

/// Classic full-table Levenshtein distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Memoized top-down longest-common-subsequence length.
pub fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

const SYLLABLES: [&str; 24] = [
    "ka", "do", "ri", "ve", "lu", "mo", "ta", "sen", "pra", "gil", "nor", "bex", "zu", "fa", "qui",
    "tor", "mel", "dra", "vin", "sol", "rak", "pem", "hul", "cor",
];

/// A capitalized pseudo-word of `syllables` random syllables.
pub fn pseudo_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    let mut w: String = (0..syllables)
        .map(|_| *SYLLABLES.choose(rng).unwrap())
        .collect();
    w[..1].make_ascii_uppercase();
    w
}

/// `count` pseudo-words with pairwise similarity below `max_similarity`
/// and below it against every word in `avoid`.
pub fn distinct_words(
    rng: &mut ChaCha8Rng,
    count: usize,
    max_similarity: f64,
    avoid: &[&str],
) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    while words.len() < count {
        let syll = rng.random_range(3..=4);
        let w = pseudo_word(rng, syll);
        let lw = w.to_lowercase();
        let clash = words
            .iter()
            .any(|o| similarity(&o.to_lowercase(), &lw) >= max_similarity)
            || avoid
                .iter()
                .any(|a| similarity(&a.to_lowercase(), &lw) >= max_similarity);
        if !clash {
            words.push(w);
        }
    }
    words
}

pub type NamedTriplet = (String, String, String);

/// A synthetic extraction corpus with its ground truth.
pub struct Corpus {
    pub graph: KnowledgeGraph,
    /// Sentences paired with the `(head, relation, tail)` names they state.
    pub sentences: Vec<(String, Option<NamedTriplet>)>,
}

const FILLER: [&str; 40] = [
    "in",
    "this",
    "cohort",
    "clinically",
    "according",
    "to",
    "recent",
    "studies",
    "most",
    "reports",
    "and",
    "were",
    "both",
    "mentioned",
    "the",
    "review",
    "alongside",
    "reviewed",
    "one",
    "was",
    "is",
    "should",
    "be",
    "carriers",
    "variants",
    "patients",
    "therapy",
    "remains",
    "proved",
    "strongly",
    "function",
    "expression",
    "functional",
    "protein",
    "highly",
    "often",
    "syndrome",
    "gene",
    "which",
    "consistent",
];

/// Six positive frames per template (two per trigger phrase) and a set of
/// distractors that name two entities without a trigger between them.
pub fn extraction_corpus(rng: &mut ChaCha8Rng, per_frame: usize) -> Corpus {
    let layers = [
        ("Syndrome", Layer::Syndrome),
        ("Diagnostic", Layer::Diagnostic),
        ("Gene", Layer::Gene),
        ("Treatment", Layer::Treatment),
        ("Protein", Layer::Other("Protein".into())),
        ("Anatomy", Layer::Other("Anatomy".into())),
    ];
    let words = distinct_words(rng, 6 * 6, 0.7, &FILLER);
    let mut b = GraphBuilder::new();
    let mut by_layer: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (i, (key, layer)) in layers.iter().enumerate() {
        for w in &words[i * 6..(i + 1) * 6] {
            let name = if *key == "Syndrome" {
                format!("{w} Syndrome")
            } else {
                w.clone()
            };
            b.add_entity(Entity::new(name.clone(), layer.clone()))
                .unwrap();
            by_layer.entry(key).or_default().push(name);
        }
    }
    let frames: [(&str, &str, &str, [&str; 6]); 6] = [
        (
            "Treatment",
            "Syndrome",
            "treats",
            [
                "{S} is recommended for {O}",
                "In this cohort, {S} was recommended for {O} in most reports",
                "{S} is first-line in {O}",
                "Clinically, {S} remains first-line therapy for {O}",
                "{S} is effective in {O}",
                "{S} proved effective in {O} according to recent studies",
            ],
        ),
        (
            "Treatment",
            "Gene",
            "contraindicated_with",
            [
                "{S} should be avoided in carriers of {O} variants",
                "{S} is best avoided in patients with {O}",
                "{S} is contraindicated with {O} loss of function",
                "{S} is contraindicated in {O} carriers",
                "{S} is not recommended with {O} variants",
                "In this cohort, {S} was not recommended for {O} carriers",
            ],
        ),
        (
            "Gene",
            "Syndrome",
            "associated_with",
            [
                "{S} is associated with {O}",
                "Variants in {S} are strongly associated with {O}",
                "{S} is linked to {O}",
                "{S} has been linked to {O} in recent studies",
                "{S} is implicated in {O}",
                "Loss of {S} is implicated in most {O} reports",
            ],
        ),
        (
            "Diagnostic",
            "Syndrome",
            "characteristic_of",
            [
                "{S} is characteristic of {O}",
                "{S} was characteristic of {O} in this cohort",
                "{S} is consistent with {O}",
                "Clinically, {S} is consistent with {O}",
                "{S} is seen in {O}",
                "{S} is often seen in {O} according to recent studies",
            ],
        ),
        (
            "Gene",
            "Protein",
            "encodes",
            [
                "{S} encodes {O}",
                "The gene {S} encodes the protein {O}",
                "{S} produces {O}",
                "{S} produces functional {O} in most reports",
                "{S} results in {O}",
                "Expression of {S} results in {O}",
            ],
        ),
        (
            "Gene",
            "Anatomy",
            "expressed_in",
            [
                "{S} is expressed in {O}",
                "{S} is highly expressed in {O}",
                "{S} is detected in {O}",
                "{S} was detected in {O} in this cohort",
                "{S} is localised to {O}",
                "{S} protein is localised to the {O}",
            ],
        ),
    ];
    let distractors = [
        "{S} and {O} were both mentioned in the review",
        "Recommended for review: {S} alongside {O}",
        "{S} and {O} were reviewed, and one was first-line",
        "{O} was reviewed alongside {S}, which is associated with it",
        "Consistent with the review, {S} and {O} were mentioned",
    ];

    let mut sentences = Vec::new();
    for (subj, obj, relation, patterns) in frames {
        for pattern in patterns {
            for _ in 0..per_frame {
                let s = by_layer[subj].choose(rng).unwrap().clone();
                let o = by_layer[obj].choose(rng).unwrap().clone();
                let text = format!("{}.", pattern.replace("{S}", &s).replace("{O}", &o));
                sentences.push((text, Some((s, relation.to_string(), o))));
            }
        }
        for pattern in distractors {
            for _ in 0..per_frame {
                let s = by_layer[subj].choose(rng).unwrap().clone();
                let o = by_layer[obj].choose(rng).unwrap().clone();
                sentences.push((
                    format!("{}.", pattern.replace("{S}", &s).replace("{O}", &o)),
                    None,
                ));
            }
        }
        // object before subject with the trigger between: wrong direction
        for _ in 0..per_frame {
            let s = by_layer[subj].choose(rng).unwrap().clone();
            let o = by_layer[obj].choose(rng).unwrap().clone();
            let reversed = patterns[0].replace("{S}", &o).replace("{O}", &s);
            sentences.push((format!("{reversed}."), None));
        }
    }
    Corpus {
        graph: b.freeze(),
        sentences,
    }
}
