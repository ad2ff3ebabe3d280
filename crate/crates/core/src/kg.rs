//! In-memory knowledge graph: interned labels plus CSR adjacency in both
//! edge directions.
//!
//! A graph is built once from a TSV triple stream and is immutable after
//! that. Ids are assigned by interning in first-appearance order over the
//! deduplicated, lexicographically sorted triple list, so the same multiset of
//! lines always yields the same ids regardless of input order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Dense handle into the entity label table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

/// Dense handle into the relation label table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

/// Which adjacency lists a neighbor query reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outgoing,
    Incoming,
    #[default]
    Both,
}

/// Orientation of a traversed edge relative to the stored triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeDir {
    /// Walked subject → object.
    Forward,
    /// Walked object → subject.
    Reverse,
}

impl EdgeDir {
    pub fn arrow(self) -> &'static str {
        match self {
            EdgeDir::Forward => "→",
            EdgeDir::Reverse => "←",
        }
    }

    pub fn from_arrow(s: &str) -> Option<Self> {
        match s {
            "→" => Some(EdgeDir::Forward),
            "←" => Some(EdgeDir::Reverse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Neighbor {
    pub relation: RelationId,
    pub entity: EntityId,
    pub dir: EdgeDir,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: field {field} is empty")]
    EmptyField { line: usize, field: usize },
    #[error("line {line}: {message}")]
    Io { line: usize, message: String },
}

impl LoadError {
    pub fn line(&self) -> usize {
        match self {
            LoadError::FieldCount { line, .. }
            | LoadError::EmptyField { line, .. }
            | LoadError::Io { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown entity id {0}")]
    UnknownEntity(EntityId),
    #[error("unknown relation id {0:?}")]
    UnknownRelation(RelationId),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

/// NFC-normalize and trim a label. This is the stored form.
pub fn canonical_label(label: &str) -> String {
    label.trim().nfc().collect()
}

/// Lookup key: canonical form, case-folded.
pub fn lookup_key(label: &str) -> String {
    canonical_label(label).to_lowercase()
}

/// Display form of a label: homonyms are stored as `label#n` and display as
/// `label`. A `#` not followed by a non-empty run of ASCII digits is part of
/// the label proper.
pub fn display_label(label: &str) -> &str {
    match label.rfind('#') {
        Some(pos)
            if pos > 0
                && pos + 1 < label.len()
                && label[pos + 1..].bytes().all(|b| b.is_ascii_digit()) =>
        {
            &label[..pos]
        }
        _ => label,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct LabelTable {
    labels: Vec<String>,
    exact: HashMap<String, u32>,
    folded: HashMap<String, Vec<u32>>,
}

impl LabelTable {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.exact.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.exact.insert(label.to_owned(), id);
        self.folded.entry(label.to_lowercase()).or_default().push(id);
        id
    }

    fn lookup(&self, label: &str) -> Option<u32> {
        let canonical = canonical_label(label);
        if let Some(&id) = self.exact.get(&canonical) {
            return Some(id);
        }
        // ids within a folded bucket are ascending by construction
        self.folded
            .get(&canonical.to_lowercase())
            .and_then(|ids| ids.first().copied())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u32>,
    edges: Vec<(RelationId, EntityId)>,
}

impl Csr {
    fn build(n: usize, mut pairs: Vec<(EntityId, RelationId, EntityId)>) -> Self {
        pairs.sort_unstable();
        let mut offsets = vec![0u32; n + 1];
        for &(from, _, _) in &pairs {
            offsets[from.index() + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let edges = pairs.into_iter().map(|(_, r, e)| (r, e)).collect();
        Csr { offsets, edges }
    }

    fn row(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        let i = e.index();
        &self.edges[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// Immutable directed multigraph of `(subject, relation, object)` triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: LabelTable,
    relations: LabelTable,
    out_adj: Csr,
    in_adj: Csr,
    triple_count: usize,
}

impl KnowledgeGraph {
    /// Parse the TSV triple format. `#`-prefixed and blank lines are skipped.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, LoadError> {
        let mut raw = BTreeSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| LoadError::Io {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(LoadError::FieldCount {
                    line: line_no,
                    found: fields.len(),
                });
            }
            let mut canon = [String::new(), String::new(), String::new()];
            for (i, field) in fields.iter().enumerate() {
                let c = canonical_label(field);
                if c.is_empty() {
                    return Err(LoadError::EmptyField {
                        line: line_no,
                        field: i + 1,
                    });
                }
                canon[i] = c;
            }
            let [s, r, o] = canon;
            raw.insert((s, r, o));
        }
        Ok(Self::from_sorted_labels(raw))
    }

    pub fn from_str_tsv(text: &str) -> Result<Self, LoadError> {
        Self::load(text.as_bytes())
    }

    /// Build from label triples already in canonical form. Used by `load`
    /// and by the graph generators.
    pub fn from_label_triples<I, S>(triples: I) -> Self
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let raw: BTreeSet<(String, String, String)> = triples
            .into_iter()
            .map(|(s, r, o)| {
                (
                    canonical_label(s.as_ref()),
                    canonical_label(r.as_ref()),
                    canonical_label(o.as_ref()),
                )
            })
            .filter(|(s, r, o)| !s.is_empty() && !r.is_empty() && !o.is_empty())
            .collect();
        Self::from_sorted_labels(raw)
    }

    fn from_sorted_labels(raw: BTreeSet<(String, String, String)>) -> Self {
        let mut entities = LabelTable::default();
        let mut relations = LabelTable::default();
        let mut triples = Vec::with_capacity(raw.len());
        for (s, r, o) in &raw {
            let s = EntityId(entities.intern(s));
            let r = RelationId(relations.intern(r));
            let o = EntityId(entities.intern(o));
            triples.push((s, r, o));
        }
        let n = entities.labels.len();
        let out_adj = Csr::build(n, triples.clone());
        let in_adj = Csr::build(n, triples.iter().map(|&(s, r, o)| (o, r, s)).collect());
        KnowledgeGraph {
            entities,
            relations,
            out_adj,
            in_adj,
            triple_count: triples.len(),
        }
    }

    pub fn entity_count(&self) -> usize {
        self.entities.labels.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.labels.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triple_count
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entity_count() as u32).map(EntityId)
    }

    pub fn contains(&self, e: EntityId) -> bool {
        e.index() < self.entity_count()
    }

    pub fn check(&self, e: EntityId) -> Result<(), GraphError> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(GraphError::UnknownEntity(e))
        }
    }

    /// Full interned label, including any `#n` homonym suffix.
    pub fn entity_label(&self, e: EntityId) -> &str {
        &self.entities.labels[e.index()]
    }

    pub fn entity_display(&self, e: EntityId) -> &str {
        display_label(self.entity_label(e))
    }

    pub fn relation_label(&self, r: RelationId) -> &str {
        &self.relations.labels[r.index()]
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entities.labels
    }

    /// Exact lookup after canonicalization; falls back to a case-folded
    /// match (lowest id wins when several labels fold together).
    pub fn entity_by_label(&self, label: &str) -> Option<EntityId> {
        self.entities.lookup(label).map(EntityId)
    }

    pub fn relation_by_label(&self, label: &str) -> Option<RelationId> {
        self.relations.lookup(label).map(RelationId)
    }

    pub fn out_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        self.out_adj.row(e)
    }

    pub fn in_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        self.in_adj.row(e)
    }

    /// Allocation-free neighbor scan. Outgoing edges come first, each list
    /// sorted by relation id then entity id.
    pub fn neighbors_iter(&self, e: EntityId, direction: Direction) -> NeighborIter<'_> {
        let (out, inc): (&[_], &[_]) = match direction {
            Direction::Outgoing => (self.out_adj.row(e), &[]),
            Direction::Incoming => (&[], self.in_adj.row(e)),
            Direction::Both => (self.out_adj.row(e), self.in_adj.row(e)),
        };
        NeighborIter {
            out: out.iter(),
            inc: inc.iter(),
        }
    }

    pub fn neighbors(&self, e: EntityId, direction: Direction) -> Result<Vec<Neighbor>, GraphError> {
        self.check(e)?;
        Ok(self.neighbors_iter(e, direction).collect())
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.entity_ids().flat_map(move |s| {
            self.out_edges(s).iter().map(move |&(relation, object)| Triple {
                subject: s,
                relation,
                object,
            })
        })
    }

    /// Whether the edge `(from, relation, to)` exists when walked in `dir`.
    pub fn has_edge(&self, from: EntityId, relation: RelationId, dir: EdgeDir, to: EntityId) -> bool {
        if !self.contains(from) || !self.contains(to) {
            return false;
        }
        let row = match dir {
            EdgeDir::Forward => self.out_adj.row(from),
            EdgeDir::Reverse => self.in_adj.row(from),
        };
        row.binary_search(&(relation, to)).is_ok()
    }

    pub fn to_snapshot(&self) -> Vec<u8> {
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            entities: self.entities.labels.clone(),
            relations: self.relations.labels.clone(),
            triples: self
                .triples()
                .map(|t| [t.subject.0, t.relation.0, t.object.0])
                .collect(),
        };
        serde_json::to_vec(&snap).expect("snapshot serializes")
    }

    pub fn from_snapshot(bytes: &[u8]) -> Result<Self, GraphError> {
        let snap: Snapshot =
            serde_json::from_slice(bytes).map_err(|e| GraphError::Snapshot(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(GraphError::Snapshot(format!(
                "unsupported version {}",
                snap.version
            )));
        }
        let triples = snap
            .triples
            .into_iter()
            .map(|[s, r, o]| (EntityId(s), RelationId(r), EntityId(o)))
            .collect();
        Self::from_parts(snap.entities, snap.relations, triples)
    }

    /// Build from explicit label tables and id triples. Label order fixes id
    /// assignment; labels must already be canonical and unique.
    pub fn from_parts(
        entity_labels: Vec<String>,
        relation_labels: Vec<String>,
        mut triples: Vec<(EntityId, RelationId, EntityId)>,
    ) -> Result<Self, GraphError> {
        let mut entities = LabelTable::default();
        for l in &entity_labels {
            entities.intern(l);
        }
        let mut relations = LabelTable::default();
        for l in &relation_labels {
            relations.intern(l);
        }
        if entities.labels.len() != entity_labels.len() || relations.labels.len() != relation_labels.len() {
            return Err(GraphError::Snapshot("duplicate labels".into()));
        }
        let n = entities.labels.len();
        let nr = relations.labels.len();
        if triples
            .iter()
            .any(|(s, r, o)| s.index() >= n || o.index() >= n || r.index() >= nr)
        {
            return Err(GraphError::Snapshot("triple id out of range".into()));
        }
        triples.sort_unstable();
        triples.dedup();
        let out_adj = Csr::build(n, triples.clone());
        let in_adj = Csr::build(n, triples.iter().map(|&(s, r, o)| (o, r, s)).collect());
        Ok(KnowledgeGraph {
            entities,
            relations,
            out_adj,
            in_adj,
            triple_count: triples.len(),
        })
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    entities: Vec<String>,
    relations: Vec<String>,
    triples: Vec<[u32; 3]>,
}

pub struct NeighborIter<'a> {
    out: std::slice::Iter<'a, (RelationId, EntityId)>,
    inc: std::slice::Iter<'a, (RelationId, EntityId)>,
}

impl Iterator for NeighborIter<'_> {
    type Item = Neighbor;

    fn next(&mut self) -> Option<Neighbor> {
        if let Some(&(relation, entity)) = self.out.next() {
            return Some(Neighbor {
                relation,
                entity,
                dir: EdgeDir::Forward,
            });
        }
        self.inc.next().map(|&(relation, entity)| Neighbor {
            relation,
            entity,
            dir: EdgeDir::Reverse,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.out.len() + self.inc.len();
        (n, Some(n))
    }
}

impl ExactSizeIterator for NeighborIter<'_> {}

#[cfg(test)]
mod tests {
    use super::*;

    const SUN: &str = "Sun\temits\tfull-spectrum light\nfull-spectrum light\tintegrates into\twhite light\n";

    #[test]
    fn loads_sun_graph() {
        let g = KnowledgeGraph::from_str_tsv(SUN).unwrap();
        assert_eq!(g.entity_count(), 3);
        assert_eq!(g.relation_count(), 2);
        assert_eq!(g.triple_count(), 2);
    }

    #[test]
    fn empty_input_is_empty_graph() {
        let g = KnowledgeGraph::from_str_tsv("").unwrap();
        assert_eq!(g.entity_count(), 0);
        assert_eq!(g.triple_count(), 0);
    }

    #[test]
    fn duplicates_collapse() {
        let g = KnowledgeGraph::from_str_tsv("a\tr\tb\na\tr\tb\na\tr\tb\n").unwrap();
        assert_eq!(g.triple_count(), 1);
    }

    #[test]
    fn comments_and_crlf() {
        let g = KnowledgeGraph::from_str_tsv("# header\r\na\tr\tb\r\n\n").unwrap();
        assert_eq!(g.triple_count(), 1);
        assert_eq!(g.entity_label(EntityId(1)), "b");
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = KnowledgeGraph::from_str_tsv("a\tr\tb\na\tr\n").unwrap_err();
        assert_eq!(err, LoadError::FieldCount { line: 2, found: 2 });
        let err = KnowledgeGraph::from_str_tsv("# c\na\t \tb\n").unwrap_err();
        assert_eq!(err, LoadError::EmptyField { line: 2, field: 2 });
        assert_eq!(err.line(), 2);
    }

    #[test]
    fn ids_follow_sorted_first_appearance() {
        let g = KnowledgeGraph::from_str_tsv(SUN).unwrap();
        // "Sun..." sorts before "full-spectrum..." bytewise
        assert_eq!(g.entity_by_label("Sun"), Some(EntityId(0)));
        assert_eq!(g.entity_by_label("full-spectrum light"), Some(EntityId(1)));
        assert_eq!(g.entity_by_label("white light"), Some(EntityId(2)));
        let reversed: String = SUN.lines().rev().map(|l| format!("{l}\n")).collect();
        let h = KnowledgeGraph::from_str_tsv(&reversed).unwrap();
        assert_eq!(g.to_snapshot(), h.to_snapshot());
    }

    #[test]
    fn neighbor_queries() {
        let g = KnowledgeGraph::from_str_tsv(SUN).unwrap();
        let sun = g.entity_by_label("Sun").unwrap();
        let fsl = g.entity_by_label("full-spectrum light").unwrap();
        let white = g.entity_by_label("white light").unwrap();
        let emits = g.relation_by_label("emits").unwrap();
        let integ = g.relation_by_label("integrates into").unwrap();

        assert_eq!(
            g.neighbors(sun, Direction::Outgoing).unwrap(),
            vec![Neighbor { relation: emits, entity: fsl, dir: EdgeDir::Forward }]
        );
        assert!(g.neighbors(white, Direction::Outgoing).unwrap().is_empty());
        assert_eq!(
            g.neighbors(fsl, Direction::Both).unwrap(),
            vec![
                Neighbor { relation: integ, entity: white, dir: EdgeDir::Forward },
                Neighbor { relation: emits, entity: sun, dir: EdgeDir::Reverse },
            ]
        );
        assert_eq!(
            g.neighbors(EntityId(9), Direction::Both),
            Err(GraphError::UnknownEntity(EntityId(9)))
        );
    }

    #[test]
    fn lookup_canonicalizes() {
        let g = KnowledgeGraph::from_str_tsv(SUN).unwrap();
        assert_eq!(g.entity_by_label("SUN"), g.entity_by_label("Sun"));
        assert_eq!(g.entity_by_label("  Sun "), Some(EntityId(0)));
        assert_eq!(g.entity_by_label("Mars"), None);
        // stored casing is preserved
        assert_eq!(g.entity_label(EntityId(0)), "Sun");
    }

    #[test]
    fn nfc_normalization() {
        // "é" decomposed vs composed
        let g = KnowledgeGraph::from_str_tsv("Caf\u{65}\u{301}\tr\tx\n").unwrap();
        assert_eq!(g.entity_by_label("Caf\u{e9}"), Some(EntityId(0)));
        assert_eq!(g.entity_label(EntityId(0)), "Caf\u{e9}");
    }

    #[test]
    fn homonym_display() {
        assert_eq!(display_label("Apple#1"), "Apple");
        assert_eq!(display_label("Apple#12"), "Apple");
        assert_eq!(display_label("C#"), "C#");
        assert_eq!(display_label("#1"), "#1");
        assert_eq!(display_label("a#b"), "a#b");
    }

    #[test]
    fn has_edge_respects_direction() {
        let g = KnowledgeGraph::from_str_tsv(SUN).unwrap();
        let (sun, fsl) = (EntityId(0), EntityId(1));
        let emits = g.relation_by_label("emits").unwrap();
        assert!(g.has_edge(sun, emits, EdgeDir::Forward, fsl));
        assert!(g.has_edge(fsl, emits, EdgeDir::Reverse, sun));
        assert!(!g.has_edge(fsl, emits, EdgeDir::Forward, sun));
    }

    #[test]
    fn snapshot_round_trip() {
        let g = KnowledgeGraph::from_str_tsv(SUN).unwrap();
        let bytes = g.to_snapshot();
        let back = KnowledgeGraph::from_snapshot(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_snapshot(), bytes);
        assert!(KnowledgeGraph::from_snapshot(b"{}").is_err());
    }
}
