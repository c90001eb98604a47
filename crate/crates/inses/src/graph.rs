//! Property-graph storage for subject-relation-object triples.
//!
//! Nodes are keyed by a canonical identifier (display name lowercased with
//! whitespace collapsed); the surface form survives as the `name` attribute.
//! Edges keep their stored direction, but adjacency is symmetric: a triple is
//! adjacent to a node set when either endpoint falls inside the set. Parallel
//! edges are allowed; an edge is identified by (head, relation, tail,
//! source_text) and exact duplicates are dropped during ingestion.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Attribute map attached to nodes. The `name` key holds the display form.
pub type AttributeMap = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("invalid triple record: {0}")]
    InvalidRecord(String),
    #[error("graph file does not start with a header record")]
    MissingHeader,
    #[error("unsupported graph file format {format:?} version {version}")]
    UnsupportedFormat { format: String, version: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Canonical node identifier: the node name lowercased, with runs of
/// whitespace collapsed to single spaces and outer whitespace trimmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: &str) -> Self {
        let lowered = name.to_lowercase();
        NodeId(lowered.split_whitespace().collect::<Vec<_>>().join(" "))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(name: &str) -> Self {
        NodeId::new(name)
    }
}

/// A directed edge as stored, with endpoints in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: NodeId,
    pub relation: String,
    pub tail: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_text: Option<String>,
}

impl Triple {
    pub fn endpoints(&self) -> [&NodeId; 2] {
        [&self.head, &self.tail]
    }

    /// True when the triple touches `node` at either end.
    pub fn touches(&self, node: &NodeId) -> bool {
        &self.head == node || &self.tail == node
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} → {} → {}", self.head, self.relation, self.tail)
    }
}

/// One line of the ingestion stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(default, skip_serializing_if = "AttributeMap::is_empty")]
    pub head_attrs: AttributeMap,
    #[serde(default, skip_serializing_if = "AttributeMap::is_empty")]
    pub tail_attrs: AttributeMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_text: Option<String>,
}

impl TripleRecord {
    pub fn new(head: &str, relation: &str, tail: &str) -> Self {
        TripleRecord {
            head: head.to_owned(),
            relation: relation.to_owned(),
            tail: tail.to_owned(),
            head_attrs: AttributeMap::new(),
            tail_attrs: AttributeMap::new(),
            source_text: None,
        }
    }

    pub fn with_source(mut self, source_text: &str) -> Self {
        self.source_text = Some(source_text.to_owned());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// 2·E/N, or 0 for the empty graph.
    pub average_degree: f64,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestReport {
    pub lines_read: usize,
    pub edges_added: usize,
    pub duplicates: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphHeader {
    format: String,
    version: u32,
    embedding_dim: usize,
}

const GRAPH_FORMAT: &str = "inses-graph";
const GRAPH_VERSION: u32 = 1;

/// In-memory property graph. Immutable once built; queries take `&self`.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    embedding_dim: usize,
    nodes: BTreeMap<NodeId, AttributeMap>,
    triples: Vec<Triple>,
    identities: HashSet<Triple>,
    incident: HashMap<NodeId, Vec<usize>>,
}

impl PropertyGraph {
    /// `embedding_dim` is the width of the node embeddings this graph is
    /// meant to be indexed with; it is recorded in the on-disk header.
    pub fn new(embedding_dim: usize) -> Self {
        assert!(embedding_dim > 0, "embedding_dim must be positive");
        PropertyGraph {
            embedding_dim,
            nodes: BTreeMap::new(),
            triples: Vec::new(),
            identities: HashSet::new(),
            incident: HashMap::new(),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.triples.len()
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    /// Node ids in canonical (sorted) order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn node_attrs(&self, id: &NodeId) -> Option<&AttributeMap> {
        self.nodes.get(id)
    }

    /// Surface form of the node name as last seen during ingestion.
    pub fn display_name(&self, id: &NodeId) -> Option<&str> {
        self.nodes.get(id).and_then(|a| a.get("name")).map(String::as_str)
    }

    /// Map from node id to display name, for prompt rendering.
    pub fn display_names(&self) -> BTreeMap<NodeId, String> {
        self.nodes
            .iter()
            .map(|(id, attrs)| {
                let name = attrs.get("name").cloned().unwrap_or_else(|| id.as_str().to_owned());
                (id.clone(), name)
            })
            .collect()
    }

    /// Edges in insertion order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Inserts one record. Returns true when a new edge was added, false when
    /// the record was an exact duplicate. Node attributes merge with
    /// last-write-wins semantics, `name` included.
    pub fn insert(&mut self, record: &TripleRecord) -> Result<bool, GraphError> {
        if record.relation.trim().is_empty() {
            return Err(GraphError::InvalidRecord("relation is empty".into()));
        }
        let head = NodeId::new(&record.head);
        let tail = NodeId::new(&record.tail);
        if head.is_empty() {
            return Err(GraphError::InvalidRecord("head name is empty".into()));
        }
        if tail.is_empty() {
            return Err(GraphError::InvalidRecord("tail name is empty".into()));
        }

        self.touch_node(&head, &record.head, &record.head_attrs);
        self.touch_node(&tail, &record.tail, &record.tail_attrs);

        let triple = Triple {
            head,
            tail,
            relation: record.relation.clone(),
            source_text: record.source_text.clone(),
        };
        if self.identities.contains(&triple) {
            return Ok(false);
        }
        let index = self.triples.len();
        self.incident.entry(triple.head.clone()).or_default().push(index);
        if triple.tail != triple.head {
            self.incident.entry(triple.tail.clone()).or_default().push(index);
        }
        self.identities.insert(triple.clone());
        self.triples.push(triple);
        Ok(true)
    }

    fn touch_node(&mut self, id: &NodeId, surface: &str, attrs: &AttributeMap) {
        let entry = self.nodes.entry(id.clone()).or_default();
        entry.insert("name".to_owned(), surface.trim().to_owned());
        for (k, v) in attrs {
            entry.insert(k.clone(), v.clone());
        }
    }

    /// Reads line-delimited JSON triple records. Blank lines are skipped;
    /// malformed lines fail with their 1-based line number.
    pub fn ingest<R: BufRead>(&mut self, reader: R) -> Result<IngestReport, GraphError> {
        let mut report = IngestReport::default();
        for (offset, line) in reader.lines().enumerate() {
            let line_no = offset + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            report.lines_read += 1;
            let record: TripleRecord =
                serde_json::from_str(&line).map_err(|e| GraphError::MalformedRecord {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let added = self.insert(&record).map_err(|e| GraphError::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
            if added {
                report.edges_added += 1;
            } else {
                report.duplicates += 1;
            }
        }
        Ok(report)
    }

    /// Builds a graph from an in-memory JSONL string.
    pub fn from_jsonl(records: &str, embedding_dim: usize) -> Result<Self, GraphError> {
        let mut graph = PropertyGraph::new(embedding_dim);
        graph.ingest(records.as_bytes())?;
        Ok(graph)
    }

    /// All triples with at least one endpoint in `nodes`, regardless of the
    /// stored direction. An empty input yields an empty set; ids not present
    /// in the graph contribute nothing.
    pub fn adjacent_triples(&self, nodes: &BTreeSet<NodeId>) -> BTreeSet<Triple> {
        let mut out = BTreeSet::new();
        for node in nodes {
            if let Some(indices) = self.incident.get(node) {
                for &i in indices {
                    out.insert(self.triples[i].clone());
                }
            }
        }
        out
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.node_count();
        let e = self.edge_count();
        let average_degree = if n == 0 { 0.0 } else { 2.0 * e as f64 / n as f64 };
        GraphStats { node_count: n, edge_count: e, average_degree }
    }

    /// Writes the graph as a header record followed by one triple record per
    /// line, in the same format `ingest` accepts.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), GraphError> {
        let header = GraphHeader {
            format: GRAPH_FORMAT.to_owned(),
            version: GRAPH_VERSION,
            embedding_dim: self.embedding_dim,
        };
        serde_json::to_writer(&mut writer, &header).map_err(io_error)?;
        writer.write_all(b"\n")?;
        for triple in &self.triples {
            let record = self.record_for(triple);
            serde_json::to_writer(&mut writer, &record).map_err(io_error)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    fn record_for(&self, triple: &Triple) -> TripleRecord {
        let surface = |id: &NodeId| {
            self.display_name(id).map(str::to_owned).unwrap_or_else(|| id.as_str().to_owned())
        };
        let extra_attrs = |id: &NodeId| {
            let mut attrs = self.nodes.get(id).cloned().unwrap_or_default();
            attrs.remove("name");
            attrs
        };
        TripleRecord {
            head: surface(&triple.head),
            relation: triple.relation.clone(),
            tail: surface(&triple.tail),
            head_attrs: extra_attrs(&triple.head),
            tail_attrs: extra_attrs(&triple.tail),
            source_text: triple.source_text.clone(),
        }
    }

    /// Reads a graph previously written by [`PropertyGraph::save`].
    pub fn load<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut lines = reader.lines();
        let header_line = loop {
            match lines.next() {
                None => return Err(GraphError::MissingHeader),
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
            }
        };
        let header: GraphHeader =
            serde_json::from_str(&header_line).map_err(|_| GraphError::MissingHeader)?;
        if header.format != GRAPH_FORMAT || header.version != GRAPH_VERSION {
            return Err(GraphError::UnsupportedFormat {
                format: header.format,
                version: header.version,
            });
        }
        let mut graph = PropertyGraph::new(header.embedding_dim);
        for (offset, line) in lines.enumerate() {
            let line_no = offset + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: TripleRecord =
                serde_json::from_str(&line).map_err(|e| GraphError::MalformedRecord {
                    line: line_no,
                    message: e.to_string(),
                })?;
            graph.insert(&record).map_err(|e| GraphError::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        Ok(graph)
    }

    pub fn save_to_path(&self, path: &Path) -> Result<(), GraphError> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_from_path(path: &Path) -> Result<Self, GraphError> {
        let file = std::fs::File::open(path)?;
        PropertyGraph::load(std::io::BufReader::new(file))
    }
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.embedding_dim == other.embedding_dim
            && self.nodes == other.nodes
            && self.triples == other.triples
    }
}

fn io_error(e: serde_json::Error) -> GraphError {
    GraphError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(h: &str, r: &str, t: &str) -> TripleRecord {
        TripleRecord::new(h, r, t)
    }

    #[test]
    fn node_ids_are_lowercased_and_whitespace_collapsed() {
        assert_eq!(NodeId::new("The North Star").as_str(), "the north star");
        assert_eq!(NodeId::new("  Multi \t Spaced\n Name ").as_str(), "multi spaced name");
        assert_eq!(NodeId::new("already canonical").as_str(), "already canonical");
    }

    #[test]
    fn surface_form_is_kept_as_name_attribute() {
        let mut g = PropertyGraph::new(4);
        g.insert(&record("The North Star", "Is", "Anti-slavery newspaper")).unwrap();
        let id = NodeId::new("the north star");
        assert_eq!(g.display_name(&id), Some("The North Star"));
    }

    #[test]
    fn exact_duplicate_records_are_dropped() {
        let mut g = PropertyGraph::new(4);
        let r = record("a", "rel", "b").with_source("text");
        assert!(g.insert(&r).unwrap());
        assert!(!g.insert(&r).unwrap());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn same_endpoints_with_different_source_text_are_parallel_edges() {
        let mut g = PropertyGraph::new(4);
        g.insert(&record("a", "rel", "b").with_source("one")).unwrap();
        g.insert(&record("a", "rel", "b").with_source("two")).unwrap();
        g.insert(&record("a", "rel", "b")).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn insert_rejects_empty_fields() {
        let mut g = PropertyGraph::new(4);
        assert!(g.insert(&record("  ", "rel", "b")).is_err());
        assert!(g.insert(&record("a", "   ", "b")).is_err());
        assert!(g.insert(&record("a", "rel", "\t")).is_err());
    }

    #[test]
    fn ingest_reports_line_numbers_for_malformed_records() {
        let mut g = PropertyGraph::new(4);
        let stream = "{\"head\":\"a\",\"relation\":\"r\",\"tail\":\"b\"}\n\nnot json\n";
        let err = g.ingest(stream.as_bytes()).unwrap_err();
        match err {
            GraphError::MalformedRecord { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn node_attributes_merge_last_write_wins() {
        let mut g = PropertyGraph::new(4);
        let mut first = record("Paris", "capital of", "France");
        first.head_attrs.insert("population".into(), "2m".into());
        let mut second = record("paris", "located in", "Europe");
        second.head_attrs.insert("population".into(), "2.1m".into());
        g.insert(&first).unwrap();
        g.insert(&second).unwrap();
        let attrs = g.node_attrs(&NodeId::new("paris")).unwrap();
        assert_eq!(attrs.get("population").unwrap(), "2.1m");
        assert_eq!(attrs.get("name").unwrap(), "paris");
    }

    #[test]
    fn adjacency_is_direction_agnostic() {
        let mut g = PropertyGraph::new(4);
        g.insert(&record("a", "r1", "b")).unwrap();
        g.insert(&record("c", "r2", "a")).unwrap();
        g.insert(&record("c", "r3", "d")).unwrap();
        let around_a = g.adjacent_triples(&[NodeId::new("a")].into_iter().collect());
        assert_eq!(around_a.len(), 2);
        assert!(around_a.iter().all(|t| t.touches(&NodeId::new("a"))));
    }

    #[test]
    fn adjacency_of_empty_set_is_empty() {
        let mut g = PropertyGraph::new(4);
        g.insert(&record("a", "r", "b")).unwrap();
        assert!(g.adjacent_triples(&BTreeSet::new()).is_empty());
    }

    #[test]
    fn self_loops_count_once_in_adjacency() {
        let mut g = PropertyGraph::new(4);
        g.insert(&record("a", "self", "a")).unwrap();
        let adj = g.adjacent_triples(&[NodeId::new("a")].into_iter().collect());
        assert_eq!(adj.len(), 1);
    }

    #[test]
    fn stats_for_empty_graph_are_zero() {
        let g = PropertyGraph::new(4);
        let s = g.stats();
        assert_eq!(s.node_count, 0);
        assert_eq!(s.edge_count, 0);
        assert_eq!(s.average_degree, 0.0);
    }

    #[test]
    fn average_degree_is_twice_edges_over_nodes() {
        let mut g = PropertyGraph::new(4);
        g.insert(&record("a", "r", "b")).unwrap();
        g.insert(&record("b", "r", "c")).unwrap();
        let s = g.stats();
        assert_eq!(s.node_count, 3);
        assert_eq!(s.edge_count, 2);
        assert!((s.average_degree - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trip_is_identity() {
        let mut g = PropertyGraph::new(16);
        let mut r1 = record("The North Star", "Published by", "Frederick Douglass").with_source("src");
        r1.head_attrs.insert("type".into(), "newspaper".into());
        g.insert(&r1).unwrap();
        g.insert(&record("a", "r", "b")).unwrap();
        let mut buf = Vec::new();
        g.save(&mut buf).unwrap();
        let reloaded = PropertyGraph::load(buf.as_slice()).unwrap();
        assert_eq!(g, reloaded);
        assert_eq!(reloaded.embedding_dim(), 16);

        let mut buf2 = Vec::new();
        reloaded.save(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn load_requires_header() {
        let err = PropertyGraph::load("{\"head\":\"a\",\"relation\":\"r\",\"tail\":\"b\"}\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, GraphError::MissingHeader));
    }

    #[test]
    fn load_rejects_unknown_format_version() {
        let text = "{\"format\":\"inses-graph\",\"version\":9,\"embedding_dim\":4}\n";
        let err = PropertyGraph::load(text.as_bytes()).unwrap_err();
        assert!(matches!(err, GraphError::UnsupportedFormat { .. }));
    }

    fn arb_record() -> impl Strategy<Value = TripleRecord> {
        let name = prop::sample::select(vec!["A", "b", "C c", "d  D", "e", "F"]);
        let rel = prop::sample::select(vec!["r1", "r2", "r3"]);
        let src = prop::option::of(prop::sample::select(vec!["s1", "s2"]));
        (name.clone(), rel, name, src).prop_map(|(h, r, t, s)| TripleRecord {
            head: h.to_owned(),
            relation: r.to_owned(),
            tail: t.to_owned(),
            head_attrs: AttributeMap::new(),
            tail_attrs: AttributeMap::new(),
            source_text: s.map(str::to_owned),
        })
    }

    proptest! {
        #[test]
        fn ingesting_twice_equals_ingesting_once(records in prop::collection::vec(arb_record(), 0..40)) {
            let mut once = PropertyGraph::new(4);
            let mut twice = PropertyGraph::new(4);
            for r in &records {
                once.insert(r).unwrap();
                twice.insert(r).unwrap();
            }
            for r in &records {
                twice.insert(r).unwrap();
            }
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn degree_sum_equals_twice_edge_count(records in prop::collection::vec(arb_record(), 0..40)) {
            let mut g = PropertyGraph::new(4);
            for r in &records {
                g.insert(r).unwrap();
            }
            // Count endpoint slots directly from the stored triples.
            let slots: usize = g.triples().len() * 2;
            prop_assert_eq!(slots, 2 * g.edge_count());
            let s = g.stats();
            if s.node_count > 0 {
                prop_assert!((s.average_degree - slots as f64 / s.node_count as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn adjacency_matches_linear_scan_and_distributes_over_union(
            records in prop::collection::vec(arb_record(), 0..40),
            picks_a in prop::collection::vec(prop::sample::select(vec!["a", "b", "c c", "d d", "e", "f", "zz"]), 0..4),
            picks_b in prop::collection::vec(prop::sample::select(vec!["a", "b", "c c", "d d", "e", "f", "zz"]), 0..4),
        ) {
            let mut g = PropertyGraph::new(4);
            for r in &records {
                g.insert(r).unwrap();
            }
            let set_a: BTreeSet<NodeId> = picks_a.iter().map(|s| NodeId::new(s)).collect();
            let set_b: BTreeSet<NodeId> = picks_b.iter().map(|s| NodeId::new(s)).collect();

            // Oracle: filter every stored triple by endpoint membership.
            let oracle = |set: &BTreeSet<NodeId>| -> BTreeSet<Triple> {
                g.triples().iter().filter(|t| set.contains(&t.head) || set.contains(&t.tail)).cloned().collect()
            };
            prop_assert_eq!(g.adjacent_triples(&set_a), oracle(&set_a));

            let union: BTreeSet<NodeId> = set_a.union(&set_b).cloned().collect();
            let via_union = g.adjacent_triples(&union);
            let combined: BTreeSet<Triple> = g
                .adjacent_triples(&set_a)
                .union(&g.adjacent_triples(&set_b))
                .cloned()
                .collect();
            prop_assert_eq!(via_union, combined);
        }
    }
}
