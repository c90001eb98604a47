//! Embeddings, cosine similarity, and nearest-neighbor indices over graph
//! nodes.
//!
//! # Features
//!
//! - [`cosine`] with explicit errors for mismatched lengths and zero-norm
//!   inputs.
//! - [`VectorIndex`]: exact (scored linear scan) or approximate (small-world
//!   graph) top-k search keyed by [`NodeId`], with deterministic tie-breaking
//!   by ascending id.
//! - [`Embedder`] implementations: a dependency-free feature-hashing embedder,
//!   a fixed lookup table for tests, and an HTTP client for an external
//!   embedding service, plus a JSONL-backed cache wrapper.
//!
//! # Example
//!
//! ```
//! use inses::embedding::{Embedder, HashEmbedder, IndexKind, VectorIndex};
//! use inses::graph::NodeId;
//!
//! let embedder = HashEmbedder::new(64);
//! let mut index = VectorIndex::new(IndexKind::Exact, 64);
//! for name in ["butterfly", "nectar", "caterpillar"] {
//!     index.insert(NodeId::new(name), embedder.embed(name).unwrap()).unwrap();
//! }
//! let hits = index.top_k(&embedder.embed("adult butterflies").unwrap(), 1, &[]).unwrap();
//! assert_eq!(hits[0].0.as_str(), "butterfly");
//! ```

mod hnsw;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, PropertyGraph};

pub use hnsw::HnswParams;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("dimension mismatch: index is {expected}-dimensional, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("node {0} is already indexed")]
    DuplicateNode(NodeId),
    #[error("no embedding recorded for {0:?}")]
    MissingEmbedding(String),
    #[error("embedding backend not configured: set {0}")]
    NotConfigured(&'static str),
    #[error("embedding request failed: {0}")]
    Transport(String),
    #[error("embedding response malformed: {0}")]
    MalformedPayload(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type EmbeddingResult<T> = Result<T, EmbeddingError>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_norm(v: &[f64]) -> f64 {
    dot(v, v)
}

/// Cosine similarity. Errors on length mismatch and when either vector has
/// zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> EmbeddingResult<f64> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let na = squared_norm(a);
    let nb = squared_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok(dot(a, b) / (na.sqrt() * nb.sqrt()))
}

/// Maps text to a fixed-width vector.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> EmbeddingResult<Vec<f64>>;
    /// Stable identifier used for cache keys.
    fn identity(&self) -> String;
}

/// Feature-hashing embedder over character trigrams. Deterministic and
/// dependency-free: each trigram of the padded, lowercased text increments
/// one bucket chosen by a 64-bit FNV-1a hash, and the result is
/// L2-normalized. Texts sharing character n-grams land near each other.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        HashEmbedder { dim }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> EmbeddingResult<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        let padded: Vec<char> = format!(" {} ", text.to_lowercase()).chars().collect();
        if padded.len() >= 3 {
            for window in padded.windows(3) {
                let gram: String = window.iter().collect();
                let bucket = (fnv1a(gram.as_bytes()) % self.dim as u64) as usize;
                v[bucket] += 1.0;
            }
        }
        let norm = squared_norm(&v).sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        Ok(v)
    }

    fn identity(&self) -> String {
        format!("hash-ngram3-d{}", self.dim)
    }
}

#[derive(Debug, Deserialize)]
struct FixtureTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

/// Lookup-table embedder for reproducible tests. Keys are matched after
/// canonicalizing to the node-id form; unknown text is an error.
#[derive(Debug, Clone)]
pub struct FixtureEmbedder {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl FixtureEmbedder {
    pub fn from_json(json: &str) -> EmbeddingResult<Self> {
        let table: FixtureTable = serde_json::from_str(json)
            .map_err(|e| EmbeddingError::MalformedPayload(e.to_string()))?;
        let mut vectors = HashMap::new();
        for (key, vector) in table.vectors {
            if vector.len() != table.dim {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: table.dim,
                    actual: vector.len(),
                });
            }
            vectors.insert(NodeId::new(&key).as_str().to_owned(), vector);
        }
        Ok(FixtureEmbedder { dim: table.dim, vectors })
    }

    pub fn from_path(path: &Path) -> EmbeddingResult<Self> {
        FixtureEmbedder::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Embedder for FixtureEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> EmbeddingResult<Vec<f64>> {
        let key = NodeId::new(text);
        self.vectors
            .get(key.as_str())
            .cloned()
            .ok_or_else(|| EmbeddingError::MissingEmbedding(text.to_owned()))
    }

    fn identity(&self) -> String {
        format!("fixture-d{}", self.dim)
    }
}

pub const EMBED_URL_VAR: &str = "INSES_EMBED_URL";
pub const EMBED_KEY_VAR: &str = "INSES_EMBED_KEY";

/// Client for an external embedding service. Sends `{"input": [text]}` as
/// JSON and expects `{"vectors": [[...]]}` back.
pub struct HttpEmbedder {
    url: String,
    api_key: Option<String>,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    /// Reads the endpoint from `INSES_EMBED_URL` and an optional bearer token
    /// from `INSES_EMBED_KEY`.
    pub fn from_env(dim: usize) -> EmbeddingResult<Self> {
        let url = std::env::var(EMBED_URL_VAR)
            .map_err(|_| EmbeddingError::NotConfigured(EMBED_URL_VAR))?;
        Ok(HttpEmbedder::from_url(&url, std::env::var(EMBED_KEY_VAR).ok(), dim))
    }

    pub fn from_url(url: &str, api_key: Option<String>, dim: usize) -> Self {
        HttpEmbedder {
            url: url.to_owned(),
            api_key,
            dim,
            client: reqwest::blocking::Client::new(),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> EmbeddingResult<Vec<f64>> {
        let mut request = self.client.post(&self.url).json(&EmbedRequest { input: vec![text] });
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(EmbeddingError::Transport(format!("server returned {status}")));
        }
        let payload: EmbedResponse =
            response.json().map_err(|e| EmbeddingError::MalformedPayload(e.to_string()))?;
        let vector = payload
            .vectors
            .into_iter()
            .next()
            .ok_or_else(|| EmbeddingError::MalformedPayload("empty vectors array".into()))?;
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        Ok(vector)
    }

    fn identity(&self) -> String {
        format!("http-d{}@{}", self.dim, self.url)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    provider: String,
    text: String,
    vector: Vec<f64>,
}

/// Wraps another embedder with a persistent JSONL cache keyed by
/// (provider identity, text). Entries from other providers are kept but
/// never returned for this one.
pub struct CachedEmbedder<E> {
    inner: E,
    path: PathBuf,
    state: Mutex<HashMap<(String, String), Vec<f64>>>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn open(inner: E, path: &Path) -> EmbeddingResult<Self> {
        let mut state = HashMap::new();
        if path.exists() {
            let file = std::fs::File::open(path)?;
            for (offset, line) in std::io::BufReader::new(file).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheRecord = serde_json::from_str(&line).map_err(|e| {
                    EmbeddingError::MalformedPayload(format!(
                        "cache line {}: {e}",
                        offset + 1
                    ))
                })?;
                state.insert((record.provider, record.text), record.vector);
            }
        }
        Ok(CachedEmbedder { inner, path: path.to_owned(), state: Mutex::new(state) })
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, text: &str) -> EmbeddingResult<Vec<f64>> {
        let key = (self.inner.identity(), text.to_owned());
        {
            let state = self.state.lock().expect("cache lock");
            if let Some(hit) = state.get(&key) {
                return Ok(hit.clone());
            }
        }
        let vector = self.inner.embed(text)?;
        let record = CacheRecord {
            provider: key.0.clone(),
            text: key.1.clone(),
            vector: vector.clone(),
        };
        let mut state = self.state.lock().expect("cache lock");
        if state.insert(key, vector.clone()).is_none() {
            let mut file =
                std::fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
            serde_json::to_writer(&mut file, &record)
                .map_err(|e| EmbeddingError::MalformedPayload(e.to_string()))?;
            file.write_all(b"\n")?;
            file.flush()?;
        }
        Ok(vector)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

/// Index selection. `Auto` picks exact search for small collections and the
/// approximate small-world index once the node count reaches 5000.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Exact,
    Approximate,
    Auto,
}

impl IndexKind {
    pub fn resolve(self, node_count: usize) -> IndexKind {
        match self {
            IndexKind::Auto => {
                if node_count < 5000 {
                    IndexKind::Exact
                } else {
                    IndexKind::Approximate
                }
            }
            other => other,
        }
    }
}

enum Backend {
    Exact { vectors: Vec<Vec<f64>>, norms: Vec<f64> },
    Approximate(hnsw::SmallWorld),
}

/// Top-k cosine index over node vectors. Zero-norm vectors are rejected at
/// insertion so queries cannot hit undefined similarities. Results are
/// ordered by descending similarity, ties broken by ascending node id.
pub struct VectorIndex {
    dim: usize,
    ids: Vec<NodeId>,
    positions: HashMap<NodeId, usize>,
    backend: Backend,
}

impl VectorIndex {
    pub fn new(kind: IndexKind, dim: usize) -> Self {
        VectorIndex::with_params(kind, dim, HnswParams::default())
    }

    pub fn with_params(kind: IndexKind, dim: usize, params: HnswParams) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert!(
            kind != IndexKind::Auto,
            "resolve IndexKind::Auto against a node count before constructing"
        );
        let backend = match kind {
            IndexKind::Exact => Backend::Exact { vectors: Vec::new(), norms: Vec::new() },
            IndexKind::Approximate => Backend::Approximate(hnsw::SmallWorld::new(params)),
            IndexKind::Auto => unreachable!(),
        };
        VectorIndex { dim, ids: Vec::new(), positions: HashMap::new(), backend }
    }

    /// Builds an index over every node of `graph` using `embedder`, picking
    /// the backend per `kind`.
    pub fn for_graph(
        graph: &PropertyGraph,
        embedder: &dyn Embedder,
        kind: IndexKind,
    ) -> EmbeddingResult<Self> {
        if graph.embedding_dim() != embedder.dim() {
            return Err(EmbeddingError::DimensionMismatch {
                expected: graph.embedding_dim(),
                actual: embedder.dim(),
            });
        }
        let resolved = kind.resolve(graph.node_count());
        let mut index = VectorIndex::new(resolved, embedder.dim());
        for id in graph.nodes() {
            let display = graph.display_name(id).unwrap_or(id.as_str());
            index.insert(id.clone(), embedder.embed(display)?)?;
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.positions.contains_key(id)
    }

    pub fn vector(&self, id: &NodeId) -> Option<&[f64]> {
        let &pos = self.positions.get(id)?;
        match &self.backend {
            Backend::Exact { vectors, .. } => Some(&vectors[pos]),
            Backend::Approximate(sw) => Some(sw.vector(pos)),
        }
    }

    pub fn insert(&mut self, id: NodeId, vector: Vec<f64>) -> EmbeddingResult<()> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.positions.contains_key(&id) {
            return Err(EmbeddingError::DuplicateNode(id));
        }
        let norm = squared_norm(&vector).sqrt();
        if norm == 0.0 {
            return Err(EmbeddingError::ZeroNorm);
        }
        let position = self.ids.len();
        match &mut self.backend {
            Backend::Exact { vectors, norms } => {
                vectors.push(vector);
                norms.push(norm);
            }
            Backend::Approximate(sw) => sw.insert(vector, norm),
        }
        self.positions.insert(id.clone(), position);
        self.ids.push(id);
        Ok(())
    }

    /// The `k` nodes most similar to `query`, excluding any id in `exclude`.
    pub fn top_k(
        &self,
        query: &[f64],
        k: usize,
        exclude: &[NodeId],
    ) -> EmbeddingResult<Vec<(NodeId, f64)>> {
        if query.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let query_norm = squared_norm(query).sqrt();
        if query_norm == 0.0 {
            return Err(EmbeddingError::ZeroNorm);
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let excluded: Vec<usize> =
            exclude.iter().filter_map(|id| self.positions.get(id).copied()).collect();
        let mut scored: Vec<(usize, f64)> = match &self.backend {
            Backend::Exact { vectors, norms } => {
                let mut all: Vec<(usize, f64)> = (0..vectors.len())
                    .filter(|i| !excluded.contains(i))
                    .map(|i| (i, dot(query, &vectors[i]) / (query_norm * norms[i])))
                    .collect();
                all.sort_by(|a, b| {
                    b.1.total_cmp(&a.1).then_with(|| self.ids[a.0].cmp(&self.ids[b.0]))
                });
                all.truncate(k);
                all
            }
            Backend::Approximate(sw) => sw.search(query, query_norm, k, &excluded),
        };
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| self.ids[a.0].cmp(&self.ids[b.0])));
        Ok(scored.into_iter().map(|(i, s)| (self.ids[i].clone(), s)).collect())
    }

    /// The single node most similar to `query`, if the index is nonempty
    /// after exclusions.
    pub fn nearest(
        &self,
        query: &[f64],
        exclude: &[NodeId],
    ) -> EmbeddingResult<Option<(NodeId, f64)>> {
        Ok(self.top_k(query, 1, exclude)?.into_iter().next())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_matches_hand_computed_reference() {
        let got = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((got - 0.9746318461970762).abs() < 1e-12);
    }

    #[test]
    fn cosine_is_one_for_parallel_and_zero_for_orthogonal() {
        assert!((cosine(&[2.0, 0.0], &[5.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap().abs() < 1e-12);
        assert!((cosine(&[1.0, 0.0], &[-2.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_mismatched_lengths_and_zero_norm() {
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(EmbeddingError::LengthMismatch { left: 1, right: 2 })
        ));
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(EmbeddingError::ZeroNorm)));
        assert!(matches!(cosine(&[1.0, 0.0], &[0.0, 0.0]), Err(EmbeddingError::ZeroNorm)));
    }

    #[test]
    fn hash_embedder_vectors_are_unit_norm_and_deterministic() {
        let e = HashEmbedder::new(64);
        let a = e.embed("butterfly").unwrap();
        let b = e.embed("butterfly").unwrap();
        assert_eq!(a, b);
        assert!((squared_norm(&a).sqrt() - 1.0).abs() < 1e-12);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn hash_embedder_empty_text_is_zero_vector() {
        let e = HashEmbedder::new(16);
        let v = e.embed("").unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hash_embedder_is_case_insensitive() {
        let e = HashEmbedder::new(64);
        assert_eq!(e.embed("ButterFly").unwrap(), e.embed("butterfly").unwrap());
    }

    #[test]
    fn hash_embedder_ranks_shared_ngrams_above_disjoint_text() {
        let e = HashEmbedder::new(64);
        let butterfly = e.embed("butterfly").unwrap();
        let related = e.embed("adult butterflies").unwrap();
        let unrelated = e.embed("nectar").unwrap();
        let sim_related = cosine(&butterfly, &related).unwrap();
        let sim_unrelated = cosine(&butterfly, &unrelated).unwrap();
        assert!(
            sim_related > sim_unrelated,
            "expected {sim_related} > {sim_unrelated}"
        );
    }

    #[test]
    fn fixture_embedder_canonicalizes_keys_and_errors_on_unknown_text() {
        let table = r#"{"dim": 2, "vectors": {"The North Star": [1.0, 0.0]}}"#;
        let e = FixtureEmbedder::from_json(table).unwrap();
        assert_eq!(e.embed("the  north star").unwrap(), vec![1.0, 0.0]);
        assert!(matches!(e.embed("unknown"), Err(EmbeddingError::MissingEmbedding(_))));
    }

    #[test]
    fn fixture_embedder_rejects_wrong_width_vectors() {
        let table = r#"{"dim": 3, "vectors": {"a": [1.0, 0.0]}}"#;
        assert!(matches!(
            FixtureEmbedder::from_json(table),
            Err(EmbeddingError::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn index_rejects_duplicates_zero_norm_and_wrong_dimension() {
        let mut index = VectorIndex::new(IndexKind::Exact, 2);
        index.insert(NodeId::new("a"), vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            index.insert(NodeId::new("A "), vec![0.0, 1.0]),
            Err(EmbeddingError::DuplicateNode(_))
        ));
        assert!(matches!(
            index.insert(NodeId::new("b"), vec![0.0, 0.0]),
            Err(EmbeddingError::ZeroNorm)
        ));
        assert!(matches!(
            index.insert(NodeId::new("c"), vec![1.0]),
            Err(EmbeddingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn top_k_orders_by_similarity_then_ascending_id() {
        let mut index = VectorIndex::new(IndexKind::Exact, 2);
        index.insert(NodeId::new("b"), vec![1.0, 0.0]).unwrap();
        index.insert(NodeId::new("a"), vec![2.0, 0.0]).unwrap();
        index.insert(NodeId::new("c"), vec![0.0, 1.0]).unwrap();
        let hits = index.top_k(&[1.0, 0.0], 3, &[]).unwrap();
        let ids: Vec<&str> = hits.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
        assert!((hits[0].1 - 1.0).abs() < 1e-12);
        assert!((hits[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_respects_exclusions_and_k() {
        let mut index = VectorIndex::new(IndexKind::Exact, 2);
        index.insert(NodeId::new("a"), vec![1.0, 0.0]).unwrap();
        index.insert(NodeId::new("b"), vec![0.9, 0.1]).unwrap();
        index.insert(NodeId::new("c"), vec![0.0, 1.0]).unwrap();
        let hits = index.top_k(&[1.0, 0.0], 1, &[NodeId::new("a")]).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0.as_str(), "b");
        assert!(index.top_k(&[1.0, 0.0], 0, &[]).unwrap().is_empty());
        let all = index.top_k(&[1.0, 0.0], 10, &[]).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn nearest_is_none_when_everything_is_excluded() {
        let mut index = VectorIndex::new(IndexKind::Exact, 2);
        index.insert(NodeId::new("a"), vec![1.0, 0.0]).unwrap();
        let hit = index.nearest(&[1.0, 0.0], &[NodeId::new("a")]).unwrap();
        assert!(hit.is_none());
    }

    #[test]
    fn auto_kind_switches_at_five_thousand_nodes() {
        assert_eq!(IndexKind::Auto.resolve(0), IndexKind::Exact);
        assert_eq!(IndexKind::Auto.resolve(4999), IndexKind::Exact);
        assert_eq!(IndexKind::Auto.resolve(5000), IndexKind::Approximate);
        assert_eq!(IndexKind::Exact.resolve(100_000), IndexKind::Exact);
        assert_eq!(IndexKind::Approximate.resolve(1), IndexKind::Approximate);
    }

    #[test]
    fn for_graph_checks_embedder_dimension() {
        let graph = PropertyGraph::new(16);
        let embedder = HashEmbedder::new(8);
        assert!(matches!(
            VectorIndex::for_graph(&graph, &embedder, IndexKind::Auto),
            Err(EmbeddingError::DimensionMismatch { expected: 16, actual: 8 })
        ));
    }

    #[test]
    fn cached_embedder_round_trips_and_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let first = CachedEmbedder::open(HashEmbedder::new(8), &path).unwrap();
        let v1 = first.embed("alpha").unwrap();
        let v2 = first.embed("alpha").unwrap();
        assert_eq!(v1, v2);
        drop(first);

        let contents = std::fs::read_to_string(&path).unwrap();
        assert_eq!(contents.lines().count(), 1);
        let record: serde_json::Value = serde_json::from_str(contents.lines().next().unwrap()).unwrap();
        assert_eq!(record["provider"], "hash-ngram3-d8");
        assert_eq!(record["text"], "alpha");
        assert!(record["vector"].is_array());

        let reopened = CachedEmbedder::open(HashEmbedder::new(8), &path).unwrap();
        assert_eq!(reopened.embed("alpha").unwrap(), v1);
        let contents_after = std::fs::read_to_string(&path).unwrap();
        assert_eq!(contents_after.lines().count(), 1);
    }

    #[test]
    fn cache_entries_are_scoped_to_the_provider_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let narrow = CachedEmbedder::open(HashEmbedder::new(4), &path).unwrap();
        narrow.embed("alpha").unwrap();
        drop(narrow);
        let wide = CachedEmbedder::open(HashEmbedder::new(8), &path).unwrap();
        let v = wide.embed("alpha").unwrap();
        assert_eq!(v.len(), 8);
        let contents = std::fs::read_to_string(&path).unwrap();
        assert_eq!(contents.lines().count(), 2);
    }

    #[test]
    fn http_embedder_from_env_requires_url() {
        // Temporarily clear the variable for this check; tests in this
        // module run in one process, so restore it afterwards.
        let saved = std::env::var(EMBED_URL_VAR).ok();
        std::env::remove_var(EMBED_URL_VAR);
        let err = HttpEmbedder::from_env(4).err().unwrap();
        assert!(matches!(err, EmbeddingError::NotConfigured(EMBED_URL_VAR)));
        if let Some(value) = saved {
            std::env::set_var(EMBED_URL_VAR, value);
        }
    }
}
