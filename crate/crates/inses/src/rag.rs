//! Flat retrieval baseline: embed text chunks, retrieve the most similar
//! ones for a question, and answer from that context with a self-reported
//! confidence score.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{Embedder, EmbeddingError};
use crate::llm::{BackendError, ChatBackend};
use crate::navigator;
use crate::prompts;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum RagError {
    #[error("duplicate chunk id {0:?}")]
    DuplicateChunk(String),
    #[error("chunk {0:?} has empty text")]
    EmptyChunk(String),
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("chunk file does not start with a header record")]
    MissingHeader,
    #[error("unsupported chunk file format {format:?} version {version}")]
    UnsupportedFormat { format: String, version: u32 },
    #[error("chunk file was embedded with {stored:?} but queries use {active:?}")]
    ProviderMismatch { stored: String, active: String },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("answer response could not be parsed after a retry; raw response: {raw}")]
    AnswerUnparseable { raw: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type RagResult<T> = Result<T, RagError>;

/// A unit of retrievable text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub text: String,
}

/// Parses line-delimited JSON chunks, rejecting duplicate ids and empty
/// text. Blank lines are skipped.
pub fn parse_chunks<R: BufRead>(reader: R) -> RagResult<Vec<Chunk>> {
    let mut chunks = Vec::new();
    let mut seen = HashMap::new();
    for (offset, line) in reader.lines().enumerate() {
        let line_no = offset + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let chunk: Chunk = serde_json::from_str(&line)
            .map_err(|e| RagError::MalformedRecord { line: line_no, message: e.to_string() })?;
        if chunk.text.trim().is_empty() {
            return Err(RagError::EmptyChunk(chunk.id));
        }
        if seen.insert(chunk.id.clone(), line_no).is_some() {
            return Err(RagError::DuplicateChunk(chunk.id));
        }
        chunks.push(chunk);
    }
    Ok(chunks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk: Chunk,
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChunkHeader {
    format: String,
    version: u32,
    embedding_dim: usize,
    provider: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredChunk {
    id: String,
    text: String,
    vector: Vec<f64>,
}

const CHUNK_FORMAT: &str = "inses-chunks";
const CHUNK_VERSION: u32 = 1;

fn to_io(e: serde_json::Error) -> RagError {
    RagError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Embedded chunk collection searched by exhaustive cosine scan. Results
/// order by descending similarity with ties broken by ascending chunk id.
#[derive(Debug)]
pub struct ChunkIndex {
    dim: usize,
    provider: String,
    chunks: Vec<Chunk>,
    vectors: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl ChunkIndex {
    /// Embeds every chunk with `embedder`. Chunks whose embedding has zero
    /// norm are rejected: they could never be retrieved.
    pub fn build(chunks: Vec<Chunk>, embedder: &dyn Embedder) -> RagResult<Self> {
        let mut index = ChunkIndex {
            dim: embedder.dim(),
            provider: embedder.identity(),
            chunks: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        };
        for chunk in chunks {
            let vector = embedder.embed(&chunk.text)?;
            index.push(chunk, vector)?;
        }
        Ok(index)
    }

    fn push(&mut self, chunk: Chunk, vector: Vec<f64>) -> RagResult<()> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            }
            .into());
        }
        if self.chunks.iter().any(|c| c.id == chunk.id) {
            return Err(RagError::DuplicateChunk(chunk.id));
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbeddingError::ZeroNorm.into());
        }
        self.chunks.push(chunk);
        self.vectors.push(vector);
        self.norms.push(norm);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    /// The `k` chunks most similar to `query`, embedding it with `embedder`.
    pub fn retrieve(
        &self,
        query: &str,
        k: usize,
        embedder: &dyn Embedder,
    ) -> RagResult<Vec<ScoredChunk>> {
        if embedder.identity() != self.provider {
            return Err(RagError::ProviderMismatch {
                stored: self.provider.clone(),
                active: embedder.identity(),
            });
        }
        let query_vector = embedder.embed(query)?;
        if query_vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                actual: query_vector.len(),
            }
            .into());
        }
        let query_norm = query_vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if query_norm == 0.0 {
            return Err(EmbeddingError::ZeroNorm.into());
        }
        let mut scored: Vec<(usize, f64)> = (0..self.chunks.len())
            .map(|i| {
                let dot: f64 =
                    query_vector.iter().zip(&self.vectors[i]).map(|(a, b)| a * b).sum();
                (i, dot / (query_norm * self.norms[i]))
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1).then_with(|| self.chunks[a.0].id.cmp(&self.chunks[b.0].id))
        });
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(i, score)| ScoredChunk { chunk: self.chunks[i].clone(), score })
            .collect())
    }

    /// Writes a header record followed by one embedded chunk per line.
    pub fn save<W: Write>(&self, mut writer: W) -> RagResult<()> {
        let header = ChunkHeader {
            format: CHUNK_FORMAT.to_owned(),
            version: CHUNK_VERSION,
            embedding_dim: self.dim,
            provider: self.provider.clone(),
        };
        serde_json::to_writer(&mut writer, &header).map_err(to_io)?;
        writer.write_all(b"\n")?;
        for (chunk, vector) in self.chunks.iter().zip(&self.vectors) {
            let stored = StoredChunk {
                id: chunk.id.clone(),
                text: chunk.text.clone(),
                vector: vector.clone(),
            };
            serde_json::to_writer(&mut writer, &stored).map_err(to_io)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> RagResult<Self> {
        let mut lines = reader.lines();
        let header_line = loop {
            match lines.next() {
                None => return Err(RagError::MissingHeader),
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
            }
        };
        let header: ChunkHeader =
            serde_json::from_str(&header_line).map_err(|_| RagError::MissingHeader)?;
        if header.format != CHUNK_FORMAT || header.version != CHUNK_VERSION {
            return Err(RagError::UnsupportedFormat {
                format: header.format,
                version: header.version,
            });
        }
        let mut index = ChunkIndex {
            dim: header.embedding_dim,
            provider: header.provider,
            chunks: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        };
        for (offset, line) in lines.enumerate() {
            let line_no = offset + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let stored: StoredChunk = serde_json::from_str(&line)
                .map_err(|e| RagError::MalformedRecord { line: line_no, message: e.to_string() })?;
            index.push(Chunk { id: stored.id, text: stored.text }, stored.vector)?;
        }
        Ok(index)
    }

    pub fn save_to_path(&self, path: &Path) -> RagResult<()> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_from_path(path: &Path) -> RagResult<Self> {
        let file = std::fs::File::open(path)?;
        ChunkIndex::load(std::io::BufReader::new(file))
    }
}

/// An answer with the model's self-reported confidence in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagAnswer {
    pub reasoning: String,
    pub answer: String,
    pub confidence: f64,
}

/// The retrieval answer prompt; context chunks are separated by blank lines.
pub fn rag_answer_prompt(query: &str, context_chunks: &[ScoredChunk]) -> String {
    let context = if context_chunks.is_empty() {
        "none".to_owned()
    } else {
        context_chunks
            .iter()
            .map(|s| s.chunk.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    };
    prompts::fill(prompts::RAG_ANSWER, &[("query", query), ("context", &context)])
}

/// Parses a retrieval answer. `answer` is required; `reasoning` defaults to
/// empty. `confidence` outside [0, 1] is clamped with a warning, and a
/// missing or non-numeric confidence becomes 0.0, so downstream routing
/// treats the answer as untrustworthy rather than failing.
pub fn parse_rag_response(raw: &str) -> Result<RagAnswer, String> {
    let Some(object) = navigator::first_json_object(raw) else {
        return Err(raw.to_owned());
    };
    let answer = match object.get("answer") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Number(n)) => n.to_string(),
        _ => return Err(raw.to_owned()),
    };
    let reasoning = object
        .get("reasoning")
        .and_then(serde_json::Value::as_str)
        .unwrap_or_default()
        .to_owned();
    let confidence = match object.get("confidence").and_then(serde_json::Value::as_f64) {
        Some(value) => {
            if !(0.0..=1.0).contains(&value) {
                log::warn!("confidence {value} outside [0, 1], clamping");
            }
            value.clamp(0.0, 1.0)
        }
        None => {
            log::warn!("confidence missing or non-numeric, treating as 0.0");
            0.0
        }
    };
    Ok(RagAnswer { reasoning, answer, confidence })
}

/// Retrieves the top chunks for `query` and answers from them, retrying an
/// unparseable response once with a format reminder.
pub fn answer_with_rag(
    query: &str,
    index: &ChunkIndex,
    embedder: &dyn Embedder,
    backend: &dyn ChatBackend,
    top_k: usize,
) -> RagResult<(RagAnswer, Vec<ScoredChunk>)> {
    let retrieved = index.retrieve(query, top_k, embedder)?;
    let prompt = rag_answer_prompt(query, &retrieved);
    let response = backend.complete(&prompt)?;
    let answer = match parse_rag_response(&response) {
        Ok(answer) => answer,
        Err(_) => {
            log::warn!("retrieval answer unparseable, retrying once");
            let retry_prompt = format!("{prompt}\n\nRespond with only the JSON object.");
            let retry = backend.complete(&retry_prompt)?;
            parse_rag_response(&retry).map_err(|raw| RagError::AnswerUnparseable { raw })?
        }
    };
    Ok((answer, retrieved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{FixtureEmbedder, HashEmbedder};
    use crate::llm::CannedBackend;

    fn chunk(id: &str, text: &str) -> Chunk {
        Chunk { id: id.to_owned(), text: text.to_owned() }
    }

    #[test]
    fn parse_chunks_rejects_duplicates_and_empty_text() {
        let ok = parse_chunks(
            "{\"id\":\"c1\",\"text\":\"alpha\"}\n\n{\"id\":\"c2\",\"text\":\"beta\"}\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(ok.len(), 2);

        let dup = "{\"id\":\"c1\",\"text\":\"a\"}\n{\"id\":\"c1\",\"text\":\"b\"}\n";
        assert!(matches!(
            parse_chunks(dup.as_bytes()),
            Err(RagError::DuplicateChunk(id)) if id == "c1"
        ));

        let empty = "{\"id\":\"c1\",\"text\":\"  \"}\n";
        assert!(matches!(parse_chunks(empty.as_bytes()), Err(RagError::EmptyChunk(_))));

        let bad = "{\"id\":\"c1\"}\n";
        assert!(matches!(
            parse_chunks(bad.as_bytes()),
            Err(RagError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn retrieve_orders_by_similarity_then_chunk_id() {
        let table = r#"{
            "dim": 2,
            "vectors": {
                "x axis": [1.0, 0.0],
                "also x": [2.0, 0.0],
                "y axis": [0.0, 1.0],
                "query x": [1.0, 0.0]
            }
        }"#;
        let embedder = FixtureEmbedder::from_json(table).unwrap();
        let chunks = vec![chunk("b", "also x"), chunk("a", "x axis"), chunk("c", "y axis")];
        let index = ChunkIndex::build(chunks, &embedder).unwrap();

        let hits = index.retrieve("query x", 2, &embedder).unwrap();
        let ids: Vec<&str> = hits.iter().map(|s| s.chunk.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert!((hits[0].score - 1.0).abs() < 1e-12);

        let all = index.retrieve("query x", 10, &embedder).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn build_rejects_duplicate_ids() {
        let embedder = HashEmbedder::new(8);
        let err =
            ChunkIndex::build(vec![chunk("c", "one"), chunk("c", "two")], &embedder).unwrap_err();
        assert!(matches!(err, RagError::DuplicateChunk(_)));
    }

    #[test]
    fn save_load_round_trips_and_checks_provider() {
        let embedder = HashEmbedder::new(8);
        let index =
            ChunkIndex::build(vec![chunk("c1", "alpha beta"), chunk("c2", "gamma")], &embedder)
                .unwrap();
        let mut buf = Vec::new();
        index.save(&mut buf).unwrap();

        let reloaded = ChunkIndex::load(buf.as_slice()).unwrap();
        assert_eq!(reloaded.len(), 2);
        assert_eq!(
            index.retrieve("alpha", 2, &embedder).unwrap(),
            reloaded.retrieve("alpha", 2, &embedder).unwrap()
        );

        let other = HashEmbedder::new(16);
        assert!(matches!(
            reloaded.retrieve("alpha", 1, &other),
            Err(RagError::ProviderMismatch { .. })
        ));
    }

    #[test]
    fn load_requires_header() {
        let err = ChunkIndex::load("{\"id\":\"c\",\"text\":\"t\",\"vector\":[1.0]}\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, RagError::MissingHeader));
    }

    #[test]
    fn response_parsing_handles_confidence_variants() {
        let full = parse_rag_response(
            r#"{"reasoning": "r", "answer": "a", "confidence": 0.8}"#,
        )
        .unwrap();
        assert_eq!(full.confidence, 0.8);

        let clamped_high =
            parse_rag_response(r#"{"answer": "a", "confidence": 1.7}"#).unwrap();
        assert_eq!(clamped_high.confidence, 1.0);

        let clamped_low =
            parse_rag_response(r#"{"answer": "a", "confidence": -0.2}"#).unwrap();
        assert_eq!(clamped_low.confidence, 0.0);

        let missing = parse_rag_response(r#"{"answer": "a"}"#).unwrap();
        assert_eq!(missing.confidence, 0.0);

        let non_numeric =
            parse_rag_response(r#"{"answer": "a", "confidence": "high"}"#).unwrap();
        assert_eq!(non_numeric.confidence, 0.0);

        assert!(parse_rag_response(r#"{"confidence": 0.9}"#).is_err());
    }

    #[test]
    fn answer_with_rag_builds_context_and_retries() {
        let embedder = HashEmbedder::new(16);
        let index = ChunkIndex::build(
            vec![chunk("c1", "Paris is the capital of France.")],
            &embedder,
        )
        .unwrap();
        let backend = CannedBackend::new([
            "not json at all",
            r#"{"reasoning": "stated directly", "answer": "Paris", "confidence": 0.9}"#,
        ]);
        let (answer, retrieved) =
            answer_with_rag("капитал?", &index, &embedder, &backend, DEFAULT_TOP_K).unwrap();
        assert_eq!(answer.answer, "Paris");
        assert_eq!(retrieved.len(), 1);
        let prompts = backend.prompts();
        assert!(prompts[0].contains("Paris is the capital of France."));
        assert!(prompts[1].ends_with("Respond with only the JSON object."));
    }
}
