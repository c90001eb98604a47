//! The flat retrieval baseline: embed text chunks, pull the closest ones
//! for a question, and ask a backend for an answer with a self-reported
//! confidence. A canned backend keeps the example offline.
//!
//!     cargo run --example rag_retrieval

use std::error::Error;

use inses::embedding::{Embedder, HashEmbedder};
use inses::llm::CannedBackend;
use inses::rag::{answer_with_rag, parse_chunks, ChunkIndex};

const CHUNKS: &str = r#"
{"id": "c1", "text": "Paris is the capital and most populous city of France."}
{"id": "c2", "text": "The Seine flows through Paris toward the English Channel."}
{"id": "c3", "text": "Mount Everest is the highest mountain above sea level."}
{"id": "c4", "text": "The Louvre in Paris is the world's most visited museum."}
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let embedder = HashEmbedder::new(64);
    let chunks = parse_chunks(CHUNKS.trim().as_bytes())?;
    let index = ChunkIndex::build(chunks, &embedder)?;
    println!("indexed {} chunks with embedder {:?}\n", index.len(), embedder.identity());

    let question = "Which river runs through the capital of France?";
    println!("question: {question}");
    println!("top 2 chunks:");
    for scored in index.retrieve(question, 2, &embedder)? {
        println!("  [{}] {:.3}  {}", scored.chunk.id, scored.score, scored.chunk.text);
    }

    let backend = CannedBackend::new([
        r#"{"reasoning": "The Seine is named as flowing through Paris, the capital of France.", "answer": "The Seine", "confidence": 0.92}"#,
    ]);
    let (answer, retrieved) = answer_with_rag(question, &index, &embedder, &backend, 2)?;
    println!("\nanswered from {} retrieved chunks", retrieved.len());
    println!("answer: {} (confidence {:.2})", answer.answer, answer.confidence);

    // The index persists with its embedder identity and refuses queries
    // from a different provider, so stale vectors cannot be mixed in.
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("chunks.jsonl");
    index.save_to_path(&path)?;
    let reloaded = ChunkIndex::load_from_path(&path)?;
    let mismatched = HashEmbedder::new(32);
    match reloaded.retrieve(question, 1, &mismatched) {
        Err(error) => println!("\nquerying with a 32-wide embedder fails closed: {error}"),
        Ok(_) => unreachable!("provider mismatch must be rejected"),
    }
    Ok(())
}
