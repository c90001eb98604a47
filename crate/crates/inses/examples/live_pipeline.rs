//! The bundled question answered end to end against a live model server:
//! entity extraction, navigation decisions, and answer synthesis all go
//! over HTTP. Runs only when the endpoint is configured, and exits
//! gracefully otherwise.
//!
//!     INSES_LLM_URL=http://localhost:8080/complete cargo run --example live_pipeline
//!
//! The server must accept `{"prompt": "..."}` POSTs and reply
//! `{"text": "..."}`. Set INSES_LLM_KEY to send a bearer token.

use std::error::Error;
use std::sync::Arc;
use std::time::Duration;

use inses::embedding::{HashEmbedder, IndexKind, VectorIndex};
use inses::fixtures::{case_study_graph, CASE_STUDY_QUERY};
use inses::llm::{HttpChatBackend, LLM_URL_VAR};
use inses::navigator::{EntityExtractor, LlmExtractor, LlmNavigator};
use inses::search::{answer_from_evidence, SearchConfig, SearchEngine};

fn main() -> Result<(), Box<dyn Error>> {
    if std::env::var(LLM_URL_VAR).is_err() {
        println!("{LLM_URL_VAR} is not set; skipping the live run.");
        println!("Point it at a completion endpoint to try this example.");
        return Ok(());
    }
    let backend = Arc::new(HttpChatBackend::from_env(Duration::from_secs(60))?);

    let graph = case_study_graph()?;
    let embedder = HashEmbedder::new(graph.embedding_dim());
    let index = VectorIndex::for_graph(&graph, &embedder, IndexKind::Exact)?;
    let engine = SearchEngine::new(&graph, &index, &embedder, SearchConfig::default());

    println!("question: {CASE_STUDY_QUERY}\n");
    let mentions = LlmExtractor::new(backend.clone()).extract(CASE_STUDY_QUERY)?;
    println!("extracted mentions: {mentions:?}");

    let mut navigator = LlmNavigator::new(backend.clone());
    let outcome = engine.search(CASE_STUDY_QUERY, &mentions, &mut navigator)?;
    println!("stopped: {:?} after {} iterations", outcome.stop_reason, outcome.trace.iterations.len());
    println!("evidence:");
    for triple in &outcome.evidence {
        let head = graph.display_name(&triple.head).unwrap_or(triple.head.as_str());
        let tail = graph.display_name(&triple.tail).unwrap_or(triple.tail.as_str());
        println!("  {head} → {} → {tail}", triple.relation);
    }

    let answer = answer_from_evidence(CASE_STUDY_QUERY, &outcome.evidence, &graph, backend.as_ref())?;
    println!("\nanswer: {}", answer.answer);
    println!("reasoning: {}", answer.reasoning);
    Ok(())
}
