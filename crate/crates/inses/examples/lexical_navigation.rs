//! A fully offline search: mentions come from the question's own content
//! words, and a lexical navigator scores adjacent triples by word overlap
//! with the question instead of asking a model.
//!
//!     cargo run --example lexical_navigation

use std::error::Error;

use inses::embedding::{HashEmbedder, IndexKind, VectorIndex};
use inses::graph::PropertyGraph;
use inses::navigator::{EntityExtractor, LexicalExtractor, LexicalNavigator};
use inses::search::{SearchConfig, SearchEngine};

const RECORDS: &str = r#"
{"head": "Marie Curie", "relation": "Won", "tail": "Nobel Prize in Physics", "source_text": "Marie Curie won the Nobel Prize in Physics in 1903."}
{"head": "Marie Curie", "relation": "Won", "tail": "Nobel Prize in Chemistry"}
{"head": "Marie Curie", "relation": "Discovered", "tail": "Radium"}
{"head": "Pierre Curie", "relation": "Married", "tail": "Marie Curie"}
{"head": "Pierre Curie", "relation": "Won", "tail": "Nobel Prize in Physics"}
{"head": "Radium", "relation": "Is", "tail": "Radioactive element"}
{"head": "Henri Becquerel", "relation": "Discovered", "tail": "Radioactivity"}
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let graph = PropertyGraph::from_jsonl(RECORDS.trim(), 32)?;
    let embedder = HashEmbedder::new(32);
    let index = VectorIndex::for_graph(&graph, &embedder, IndexKind::Exact)?;
    let config = SearchConfig { max_iter: 3, ..SearchConfig::default() };
    let engine = SearchEngine::new(&graph, &index, &embedder, config);

    let question = "Who married the scientist who discovered radium?";
    let mentions = LexicalExtractor.extract(question)?;
    println!("question: {question}");
    println!("mentions (content words): {mentions:?}\n");

    let mut navigator = LexicalNavigator::new(engine.config().max_select_per_step);
    let outcome = engine.search_with_extractor(question, &LexicalExtractor, &mut navigator)?;

    for step in &outcome.trace.iterations {
        let frontier: Vec<&str> = step.frontier.iter().map(|id| id.as_str()).collect();
        println!(
            "iteration {}: frontier {frontier:?}, {} adjacent, {} selected",
            step.iteration,
            step.adjacent_count,
            step.decision.selected.len()
        );
    }

    println!("\nstopped: {:?}", outcome.stop_reason);
    println!("evidence:");
    for triple in &outcome.evidence {
        let head = graph.display_name(&triple.head).unwrap_or(triple.head.as_str());
        let tail = graph.display_name(&triple.tail).unwrap_or(triple.tail.as_str());
        println!("  {head} → {} → {tail}", triple.relation);
    }
    Ok(())
}
