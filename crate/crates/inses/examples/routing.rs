//! Dispatching questions between the flat retrieval baseline and the graph
//! search. Multi-hop questions go straight to the graph; simple ones try
//! retrieval first and escalate when the answer's confidence is not above
//! the threshold.
//!
//!     cargo run --example routing

use std::error::Error;

use inses::embedding::{HashEmbedder, IndexKind, VectorIndex};
use inses::fixtures::{case_study_graph, CASE_STUDY_QUERY};
use inses::llm::CannedBackend;
use inses::navigator::{LexicalExtractor, LexicalNavigator};
use inses::rag::{parse_chunks, ChunkIndex};
use inses::router::{
    HeuristicClassifier, LiveGraphStage, LiveRagStage, MultihopClassifier, RoutedAnswer, Router,
    RouterConfig, RoutingStats,
};
use inses::search::{SearchConfig, SearchEngine};

const CHUNKS: &str = r#"
{"id": "c1", "text": "Paris is the capital and most populous city of France."}
{"id": "c2", "text": "Reykjavik is the capital of Iceland."}
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let embedder = HashEmbedder::new(16);
    let chunk_index = ChunkIndex::build(parse_chunks(CHUNKS.trim().as_bytes())?, &embedder)?;
    let graph = case_study_graph()?;
    let node_index = VectorIndex::for_graph(&graph, &embedder, IndexKind::Exact)?;
    let engine = SearchEngine::new(&graph, &node_index, &embedder, SearchConfig::default());

    // Each stage gets its own canned response queue, standing in for live
    // model calls in the order the router will make them.
    let rag_backend = CannedBackend::new([
        r#"{"reasoning": "stated directly", "answer": "Paris", "confidence": 0.95}"#,
        r#"{"reasoning": "no supporting chunk", "answer": "unknown", "confidence": 0.2}"#,
    ]);
    let graph_backend = CannedBackend::new([
        r#"{"reasoning": "from the graph evidence", "answer": "no grounded answer"}"#,
        r#"{"reasoning": "from the graph evidence", "answer": "Helen Pitts Douglass"}"#,
    ]);

    let classifier = HeuristicClassifier;
    let mut rag_stage =
        LiveRagStage { index: &chunk_index, embedder: &embedder, backend: &rag_backend, top_k: 2 };
    let mut graph_stage = LiveGraphStage {
        engine: &engine,
        extractor: &LexicalExtractor,
        navigator: Box::new(LexicalNavigator::new(engine.config().max_select_per_step)),
        answer_backend: Some(&graph_backend),
    };
    let mut router =
        Router::new(&classifier, &mut rag_stage, &mut graph_stage, RouterConfig::default());

    let questions = [
        "What is the capital of France?",
        "What is the capital of the country north of Scotland?",
        CASE_STUDY_QUERY,
    ];

    let mut causes = Vec::new();
    for question in questions {
        let signal = HeuristicClassifier::signal(question);
        let multihop = classifier.is_multihop(question)?;
        println!("question: {question}");
        println!("  complexity signal {signal} → {}", if multihop { "multi-hop" } else { "simple" });
        let outcome = router.route(question)?;
        println!("  routed to {:?} because {:?}", outcome.decision.route, outcome.decision.cause);
        if let Some(confidence) = outcome.decision.rag_confidence {
            println!("  retrieval confidence was {confidence:.2}");
        }
        match &outcome.answer {
            RoutedAnswer::Rag(answer) => println!("  answer: {}\n", answer.answer),
            RoutedAnswer::Graph(response) => {
                let text = response.answer.as_ref().map(|a| a.answer.as_str()).unwrap_or("(none)");
                println!("  answer: {text} ({} evidence triples)\n", response.evidence.len());
            }
        }
        causes.push(outcome.decision.cause);
    }

    let stats = RoutingStats::from_causes(&causes);
    println!(
        "routing stats: {}/{} by retrieval ({:.0}%), {}/{} by graph ({:.0}%), escalation rate {:.0}%",
        stats.rag_count,
        stats.total,
        stats.rag_share * 100.0,
        stats.graph_count,
        stats.total,
        stats.graph_share * 100.0,
        stats.escalation_rate * 100.0
    );
    Ok(())
}
