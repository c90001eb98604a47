//! The bundled four-hop question, run twice over the same graph with the
//! same recorded navigation choices: once with similarity expansion
//! disabled, once with it enabled. The decisive fact sits behind a node
//! that shares no edge with anything the walk has seen, so the first run
//! strands and the second one crosses to it.
//!
//!     cargo run --example case_study

use std::error::Error;

use inses::fixtures::{
    case_study_embedder, case_study_graph, case_study_index, script_direct, script_expansion,
    CASE_STUDY_ANSWER, CASE_STUDY_QUERY,
};
use inses::graph::{NodeId, PropertyGraph};
use inses::llm::CannedBackend;
use inses::navigator::ScriptedNavigator;
use inses::search::{answer_from_evidence, SearchConfig, SearchEngine, SearchOutcome};

fn names(graph: &PropertyGraph, ids: &[NodeId]) -> String {
    if ids.is_empty() {
        return "(none)".to_owned();
    }
    ids.iter()
        .map(|id| graph.display_name(id).unwrap_or(id.as_str()).to_owned())
        .collect::<Vec<_>>()
        .join(", ")
}

fn print_walk(graph: &PropertyGraph, outcome: &SearchOutcome) {
    for step in &outcome.trace.iterations {
        println!("  iteration {}", step.iteration);
        println!("    frontier: {}", names(graph, &step.frontier.iter().cloned().collect::<Vec<_>>()));
        println!("    adjacent triples shown: {}", step.adjacent_count);
        for triple in &step.decision.selected {
            let head = graph.display_name(&triple.head).unwrap_or(triple.head.as_str());
            let tail = graph.display_name(&triple.tail).unwrap_or(triple.tail.as_str());
            println!("    selected: {head} → {} → {tail}", triple.relation);
        }
        match &step.similarity_matches {
            Some(matches) if !matches.is_empty() => {
                println!("    pulled in by similarity: {}", names(graph, matches));
            }
            Some(_) => println!("    pulled in by similarity: (none cleared the threshold)"),
            None => {}
        }
    }
    println!("  stopped: {:?} after {} iterations", outcome.stop_reason, outcome.trace.iterations.len());
}

fn main() -> Result<(), Box<dyn Error>> {
    let graph = case_study_graph()?;
    let embedder = case_study_embedder()?;
    let index = case_study_index(&graph, &embedder)?;

    println!("question: {CASE_STUDY_QUERY}\n");

    // Run 1: tau_sim = 1.0 disables similarity expansion, since no two
    // distinct nodes in the fixture are that close.
    let strict = SearchConfig { tau_sim: 1.0, ..SearchConfig::default() };
    let engine = SearchEngine::new(&graph, &index, &embedder, strict);
    let script = script_direct();
    let mentions = script.entities.clone();
    let mut navigator = ScriptedNavigator::new(script);
    let stranded = engine.search(CASE_STUDY_QUERY, &mentions, &mut navigator)?;
    println!("--- explicit edges only ---");
    print_walk(&graph, &stranded);
    println!("  evidence collected: {} triples, decisive fact missing\n", stranded.evidence.len());

    // Run 2: the default threshold lets each frontier node pull in its
    // closest neighbors by embedding, edge or no edge.
    let engine = SearchEngine::new(&graph, &index, &embedder, SearchConfig::default());
    let script = script_expansion();
    let mentions = script.entities.clone();
    let mut navigator = ScriptedNavigator::new(script);
    let completed = engine.search(CASE_STUDY_QUERY, &mentions, &mut navigator)?;
    println!("--- with similarity expansion ---");
    print_walk(&graph, &completed);
    println!("  evidence collected: {} triples", completed.evidence.len());

    let decisive = completed
        .evidence
        .iter()
        .find(|t| t.tail.as_str() == "second wife of frederick douglass")
        .expect("the expanded walk reaches the decisive fact");
    println!(
        "  decisive fact: {} → {} → {}\n",
        graph.display_name(&decisive.head).unwrap(),
        decisive.relation,
        graph.display_name(&decisive.tail).unwrap()
    );

    // Synthesize the final answer from the evidence. A canned backend
    // stands in for a live model so the example runs offline.
    let backend = CannedBackend::new([format!(
        "{{\"reasoning\": \"The North Star was published by Frederick Douglass, and Helen Pitts \
         Douglass was his second wife.\", \"answer\": \"{CASE_STUDY_ANSWER}\"}}"
    )]);
    let answer = answer_from_evidence(CASE_STUDY_QUERY, &completed.evidence, &graph, &backend)?;
    println!("answer: {}", answer.answer);
    println!("reasoning: {}", answer.reasoning);
    Ok(())
}
