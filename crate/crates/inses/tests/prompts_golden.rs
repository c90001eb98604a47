//! Byte-for-byte checks of every rendered prompt against checked-in
//! golden files. The goldens were typed out by hand from the template
//! text, so a drift in a template, a render helper, or the placeholder
//! scanner shows up as a diff here.

use std::collections::BTreeMap;

use inses::eval::{judge_equivalence_prompt, judge_sufficiency_prompt};
use inses::graph::{NodeId, PropertyGraph, Triple, TripleRecord};
use inses::navigator::{extraction_prompt, navigation_prompt, NavigatorContext};
use inses::rag::{rag_answer_prompt, Chunk, ScoredChunk};
use inses::search::graph_answer_prompt;

fn triple(head: &str, relation: &str, tail: &str, source: Option<&str>) -> Triple {
    Triple {
        head: NodeId::new(head),
        relation: relation.to_owned(),
        tail: NodeId::new(tail),
        source_text: source.map(str::to_owned),
    }
}

fn assert_matches_golden(rendered: &str, golden: &str, label: &str) {
    assert_eq!(rendered, golden, "{label} prompt diverged from its golden file");
}

#[test]
fn entity_extraction_prompt_matches_golden() {
    let rendered = extraction_prompt("Who founded the company that acquired Pixar?");
    assert_matches_golden(
        &rendered,
        include_str!("golden/entity_extraction.golden.txt"),
        "entity extraction",
    );
}

#[test]
fn navigation_prompt_matches_golden() {
    let names: BTreeMap<NodeId, String> = [
        ("golden gate bridge", "Golden Gate Bridge"),
        ("san francisco", "San Francisco"),
        ("golden gate strait", "Golden Gate Strait"),
        ("marin county", "Marin County"),
        ("california", "California"),
    ]
    .into_iter()
    .map(|(id, name)| (NodeId::new(id), name.to_owned()))
    .collect();

    let ctx = NavigatorContext {
        query: "Which bridge connects the two cities?".to_owned(),
        visited: vec![NodeId::new("Golden Gate Bridge"), NodeId::new("San Francisco")],
        selected: vec![triple(
            "Golden Gate Bridge",
            "Spans",
            "Golden Gate Strait",
            Some("The Golden Gate Bridge spans the Golden Gate strait."),
        )],
        frontier: vec![NodeId::new("Marin County"), NodeId::new("San Francisco")],
        adjacent: vec![
            triple(
                "Golden Gate Bridge",
                "Connects",
                "San Francisco",
                Some("The bridge connects San Francisco to Marin County."),
            ),
            triple("Marin County", "North of", "San Francisco", None),
            triple(
                "San Francisco",
                "Located in",
                "California",
                Some("San Francisco is in California."),
            ),
        ],
        names,
    };

    let rendered = navigation_prompt(&ctx);
    assert_matches_golden(&rendered, include_str!("golden/navigation.golden.txt"), "navigation");
}

#[test]
fn graph_answer_prompt_matches_golden() {
    let mut graph = PropertyGraph::new(4);
    graph
        .insert(
            &TripleRecord::new("The North Star", "Published by", "Frederick Douglass")
                .with_source("Frederick Douglass published The North Star in Rochester."),
        )
        .unwrap();
    graph
        .insert(&TripleRecord::new("Frederick Douglass", "Lived in", "Rochester"))
        .unwrap();

    let evidence = vec![
        triple(
            "The North Star",
            "Published by",
            "Frederick Douglass",
            Some("Frederick Douglass published The North Star in Rochester."),
        ),
        triple("Frederick Douglass", "Lived in", "Rochester", None),
    ];

    let rendered = graph_answer_prompt("Who published The North Star?", &evidence, &graph);
    assert_matches_golden(
        &rendered,
        include_str!("golden/graph_answer.golden.txt"),
        "graph answer",
    );
}

#[test]
fn rag_answer_prompt_matches_golden() {
    let chunks = vec![
        ScoredChunk {
            chunk: Chunk {
                id: "c1".to_owned(),
                text: "Paris is the capital and largest city of France.".to_owned(),
            },
            score: 0.93,
        },
        ScoredChunk {
            chunk: Chunk {
                id: "c2".to_owned(),
                text: "France is a country in Western Europe.".to_owned(),
            },
            score: 0.71,
        },
    ];

    let rendered = rag_answer_prompt("What is the capital of France?", &chunks);
    assert_matches_golden(&rendered, include_str!("golden/rag_answer.golden.txt"), "rag answer");
}

#[test]
fn judge_equivalence_prompt_matches_golden() {
    let rendered = judge_equivalence_prompt(
        "What is the capital of France?",
        "Paris",
        "The capital is Paris",
    );
    assert_matches_golden(
        &rendered,
        include_str!("golden/judge_equivalence.golden.txt"),
        "judge equivalence",
    );
}

#[test]
fn judge_sufficiency_prompt_matches_golden() {
    let rendered = judge_sufficiency_prompt("Paris is the capital of France.", "Paris");
    assert_matches_golden(
        &rendered,
        include_str!("golden/judge_sufficiency.golden.txt"),
        "judge sufficiency",
    );
}

#[test]
fn empty_slots_render_as_none() {
    let ctx = NavigatorContext {
        query: "q".to_owned(),
        visited: vec![],
        selected: vec![],
        frontier: vec![],
        adjacent: vec![],
        names: BTreeMap::new(),
    };
    let rendered = navigation_prompt(&ctx);
    assert!(rendered.contains("The visited nodes:\nnone\n"));
    assert!(rendered.contains("The selected triplets and their corresponding source text:\nnone\n"));
    assert!(rendered.contains("The current nodes:\nnone\n"));
    assert!(rendered.ends_with("The adjacent triplets and their corresponding source text:\nnone\n"));

    let rendered = rag_answer_prompt("q", &[]);
    assert!(rendered.contains("Context information is below:\nnone\n"));
}
