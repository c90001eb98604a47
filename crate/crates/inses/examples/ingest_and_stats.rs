//! Building a property graph from line-delimited triple records: duplicate
//! handling, name canonicalization, direction-agnostic adjacency, and the
//! save/load round trip.
//!
//!     cargo run --example ingest_and_stats

use std::collections::BTreeSet;
use std::error::Error;

use inses::graph::{NodeId, PropertyGraph};

const RECORDS: &str = r#"
{"head": "The Danube", "relation": "Flows through", "tail": "Vienna", "source_text": "The Danube flows through Vienna."}
{"head": "The Danube", "relation": "Flows through", "tail": "Budapest"}
{"head": "the   danube", "relation": "Flows through", "tail": "Vienna", "source_text": "The Danube flows through Vienna."}
{"head": "Vienna", "relation": "Capital of", "tail": "Austria"}
{"head": "Budapest", "relation": "Capital of", "tail": "Hungary"}
{"head": "The Danube", "relation": "Empties into", "tail": "The Black Sea"}
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let mut graph = PropertyGraph::new(32);
    let report = graph.ingest(RECORDS.trim().as_bytes())?;
    println!(
        "read {} lines: {} edges added, {} duplicates dropped",
        report.lines_read, report.edges_added, report.duplicates
    );

    let stats = graph.stats();
    println!(
        "graph: {} nodes, {} edges, average degree {:.2}\n",
        stats.node_count, stats.edge_count, stats.average_degree
    );

    // Node ids are canonical (lowercased, whitespace collapsed); display
    // names keep the first surface form seen.
    let danube = NodeId::new("  THE   DANUBE ");
    println!("canonical id {:?} displays as {:?}", danube.as_str(), graph.display_name(&danube).unwrap());

    // Adjacency ignores edge direction: asking around Vienna returns both
    // the edge pointing at it and the edge leaving it.
    let around: BTreeSet<NodeId> = [NodeId::new("Vienna")].into();
    println!("\ntriples touching Vienna:");
    for triple in graph.adjacent_triples(&around) {
        println!("  {} → {} → {}", triple.head, triple.relation, triple.tail);
    }

    // The save format is the ingest format plus a header, so graphs round
    // trip exactly.
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("rivers.jsonl");
    graph.save_to_path(&path)?;
    let reloaded = PropertyGraph::load_from_path(&path)?;
    println!("\nsaved to {} and reloaded: graphs equal = {}", path.display(), reloaded == graph);
    Ok(())
}
