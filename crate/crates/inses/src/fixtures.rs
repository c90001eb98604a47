//! A small, self-contained regression graph about Frederick Douglass with
//! hand-built embeddings, plus recorded navigation scripts over it.
//!
//! The question it supports takes four hops to answer, and the decisive
//! connection (from the memorial association to Helen Pitts Douglass) is
//! reachable only by stepping across semantically similar nodes that share
//! no edge. Two scripts replay the same navigation choices; with similarity
//! expansion disabled the walk strands, and with it enabled the walk
//! completes. See `cargo run --example case_study`.

use crate::embedding::{EmbeddingError, FixtureEmbedder, IndexKind, VectorIndex};
use crate::graph::{GraphError, PropertyGraph};
use crate::navigator::ReplayScript;

/// Triple records of the regression graph (line-delimited JSON).
pub const CASE_STUDY_TRIPLES: &str = include_str!("../fixtures/douglass_triples.jsonl");

/// Node and mention embeddings for the regression graph (16-dimensional).
pub const CASE_STUDY_VECTORS: &str = include_str!("../fixtures/douglass_vectors.json");

/// Navigation script that never strays from explicit edges.
pub const CASE_STUDY_SCRIPT_DIRECT: &str = include_str!("../fixtures/script_no_expansion.json");

/// Navigation script for the run that leans on similarity expansion.
pub const CASE_STUDY_SCRIPT_EXPANSION: &str = include_str!("../fixtures/script_expansion.json");

/// The four-hop question the fixture answers.
pub const CASE_STUDY_QUERY: &str = "Who was the spouse of a leading speaker against slavery and publisher of an antislavery newspaper?";

/// The answer the expanded walk supports.
pub const CASE_STUDY_ANSWER: &str = "Helen Pitts Douglass";

pub fn case_study_graph() -> Result<PropertyGraph, GraphError> {
    PropertyGraph::from_jsonl(CASE_STUDY_TRIPLES, 16)
}

pub fn case_study_embedder() -> Result<FixtureEmbedder, EmbeddingError> {
    FixtureEmbedder::from_json(CASE_STUDY_VECTORS)
}

/// Exact index over the fixture graph.
pub fn case_study_index(
    graph: &PropertyGraph,
    embedder: &FixtureEmbedder,
) -> Result<VectorIndex, EmbeddingError> {
    VectorIndex::for_graph(graph, embedder, IndexKind::Exact)
}

pub fn script_direct() -> ReplayScript {
    ReplayScript::from_json(CASE_STUDY_SCRIPT_DIRECT).expect("fixture script parses")
}

pub fn script_expansion() -> ReplayScript {
    ReplayScript::from_json(CASE_STUDY_SCRIPT_EXPANSION).expect("fixture script parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedder;

    #[test]
    fn fixture_graph_loads_with_expected_shape() {
        let graph = case_study_graph().unwrap();
        assert_eq!(graph.edge_count(), 14);
        assert_eq!(graph.node_count(), 22);
        assert_eq!(graph.embedding_dim(), 16);
    }

    #[test]
    fn fixture_embedder_covers_every_node_and_mention() {
        let graph = case_study_graph().unwrap();
        let embedder = case_study_embedder().unwrap();
        for node in graph.nodes() {
            assert!(embedder.embed(node.as_str()).is_ok(), "missing vector for {node}");
        }
        for script in [script_direct(), script_expansion()] {
            for mention in &script.entities {
                assert!(embedder.embed(mention).is_ok(), "missing vector for {mention:?}");
            }
        }
    }

    #[test]
    fn scripts_agree_on_their_shared_prefix() {
        let direct = script_direct();
        let expansion = script_expansion();
        assert_eq!(direct.entities, expansion.entities);
        assert_eq!(direct.decisions.len(), 3);
        assert_eq!(expansion.decisions.len(), 5);
        assert_eq!(direct.decisions[..2], expansion.decisions[..2]);
        assert!(expansion.decisions.last().unwrap().sufficient);
        assert!(direct.decisions.iter().all(|d| !d.sufficient));
    }
}
