//! Iterative frontier search over the graph.
//!
//! A search starts from the nodes nearest to the question's entity mentions
//! and repeats a fixed cycle: mark the frontier visited, list the triples
//! adjacent to it, let a [`Navigator`] pick which of them to keep as
//! evidence, and build the next frontier from the endpoints those picks
//! opened up plus any unvisited node sufficiently similar to a current
//! frontier node. The walk ends when the navigator declares the evidence
//! sufficient, the frontier empties, or the iteration budget runs out, and
//! every iteration is recorded in a trace.
//!
//! # Example
//!
//! ```
//! use inses::embedding::{HashEmbedder, IndexKind, VectorIndex};
//! use inses::graph::PropertyGraph;
//! use inses::navigator::LexicalNavigator;
//! use inses::search::{SearchConfig, SearchEngine};
//!
//! let jsonl = r#"{"head":"The North Star","relation":"Published by","tail":"Frederick Douglass"}"#;
//! let graph = PropertyGraph::from_jsonl(jsonl, 64).unwrap();
//! let embedder = HashEmbedder::new(64);
//! let index = VectorIndex::for_graph(&graph, &embedder, IndexKind::Auto).unwrap();
//! let engine = SearchEngine::new(&graph, &index, &embedder, SearchConfig::default());
//! let mut navigator = LexicalNavigator::default();
//! let outcome = engine
//!     .search("Who published the North Star?", &["north star".into()], &mut navigator)
//!     .unwrap();
//! assert_eq!(outcome.evidence.len(), 1);
//! ```

use std::collections::{BTreeSet, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{Embedder, EmbeddingError, VectorIndex};
use crate::graph::{NodeId, PropertyGraph, Triple};
use crate::llm::{BackendError, ChatBackend};
use crate::navigator::{
    self, EntityExtractor, Navigator, NavigatorContext, NavigatorDecision, NavigatorError,
};
use crate::prompts;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no entity mentions to anchor the search")]
    NoAnchors,
    #[error("entity extraction failed: {0}")]
    Extraction(NavigatorError),
    #[error("navigation failed at iteration {iteration}: {source}")]
    Navigation {
        iteration: usize,
        #[source]
        source: NavigatorError,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("answer response could not be parsed after a retry; raw response: {raw}")]
    AnswerUnparseable { raw: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub type SearchResult<T> = Result<T, SearchError>;

/// Tuning knobs for one search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Iteration budget.
    pub max_iter: usize,
    /// Minimum cosine similarity for frontier expansion by embedding.
    pub tau_sim: f64,
    /// How many similar nodes each frontier node may pull in per iteration.
    pub expansion_per_node: usize,
    /// Cap on triples accepted from the navigator in one step.
    pub max_select_per_step: usize,
    /// Optional minimum similarity for anchoring a mention to a node;
    /// mentions below it are dropped instead of anchored to their nearest
    /// node.
    pub entity_anchor_floor: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iter: 6,
            tau_sim: 0.80,
            expansion_per_node: 1,
            max_select_per_step: 8,
            entity_anchor_floor: None,
        }
    }
}

/// Why a search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The navigator declared the evidence sufficient.
    Sufficient,
    /// The frontier became empty.
    EmptyFrontier,
    /// The iteration budget ran out.
    MaxIterations,
}

/// The navigator's step outcome as recorded in the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub sufficient: bool,
    pub selected: Vec<Triple>,
    pub candidates: Vec<NodeId>,
}

/// One iteration of the walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Frontier at the start of the iteration, sorted.
    pub frontier: Vec<NodeId>,
    /// Size of the adjacency listing shown to the navigator.
    pub adjacent_count: usize,
    pub decision: DecisionRecord,
    /// Nodes that cleared the similarity threshold from this frontier;
    /// absent when the iteration ended the search.
    pub similarity_matches: Option<Vec<NodeId>>,
    /// Frontier handed to the next iteration; absent when the iteration
    /// ended the search.
    pub frontier_after: Option<Vec<NodeId>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub iterations: Vec<IterationRecord>,
}

impl SearchTrace {
    /// One JSON object per iteration.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for record in &self.iterations {
            serde_json::to_writer(&mut writer, record)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Evidence triples in first-selection order, deduplicated.
    pub evidence: Vec<Triple>,
    pub stop_reason: StopReason,
    pub trace: SearchTrace,
}

/// Runs searches against one graph + index + embedder triplet.
pub struct SearchEngine<'a> {
    graph: &'a PropertyGraph,
    index: &'a VectorIndex,
    embedder: &'a dyn Embedder,
    config: SearchConfig,
}

impl<'a> SearchEngine<'a> {
    pub fn new(
        graph: &'a PropertyGraph,
        index: &'a VectorIndex,
        embedder: &'a dyn Embedder,
        config: SearchConfig,
    ) -> Self {
        SearchEngine { graph, index, embedder, config }
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn graph(&self) -> &PropertyGraph {
        self.graph
    }

    /// Maps each mention to its most similar node. With an anchor floor
    /// configured, mentions whose best similarity falls below it are
    /// dropped; without one, every mention anchors somewhere (on a nonempty
    /// index). No mentions at all is an error, but an empty result set is
    /// not: it simply yields a search that stops immediately.
    pub fn initial_frontier(&self, mentions: &[String]) -> SearchResult<BTreeSet<NodeId>> {
        if mentions.is_empty() {
            return Err(SearchError::NoAnchors);
        }
        let mut frontier = BTreeSet::new();
        for mention in mentions {
            let vector = self.embedder.embed(mention)?;
            let Some((id, similarity)) = self.index.nearest(&vector, &[])? else {
                continue;
            };
            if let Some(floor) = self.config.entity_anchor_floor {
                if similarity < floor {
                    continue;
                }
            }
            frontier.insert(id);
        }
        Ok(frontier)
    }

    /// Extracts mentions with `extractor`, then runs [`SearchEngine::search`].
    pub fn search_with_extractor(
        &self,
        query: &str,
        extractor: &dyn EntityExtractor,
        navigator: &mut dyn Navigator,
    ) -> SearchResult<SearchOutcome> {
        let mentions = extractor.extract(query).map_err(SearchError::Extraction)?;
        self.search(query, &mentions, navigator)
    }

    pub fn search(
        &self,
        query: &str,
        mentions: &[String],
        navigator: &mut dyn Navigator,
    ) -> SearchResult<SearchOutcome> {
        let names = self.graph.display_names();
        let mut frontier = self.initial_frontier(mentions)?;

        let mut visited: BTreeSet<NodeId> = BTreeSet::new();
        let mut visit_order: Vec<NodeId> = Vec::new();
        let mut evidence: Vec<Triple> = Vec::new();
        let mut evidence_seen: HashSet<Triple> = HashSet::new();
        let mut trace = SearchTrace::default();
        let mut stop_reason = None;

        let mut iteration = 0;
        while iteration < self.config.max_iter && !frontier.is_empty() {
            for node in &frontier {
                if visited.insert(node.clone()) {
                    visit_order.push(node.clone());
                }
            }

            let frontier_vec: Vec<NodeId> = frontier.iter().cloned().collect();
            let adjacent: Vec<Triple> =
                self.graph.adjacent_triples(&frontier).into_iter().collect();
            let ctx = NavigatorContext {
                query: query.to_owned(),
                visited: visit_order.clone(),
                selected: evidence.clone(),
                frontier: frontier_vec.clone(),
                adjacent: adjacent.clone(),
                names: names.clone(),
            };

            let mut decision = navigator
                .decide(&ctx)
                .map_err(|source| SearchError::Navigation { iteration, source })?;
            if decision.selected.len() > self.config.max_select_per_step {
                let mut trimmed = decision.selected;
                trimmed.truncate(self.config.max_select_per_step);
                decision = NavigatorDecision::new(decision.sufficient, trimmed, &frontier_vec);
            }

            for triple in &decision.selected {
                if evidence_seen.insert(triple.clone()) {
                    evidence.push(triple.clone());
                }
            }

            let mut record = IterationRecord {
                iteration,
                frontier: frontier_vec,
                adjacent_count: adjacent.len(),
                decision: DecisionRecord {
                    sufficient: decision.sufficient,
                    selected: decision.selected.clone(),
                    candidates: decision.candidates.iter().cloned().collect(),
                },
                similarity_matches: None,
                frontier_after: None,
            };

            if decision.sufficient {
                trace.iterations.push(record);
                stop_reason = Some(StopReason::Sufficient);
                break;
            }

            let matches = self.similarity_matches(&frontier)?;
            let mut next: BTreeSet<NodeId> =
                decision.candidates.union(&matches).cloned().collect();
            next.retain(|n| !visited.contains(n));

            record.similarity_matches = Some(matches.into_iter().collect());
            record.frontier_after = Some(next.iter().cloned().collect());
            trace.iterations.push(record);

            frontier = next;
            iteration += 1;
        }

        let stop_reason = stop_reason.unwrap_or(if frontier.is_empty() {
            StopReason::EmptyFrontier
        } else {
            StopReason::MaxIterations
        });
        Ok(SearchOutcome { evidence, stop_reason, trace })
    }

    /// For each frontier node, its most similar other nodes (up to
    /// `expansion_per_node`) that clear `tau_sim`.
    pub fn similarity_matches(
        &self,
        frontier: &BTreeSet<NodeId>,
    ) -> SearchResult<BTreeSet<NodeId>> {
        let mut matches = BTreeSet::new();
        if self.config.expansion_per_node == 0 {
            return Ok(matches);
        }
        for node in frontier {
            let Some(vector) = self.index.vector(node) else {
                continue;
            };
            let hits = self.index.top_k(
                &vector.to_vec(),
                self.config.expansion_per_node,
                std::slice::from_ref(node),
            )?;
            for (id, similarity) in hits {
                if similarity >= self.config.tau_sim {
                    matches.insert(id);
                }
            }
        }
        Ok(matches)
    }
}

/// Final answer synthesized from collected evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphAnswer {
    pub reasoning: String,
    pub answer: String,
}

/// The answer-synthesis prompt over an evidence listing.
pub fn graph_answer_prompt(query: &str, evidence: &[Triple], graph: &PropertyGraph) -> String {
    let names = graph.display_names();
    let context = navigator::render_numbered_triples(evidence, &names);
    prompts::fill(prompts::GRAPH_ANSWER, &[("query", query), ("context", &context)])
}

/// Parses an answer response: the first JSON object with a string `answer`
/// field wins; `reasoning` defaults to empty. Returns the raw text as the
/// error payload when nothing parses.
pub fn parse_graph_answer(raw: &str) -> Result<GraphAnswer, String> {
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
    Ok(GraphAnswer { reasoning, answer })
}

/// Asks `backend` to answer `query` from `evidence`, retrying once with a
/// format reminder if the first response does not parse.
pub fn answer_from_evidence(
    query: &str,
    evidence: &[Triple],
    graph: &PropertyGraph,
    backend: &dyn ChatBackend,
) -> SearchResult<GraphAnswer> {
    let prompt = graph_answer_prompt(query, evidence, graph);
    let response = backend.complete(&prompt)?;
    match parse_graph_answer(&response) {
        Ok(answer) => Ok(answer),
        Err(_) => {
            log::warn!("answer response unparseable, retrying once");
            let retry_prompt = format!("{prompt}\n\nRespond with only the JSON object.");
            let retry = backend.complete(&retry_prompt)?;
            parse_graph_answer(&retry).map_err(|raw| SearchError::AnswerUnparseable { raw })
        }
    }
}
