//! Question routing between the flat retrieval baseline and the graph
//! search.
//!
//! Questions judged to need multi-hop reasoning go straight to the graph
//! search. Everything else tries the cheap retrieval path first and
//! escalates to the graph only when the answer's self-reported confidence
//! fails to clear the configured threshold (strictly greater-than: an answer
//! exactly at the threshold escalates).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::Embedder;
use crate::graph::Triple;
use crate::llm::{BackendError, BackendResult, ChatBackend};
use crate::navigator::{EntityExtractor, Navigator};
use crate::prompts;
use crate::rag::{self, ChunkIndex, RagAnswer, RagError};
use crate::search::{answer_from_evidence, GraphAnswer, SearchEngine, SearchError, StopReason};
use crate::text;

#[derive(Debug, Error)]
pub enum RouterError {
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub type RouterResult<T> = Result<T, RouterError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouterConfig {
    /// A retrieval answer must exceed this confidence to be accepted.
    pub confidence_threshold: f64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig { confidence_threshold: 0.70 }
    }
}

/// Which pipeline produced the final answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Rag,
    Graph,
}

/// Why the router chose that pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteCause {
    /// Classified simple; the retrieval answer cleared the threshold.
    SimpleHighConfidence,
    /// Classified simple; the retrieval answer did not clear the threshold.
    SimpleLowConfidenceEscalated,
    /// Classified as needing multi-hop reasoning.
    Multihop,
}

impl RouteCause {
    pub fn route(self) -> Route {
        match self {
            RouteCause::SimpleHighConfidence => Route::Rag,
            RouteCause::SimpleLowConfidenceEscalated | RouteCause::Multihop => Route::Graph,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub route: Route,
    pub cause: RouteCause,
    /// Confidence of the retrieval attempt, when one was made.
    pub rag_confidence: Option<f64>,
}

/// Graph-search result as the router reports it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphResponse {
    /// Synthesized answer; absent when no chat backend is wired in.
    pub answer: Option<GraphAnswer>,
    pub evidence: Vec<Triple>,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RoutedAnswer {
    Rag(RagAnswer),
    Graph(GraphResponse),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub decision: RouteDecision,
    pub answer: RoutedAnswer,
}

/// Decides whether a question needs multi-hop reasoning.
pub trait MultihopClassifier {
    fn is_multihop(&self, question: &str) -> BackendResult<bool>;
}

/// Subordinating question words that signal an embedded clause, as in
/// "the author who wrote X". The leading word of a question does not count.
const SUBORDINATORS: [&str; 7] = ["that", "when", "where", "which", "who", "whom", "whose"];

/// Offline classifier scoring surface complexity: the number of content
/// words, plus two per embedded question word, plus one per coordinating
/// "and"/"or". Scores of six or more count as multi-hop.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicClassifier;

impl HeuristicClassifier {
    pub fn signal(question: &str) -> usize {
        let tokens = text::tokens(question);
        let content = tokens.iter().filter(|t| !text::is_stopword(t)).count();
        let embedded = tokens
            .iter()
            .enumerate()
            .filter(|(i, t)| *i > 0 && SUBORDINATORS.contains(&t.as_str()))
            .count();
        let coordinations = tokens.iter().filter(|t| *t == "and" || *t == "or").count();
        content + 2 * embedded + coordinations
    }
}

impl MultihopClassifier for HeuristicClassifier {
    fn is_multihop(&self, question: &str) -> BackendResult<bool> {
        Ok(HeuristicClassifier::signal(question) >= 6)
    }
}

const CLASSIFIER_PROMPT: &str = "Decide whether answering the question below requires combining three or more distinct facts (multi-hop reasoning).\nRespond with only \"yes\" or \"no\".\n\nQuestion: {question}";

/// Asks a chat backend whether the question needs multi-hop reasoning. Any
/// reply other than yes/no is a malformed-payload error, which the router
/// treats as multi-hop rather than failing the question.
pub struct LlmClassifier {
    backend: Arc<dyn ChatBackend>,
}

impl LlmClassifier {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        LlmClassifier { backend }
    }
}

impl MultihopClassifier for LlmClassifier {
    fn is_multihop(&self, question: &str) -> BackendResult<bool> {
        let prompt = prompts::fill(CLASSIFIER_PROMPT, &[("question", question)]);
        let response = self.backend.complete(&prompt)?;
        let verdict = response.trim().to_lowercase();
        if verdict.starts_with("yes") {
            Ok(true)
        } else if verdict.starts_with("no") {
            Ok(false)
        } else {
            Err(BackendError::MalformedPayload(format!(
                "expected yes or no, got {response:?}"
            )))
        }
    }
}

/// The retrieval leg of the router.
pub trait RagStage {
    fn answer(&mut self, question: &str) -> RouterResult<RagAnswer>;
}

/// The graph-search leg of the router.
pub trait GraphStage {
    fn answer(&mut self, question: &str) -> RouterResult<GraphResponse>;
}

/// Retrieval stage over a chunk index and chat backend.
pub struct LiveRagStage<'a> {
    pub index: &'a ChunkIndex,
    pub embedder: &'a dyn Embedder,
    pub backend: &'a dyn ChatBackend,
    pub top_k: usize,
}

impl RagStage for LiveRagStage<'_> {
    fn answer(&mut self, question: &str) -> RouterResult<RagAnswer> {
        let (answer, _) =
            rag::answer_with_rag(question, self.index, self.embedder, self.backend, self.top_k)?;
        Ok(answer)
    }
}

/// Graph stage running a full search per question and synthesizing an
/// answer when a chat backend is available.
pub struct LiveGraphStage<'a> {
    pub engine: &'a SearchEngine<'a>,
    pub extractor: &'a dyn EntityExtractor,
    pub navigator: Box<dyn Navigator + 'a>,
    pub answer_backend: Option<&'a dyn ChatBackend>,
}

impl GraphStage for LiveGraphStage<'_> {
    fn answer(&mut self, question: &str) -> RouterResult<GraphResponse> {
        let outcome =
            self.engine.search_with_extractor(question, self.extractor, self.navigator.as_mut())?;
        let answer = match self.answer_backend {
            Some(backend) => Some(answer_from_evidence(
                question,
                &outcome.evidence,
                self.engine.graph(),
                backend,
            )?),
            None => None,
        };
        Ok(GraphResponse {
            answer,
            evidence: outcome.evidence,
            stop_reason: outcome.stop_reason,
        })
    }
}

/// Dispatches questions across the two stages.
pub struct Router<'a> {
    classifier: &'a dyn MultihopClassifier,
    rag: &'a mut dyn RagStage,
    graph: &'a mut dyn GraphStage,
    config: RouterConfig,
}

impl<'a> Router<'a> {
    pub fn new(
        classifier: &'a dyn MultihopClassifier,
        rag: &'a mut dyn RagStage,
        graph: &'a mut dyn GraphStage,
        config: RouterConfig,
    ) -> Self {
        Router { classifier, rag, graph, config }
    }

    pub fn route(&mut self, question: &str) -> RouterResult<RouteOutcome> {
        let multihop = match self.classifier.is_multihop(question) {
            Ok(verdict) => verdict,
            Err(error) => {
                log::warn!("multi-hop classification failed ({error}), assuming multi-hop");
                true
            }
        };
        if multihop {
            let response = self.graph.answer(question)?;
            return Ok(RouteOutcome {
                decision: RouteDecision {
                    route: Route::Graph,
                    cause: RouteCause::Multihop,
                    rag_confidence: None,
                },
                answer: RoutedAnswer::Graph(response),
            });
        }

        let rag_answer = self.rag.answer(question)?;
        if rag_answer.confidence > self.config.confidence_threshold {
            return Ok(RouteOutcome {
                decision: RouteDecision {
                    route: Route::Rag,
                    cause: RouteCause::SimpleHighConfidence,
                    rag_confidence: Some(rag_answer.confidence),
                },
                answer: RoutedAnswer::Rag(rag_answer),
            });
        }

        let response = self.graph.answer(question)?;
        Ok(RouteOutcome {
            decision: RouteDecision {
                route: Route::Graph,
                cause: RouteCause::SimpleLowConfidenceEscalated,
                rag_confidence: Some(rag_answer.confidence),
            },
            answer: RoutedAnswer::Graph(response),
        })
    }
}

/// Aggregate routing behavior over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingStats {
    pub total: usize,
    pub rag_count: usize,
    pub graph_count: usize,
    pub escalated_count: usize,
    pub multihop_count: usize,
    /// Fraction of questions answered by the retrieval path.
    pub rag_share: f64,
    /// Fraction of questions answered by the graph path.
    pub graph_share: f64,
    /// Among questions classified simple, the fraction escalated.
    pub escalation_rate: f64,
}

impl RoutingStats {
    pub fn from_causes(causes: &[RouteCause]) -> Self {
        let total = causes.len();
        let high = causes.iter().filter(|c| **c == RouteCause::SimpleHighConfidence).count();
        let escalated =
            causes.iter().filter(|c| **c == RouteCause::SimpleLowConfidenceEscalated).count();
        let multihop = causes.iter().filter(|c| **c == RouteCause::Multihop).count();
        let graph = escalated + multihop;
        let share = |count: usize| if total == 0 { 0.0 } else { count as f64 / total as f64 };
        let simple = high + escalated;
        RoutingStats {
            total,
            rag_count: high,
            graph_count: graph,
            escalated_count: escalated,
            multihop_count: multihop,
            rag_share: share(high),
            graph_share: share(graph),
            escalation_rate: if simple == 0 { 0.0 } else { escalated as f64 / simple as f64 },
        }
    }
}
