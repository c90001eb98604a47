//! Knowledge-graph question answering built around an iterative, embedding
//! guided neighborhood search.
//!
//! The crate covers the full pipeline:
//!
//! - [`graph`]: property-graph store with direction-agnostic adjacency and a
//!   line-delimited JSON exchange format.
//! - [`embedding`]: cosine similarity, exact and approximate nearest-neighbor
//!   indices, and pluggable text embedders.
//! - [`navigator`]: the decision layer that inspects a search frontier and
//!   picks which edges to follow, with language-model, lexical, and scripted
//!   implementations.
//! - [`search`]: the iterative frontier-expansion loop that collects evidence
//!   triples for a question.
//! - [`rag`]: a flat chunk-retrieval baseline with answer confidence.
//! - [`router`]: dispatches questions between the flat baseline and the graph
//!   search, escalating low-confidence answers.
//! - [`eval`]: exact-match and model-judged scoring over JSONL datasets.
//! - [`cli`]: the `ingest` / `query` / `route` / `eval` / `stats` command
//!   surface built on all of the above.
//!
//! Most capabilities have a runnable demonstration under `examples/`; start
//! with `cargo run --example case_study`.

pub mod cli;
pub mod embedding;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod llm;
pub mod navigator;
pub mod prompts;
pub mod rag;
pub mod router;
pub mod search;
pub(crate) mod text;
