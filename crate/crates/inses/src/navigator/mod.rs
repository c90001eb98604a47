//! Navigation decisions over a search frontier.
//!
//! Each search iteration hands a [`Navigator`] the question, the visit
//! history, the evidence collected so far, the frontier nodes, and the
//! triples adjacent to that frontier. The navigator answers with a
//! [`NavigatorDecision`]: whether the evidence now suffices, which adjacent
//! triples to follow, and the candidate nodes those selections open up.
//!
//! Implementations:
//!
//! - [`LlmNavigator`]: renders the frontier into a prompt, asks a chat
//!   backend, and parses its JSON decision leniently (one retry on garbage).
//! - [`LexicalNavigator`]: deterministic token-overlap scoring, no model.
//! - [`ScriptedNavigator`]: replays a pre-recorded decision list, for
//!   regression fixtures.

mod lexical;
mod llm;
mod scripted;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{NodeId, Triple};
use crate::llm::BackendError;
use crate::prompts;

pub use lexical::LexicalNavigator;
pub use llm::{FixedExtractor, LexicalExtractor, LlmExtractor, LlmNavigator};
pub use scripted::{ReplayScript, ScriptedDecision, ScriptedNavigator, TripleKey};

#[derive(Debug, Error)]
pub enum NavigatorError {
    #[error("navigation response could not be parsed ({reason}); raw response: {raw}")]
    Unparseable { reason: String, raw: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("script ended before the search did")]
    ScriptExhausted,
    #[error("scripted selection {0} is not adjacent to the current frontier")]
    ScriptSelectionUnavailable(String),
}

pub type NavigatorResult<T> = Result<T, NavigatorError>;

/// Everything a navigator may look at when deciding a step.
#[derive(Debug, Clone)]
pub struct NavigatorContext {
    pub query: String,
    /// Nodes visited so far, in first-visit order.
    pub visited: Vec<NodeId>,
    /// Evidence triples selected so far, in selection order.
    pub selected: Vec<Triple>,
    /// Current frontier, sorted.
    pub frontier: Vec<NodeId>,
    /// Triples adjacent to the frontier, sorted; list order defines the
    /// numbering shown to model-backed navigators.
    pub adjacent: Vec<Triple>,
    /// Display names for rendering; ids absent here fall back to their
    /// canonical form.
    pub names: BTreeMap<NodeId, String>,
}

impl NavigatorContext {
    pub fn display_name<'a>(&'a self, id: &'a NodeId) -> &'a str {
        self.names.get(id).map(String::as_str).unwrap_or(id.as_str())
    }
}

/// One step's outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavigatorDecision {
    /// True when the selected evidence answers the question.
    pub sufficient: bool,
    /// Chosen triples, in choice order.
    pub selected: Vec<Triple>,
    /// Endpoints of the chosen triples that are not already on the frontier.
    pub candidates: BTreeSet<NodeId>,
}

impl NavigatorDecision {
    /// Builds a decision, deriving `candidates` from the selection: every
    /// endpoint of a selected triple except the nodes already on the
    /// frontier.
    pub fn new(sufficient: bool, selected: Vec<Triple>, frontier: &[NodeId]) -> Self {
        let mut candidates = BTreeSet::new();
        for triple in &selected {
            for endpoint in triple.endpoints() {
                if !frontier.contains(endpoint) {
                    candidates.insert(endpoint.clone());
                }
            }
        }
        NavigatorDecision { sufficient, selected, candidates }
    }
}

pub trait Navigator {
    fn decide(&mut self, ctx: &NavigatorContext) -> NavigatorResult<NavigatorDecision>;
}

/// Turns a question into entity mentions to anchor the search.
pub trait EntityExtractor {
    fn extract(&self, query: &str) -> NavigatorResult<Vec<String>>;
}

fn display<'a>(names: &'a BTreeMap<NodeId, String>, id: &'a NodeId) -> &'a str {
    names.get(id).map(String::as_str).unwrap_or(id.as_str())
}

fn render_nodes(ids: &[NodeId], names: &BTreeMap<NodeId, String>) -> String {
    if ids.is_empty() {
        return "none".to_owned();
    }
    ids.iter().map(|id| display(names, id)).collect::<Vec<_>>().join("\n")
}

fn render_triple(triple: &Triple, names: &BTreeMap<NodeId, String>) -> String {
    let line = format!(
        "{} → {} → {}",
        display(names, &triple.head),
        triple.relation,
        display(names, &triple.tail)
    );
    match &triple.source_text {
        Some(source) => format!("{line} (source: {source})"),
        None => line,
    }
}

fn render_triples(triples: &[Triple], names: &BTreeMap<NodeId, String>) -> String {
    if triples.is_empty() {
        return "none".to_owned();
    }
    triples.iter().map(|t| render_triple(t, names)).collect::<Vec<_>>().join("\n")
}

/// Triples numbered from 1, the way model-facing listings present them.
pub(crate) fn render_numbered_triples(
    triples: &[Triple],
    names: &BTreeMap<NodeId, String>,
) -> String {
    if triples.is_empty() {
        return "none".to_owned();
    }
    triples
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}. {}", i + 1, render_triple(t, names)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The full navigation prompt for one step.
pub fn navigation_prompt(ctx: &NavigatorContext) -> String {
    prompts::fill(prompts::NAVIGATION, &[
        ("query", &ctx.query),
        ("visited_nodes", &render_nodes(&ctx.visited, &ctx.names)),
        ("selected_triplets", &render_triples(&ctx.selected, &ctx.names)),
        ("current_nodes", &render_nodes(&ctx.frontier, &ctx.names)),
        ("adjacent_triplets", &render_numbered_triples(&ctx.adjacent, &ctx.names)),
    ])
}

/// The entity-extraction prompt for a question.
pub fn extraction_prompt(query: &str) -> String {
    prompts::fill(prompts::ENTITY_EXTRACTION, &[("query", query)])
}

/// Splits a comma-separated entity listing: trims items, drops empties,
/// deduplicates while keeping first-occurrence order.
pub fn parse_entity_response(raw: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for item in raw.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let key = NodeId::new(item);
        if seen.insert(key) {
            out.push(item.to_owned());
        }
    }
    out
}

/// A parsed navigation response: the sufficiency verdict plus 0-based
/// indices into the adjacency listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedNavigation {
    pub sufficient: bool,
    pub selection: Vec<usize>,
}

/// Extracts the first balanced JSON object embedded in `raw`, tolerating
/// prose or code fences around it.
pub(crate) fn first_json_object(raw: &str) -> Option<serde_json::Map<String, serde_json::Value>> {
    let bytes = raw.as_bytes();
    for start in 0..bytes.len() {
        if bytes[start] != b'{' {
            continue;
        }
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (offset, &b) in bytes[start..].iter().enumerate() {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        let slice = &raw[start..=start + offset];
                        if let Ok(serde_json::Value::Object(map)) =
                            serde_json::from_str::<serde_json::Value>(slice)
                        {
                            return Some(map);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    None
}

fn unparseable(reason: &str, raw: &str) -> NavigatorError {
    NavigatorError::Unparseable { reason: reason.to_owned(), raw: raw.to_owned() }
}

/// Parses a navigation response leniently.
///
/// The first balanced JSON object found in the text is used, so surrounding
/// prose and code fences are tolerated. `determination` must be
/// "sufficient" or "insufficient" (case-insensitive); anything else is an
/// error. `selection` may be a string of comma-separated numbers, an array,
/// or a bare number; indices are 1-based in the response, and tokens that
/// are non-numeric, out of range for `adjacent_len`, or repeats of an
/// earlier index are dropped. A missing or null `selection` means nothing
/// was chosen.
pub fn parse_navigation_response(
    raw: &str,
    adjacent_len: usize,
) -> NavigatorResult<ParsedNavigation> {
    let object = first_json_object(raw).ok_or_else(|| unparseable("no JSON object found", raw))?;

    let determination = object
        .get("determination")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| unparseable("missing determination field", raw))?;
    let sufficient = if determination.trim().eq_ignore_ascii_case("sufficient") {
        true
    } else if determination.trim().eq_ignore_ascii_case("insufficient") {
        false
    } else {
        return Err(unparseable(
            &format!("determination is neither sufficient nor insufficient: {determination:?}"),
            raw,
        ));
    };

    let mut tokens: Vec<String> = Vec::new();
    match object.get("selection") {
        None | Some(serde_json::Value::Null) => {}
        Some(serde_json::Value::String(s)) => {
            tokens.extend(
                s.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(str::to_owned),
            );
        }
        Some(serde_json::Value::Number(n)) => tokens.push(n.to_string()),
        Some(serde_json::Value::Array(items)) => {
            for item in items {
                match item {
                    serde_json::Value::Number(n) => tokens.push(n.to_string()),
                    serde_json::Value::String(s) => tokens.push(s.trim().to_owned()),
                    _ => {}
                }
            }
        }
        Some(_) => {}
    }

    let mut selection = Vec::new();
    for token in tokens {
        let Ok(number) = token.trim().trim_end_matches('.').parse::<usize>() else {
            continue;
        };
        if number == 0 || number > adjacent_len {
            continue;
        }
        let index = number - 1;
        if !selection.contains(&index) {
            selection.push(index);
        }
    }
    Ok(ParsedNavigation { sufficient, selection })
}
