//! Model-backed navigation and entity extraction.

use std::sync::Arc;

use super::{
    extraction_prompt, navigation_prompt, parse_entity_response, parse_navigation_response,
    EntityExtractor, Navigator, NavigatorContext, NavigatorDecision, NavigatorResult,
};
use crate::llm::ChatBackend;
use crate::text;

const RETRY_NUDGE: &str = "Respond with only the JSON object.";

/// Asks a chat backend to pick triples for each step. The response is parsed
/// leniently; if it still cannot be parsed, the prompt is retried once with
/// an extra instruction before the error propagates.
pub struct LlmNavigator {
    backend: Arc<dyn ChatBackend>,
}

impl LlmNavigator {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        LlmNavigator { backend }
    }
}

impl Navigator for LlmNavigator {
    fn decide(&mut self, ctx: &NavigatorContext) -> NavigatorResult<NavigatorDecision> {
        let prompt = navigation_prompt(ctx);
        let response = self.backend.complete(&prompt)?;
        let parsed = match parse_navigation_response(&response, ctx.adjacent.len()) {
            Ok(parsed) => parsed,
            Err(first_error) => {
                log::warn!("navigation response unparseable, retrying once: {first_error}");
                let retry_prompt = format!("{prompt}\n\n{RETRY_NUDGE}");
                let retry = self.backend.complete(&retry_prompt)?;
                parse_navigation_response(&retry, ctx.adjacent.len())?
            }
        };
        let selected = parsed.selection.iter().map(|&i| ctx.adjacent[i].clone()).collect();
        Ok(NavigatorDecision::new(parsed.sufficient, selected, &ctx.frontier))
    }
}

/// Extracts entity mentions from a question with a chat backend. The
/// comma-separated reply is split as-is; there is no retry, since any text
/// parses.
pub struct LlmExtractor {
    backend: Arc<dyn ChatBackend>,
}

impl LlmExtractor {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        LlmExtractor { backend }
    }
}

impl EntityExtractor for LlmExtractor {
    fn extract(&self, query: &str) -> NavigatorResult<Vec<String>> {
        let response = self.backend.complete(&extraction_prompt(query))?;
        Ok(parse_entity_response(&response))
    }
}

/// Returns a fixed mention list regardless of the question.
#[derive(Debug, Clone)]
pub struct FixedExtractor(pub Vec<String>);

impl EntityExtractor for FixedExtractor {
    fn extract(&self, _query: &str) -> NavigatorResult<Vec<String>> {
        Ok(self.0.clone())
    }
}

/// Uses the question's own content words as mentions. A dependency-free
/// fallback for offline runs.
#[derive(Debug, Clone, Default)]
pub struct LexicalExtractor;

impl EntityExtractor for LexicalExtractor {
    fn extract(&self, query: &str) -> NavigatorResult<Vec<String>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for token in text::content_tokens(query) {
            if seen.insert(token.clone()) {
                out.push(token);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeId, Triple};
    use crate::llm::CannedBackend;
    use crate::navigator::NavigatorError;
    use std::collections::BTreeMap;

    fn ctx() -> NavigatorContext {
        NavigatorContext {
            query: "who published the north star?".into(),
            visited: vec![NodeId::new("a")],
            selected: vec![],
            frontier: vec![NodeId::new("a")],
            adjacent: vec![
                Triple {
                    head: NodeId::new("a"),
                    relation: "r1".into(),
                    tail: NodeId::new("b"),
                    source_text: None,
                },
                Triple {
                    head: NodeId::new("a"),
                    relation: "r2".into(),
                    tail: NodeId::new("c"),
                    source_text: None,
                },
            ],
            names: BTreeMap::new(),
        }
    }

    #[test]
    fn parses_a_clean_decision() {
        let backend = Arc::new(CannedBackend::new([
            r#"{"determination": "insufficient", "selection": "2"}"#,
        ]));
        let mut nav = LlmNavigator::new(backend.clone());
        let decision = nav.decide(&ctx()).unwrap();
        assert!(!decision.sufficient);
        assert_eq!(decision.selected.len(), 1);
        assert_eq!(decision.selected[0].relation, "r2");
        assert_eq!(backend.prompts().len(), 1);
        assert!(backend.prompts()[0].contains("1. a → r1 → b"));
    }

    #[test]
    fn retries_once_with_a_nudge_then_succeeds() {
        let backend = Arc::new(CannedBackend::new([
            "I think we should look at the first triple.",
            r#"{"determination": "sufficient", "selection": "1"}"#,
        ]));
        let mut nav = LlmNavigator::new(backend.clone());
        let decision = nav.decide(&ctx()).unwrap();
        assert!(decision.sufficient);
        let prompts = backend.prompts();
        assert_eq!(prompts.len(), 2);
        assert!(!prompts[0].contains(RETRY_NUDGE));
        assert!(prompts[1].ends_with(RETRY_NUDGE));
    }

    #[test]
    fn fails_after_two_unparseable_responses() {
        let backend = Arc::new(CannedBackend::new(["nonsense", "more nonsense"]));
        let mut nav = LlmNavigator::new(backend);
        let err = nav.decide(&ctx()).unwrap_err();
        match err {
            NavigatorError::Unparseable { raw, .. } => assert_eq!(raw, "more nonsense"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn extractor_splits_the_reply() {
        let backend = Arc::new(CannedBackend::new(["north star, publisher, north star"]));
        let extractor = LlmExtractor::new(backend.clone());
        let got = extractor.extract("q").unwrap();
        assert_eq!(got, vec!["north star", "publisher"]);
        assert!(backend.prompts()[0].starts_with("Your task is to extract"));
    }

    #[test]
    fn lexical_extractor_uses_content_words() {
        let got = LexicalExtractor.extract("Who published the North Star?").unwrap();
        assert_eq!(got, vec!["published", "north", "star"]);
    }
}
