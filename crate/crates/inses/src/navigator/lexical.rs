//! Deterministic navigator scored by token overlap. Useful offline and as a
//! reference point: no model, no network, stable output for a fixed graph.

use std::collections::BTreeSet;

use super::{Navigator, NavigatorContext, NavigatorDecision, NavigatorResult};
use crate::graph::Triple;
use crate::text;

/// Scores each adjacent triple by how many distinct content words it shares
/// with the question, selects the best-scoring ones, and reports sufficiency
/// once the selected evidence covers every content word of the question.
#[derive(Debug, Clone)]
pub struct LexicalNavigator {
    select_top: usize,
}

impl LexicalNavigator {
    pub fn new(select_top: usize) -> Self {
        LexicalNavigator { select_top }
    }
}

impl Default for LexicalNavigator {
    fn default() -> Self {
        LexicalNavigator::new(8)
    }
}

fn triple_tokens(triple: &Triple, ctx: &NavigatorContext) -> BTreeSet<String> {
    let mut tokens = BTreeSet::new();
    tokens.extend(text::content_tokens(ctx.display_name(&triple.head)));
    tokens.extend(text::content_tokens(&triple.relation));
    tokens.extend(text::content_tokens(ctx.display_name(&triple.tail)));
    if let Some(source) = &triple.source_text {
        tokens.extend(text::content_tokens(source));
    }
    tokens
}

impl Navigator for LexicalNavigator {
    fn decide(&mut self, ctx: &NavigatorContext) -> NavigatorResult<NavigatorDecision> {
        let query_tokens: BTreeSet<String> =
            text::content_tokens(&ctx.query).into_iter().collect();

        let mut scored: Vec<(usize, usize)> = ctx
            .adjacent
            .iter()
            .enumerate()
            .map(|(i, t)| (i, triple_tokens(t, ctx).intersection(&query_tokens).count()))
            .filter(|&(_, score)| score > 0)
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(self.select_top);
        scored.sort_by_key(|&(i, _)| i);

        let selected: Vec<Triple> = scored.iter().map(|&(i, _)| ctx.adjacent[i].clone()).collect();

        let mut covered: BTreeSet<String> = BTreeSet::new();
        for triple in ctx.selected.iter().chain(&selected) {
            covered.extend(triple_tokens(triple, ctx));
        }
        let sufficient =
            !query_tokens.is_empty() && query_tokens.iter().all(|t| covered.contains(t));

        Ok(NavigatorDecision::new(sufficient, selected, &ctx.frontier))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use std::collections::BTreeMap;

    fn triple(h: &str, r: &str, t: &str, source: Option<&str>) -> Triple {
        Triple {
            head: NodeId::new(h),
            relation: r.to_owned(),
            tail: NodeId::new(t),
            source_text: source.map(str::to_owned),
        }
    }

    fn context(query: &str, adjacent: Vec<Triple>) -> NavigatorContext {
        NavigatorContext {
            query: query.to_owned(),
            visited: vec![],
            selected: vec![],
            frontier: vec![NodeId::new("anchor")],
            adjacent,
            names: BTreeMap::new(),
        }
    }

    #[test]
    fn selects_overlapping_triples_and_skips_zero_scores() {
        let mut nav = LexicalNavigator::default();
        let ctx = context(
            "Which newspaper did Douglass publish?",
            vec![
                triple("the north star", "published by", "frederick douglass", None),
                triple("paris", "capital of", "france", None),
            ],
        );
        let decision = nav.decide(&ctx).unwrap();
        assert_eq!(decision.selected.len(), 1);
        assert_eq!(decision.selected[0].head.as_str(), "the north star");
    }

    #[test]
    fn caps_selection_at_the_configured_budget() {
        let mut nav = LexicalNavigator::new(2);
        let adjacent: Vec<Triple> = (0..5)
            .map(|i| triple(&format!("star system {i}"), "contains", "star", None))
            .collect();
        let ctx = context("star", adjacent);
        let decision = nav.decide(&ctx).unwrap();
        assert_eq!(decision.selected.len(), 2);
    }

    #[test]
    fn prefers_higher_overlap_then_earlier_listing() {
        let mut nav = LexicalNavigator::new(1);
        let ctx = context(
            "frederick douglass newspaper",
            vec![
                triple("a newspaper", "mentions", "b", None),
                triple("frederick douglass", "published", "newspaper", None),
            ],
        );
        let decision = nav.decide(&ctx).unwrap();
        assert_eq!(decision.selected[0].head.as_str(), "frederick douglass");
    }

    #[test]
    fn source_text_counts_toward_overlap() {
        let mut nav = LexicalNavigator::default();
        let ctx = context(
            "Who married Helen?",
            vec![triple("x", "r", "y", Some("Helen married him in 1884."))],
        );
        let decision = nav.decide(&ctx).unwrap();
        assert_eq!(decision.selected.len(), 1);
    }

    #[test]
    fn sufficiency_requires_full_query_coverage() {
        let mut nav = LexicalNavigator::default();
        let partial = context(
            "douglass newspaper spouse",
            vec![triple("the north star", "published by", "frederick douglass", None)],
        );
        let decision = nav.decide(&partial).unwrap();
        assert!(!decision.sufficient);

        let full = context(
            "douglass newspaper",
            vec![triple("the north star", "is a newspaper published by", "douglass", None)],
        );
        let decision = nav.decide(&full).unwrap();
        assert!(decision.sufficient);
    }

    #[test]
    fn stopword_only_query_is_never_sufficient() {
        let mut nav = LexicalNavigator::default();
        let ctx = context("the of and", vec![triple("a", "r", "b", None)]);
        let decision = nav.decide(&ctx).unwrap();
        assert!(!decision.sufficient);
        assert!(decision.selected.is_empty());
    }

    #[test]
    fn earlier_evidence_counts_toward_coverage() {
        let mut nav = LexicalNavigator::default();
        let mut ctx = context(
            "douglass newspaper",
            vec![triple("the north star", "is", "a newspaper", None)],
        );
        ctx.selected = vec![triple("frederick douglass", "published", "it", None)];
        let decision = nav.decide(&ctx).unwrap();
        assert!(decision.sufficient);
    }
}
