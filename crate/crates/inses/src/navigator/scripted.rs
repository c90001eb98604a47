//! Replay navigator: follows a pre-recorded list of decisions. Used for
//! regression fixtures where the exact walk matters more than how it was
//! originally chosen.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Navigator, NavigatorContext, NavigatorDecision, NavigatorError, NavigatorResult};
use crate::graph::{NodeId, Triple};

/// Identifies a triple by endpoints and relation. Endpoint names are
/// canonicalized before matching; the relation must match exactly. The
/// source text is deliberately not part of the key, so a script stays valid
/// across re-extractions of the same facts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleKey {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl TripleKey {
    pub fn matches(&self, triple: &Triple) -> bool {
        NodeId::new(&self.head) == triple.head
            && self.relation == triple.relation
            && NodeId::new(&self.tail) == triple.tail
    }
}

impl std::fmt::Display for TripleKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} → {} → {}", self.head, self.relation, self.tail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedDecision {
    pub sufficient: bool,
    pub select: Vec<TripleKey>,
}

/// A full recorded run: the entity mentions that anchored it and the
/// decision taken at each step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub entities: Vec<String>,
    pub decisions: Vec<ScriptedDecision>,
}

impl ReplayScript {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn from_path(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ReplayScript::from_json(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Plays back one [`ReplayScript`]. Each `decide` call consumes the next
/// decision; running past the end or asking for a triple that is not in the
/// current adjacency listing is an error, since it means the graph and the
/// script have drifted apart.
#[derive(Debug, Clone)]
pub struct ScriptedNavigator {
    script: ReplayScript,
    cursor: usize,
}

impl ScriptedNavigator {
    pub fn new(script: ReplayScript) -> Self {
        ScriptedNavigator { script, cursor: 0 }
    }

    pub fn entities(&self) -> &[String] {
        &self.script.entities
    }
}

impl Navigator for ScriptedNavigator {
    fn decide(&mut self, ctx: &NavigatorContext) -> NavigatorResult<NavigatorDecision> {
        let decision =
            self.script.decisions.get(self.cursor).ok_or(NavigatorError::ScriptExhausted)?;
        self.cursor += 1;

        let mut selected = Vec::new();
        for key in &decision.select {
            let triple = ctx
                .adjacent
                .iter()
                .find(|t| key.matches(t))
                .ok_or_else(|| NavigatorError::ScriptSelectionUnavailable(key.to_string()))?;
            selected.push(triple.clone());
        }
        Ok(NavigatorDecision::new(decision.sufficient, selected, &ctx.frontier))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn triple(h: &str, r: &str, t: &str) -> Triple {
        Triple {
            head: NodeId::new(h),
            relation: r.to_owned(),
            tail: NodeId::new(t),
            source_text: Some("src".to_owned()),
        }
    }

    fn ctx(adjacent: Vec<Triple>) -> NavigatorContext {
        NavigatorContext {
            query: "q".into(),
            visited: vec![],
            selected: vec![],
            frontier: vec![],
            adjacent,
            names: BTreeMap::new(),
        }
    }

    fn key(h: &str, r: &str, t: &str) -> TripleKey {
        TripleKey { head: h.to_owned(), relation: r.to_owned(), tail: t.to_owned() }
    }

    #[test]
    fn replays_decisions_in_order() {
        let script = ReplayScript {
            entities: vec!["a".into()],
            decisions: vec![
                ScriptedDecision { sufficient: false, select: vec![key("A", "r", "B")] },
                ScriptedDecision { sufficient: true, select: vec![key("b", "s", "c")] },
            ],
        };
        let mut nav = ScriptedNavigator::new(script);

        let first = nav.decide(&ctx(vec![triple("a", "r", "b")])).unwrap();
        assert!(!first.sufficient);
        assert_eq!(first.selected, vec![triple("a", "r", "b")]);

        let second = nav.decide(&ctx(vec![triple("b", "s", "c")])).unwrap();
        assert!(second.sufficient);
    }

    #[test]
    fn key_matching_canonicalizes_endpoints_but_not_relation() {
        let t = triple("The  North Star", "Published by", "frederick douglass");
        assert!(key("the north star", "Published by", "Frederick Douglass").matches(&t));
        assert!(!key("the north star", "published by", "Frederick Douglass").matches(&t));
    }

    #[test]
    fn errors_when_script_is_exhausted() {
        let script = ReplayScript { entities: vec![], decisions: vec![] };
        let mut nav = ScriptedNavigator::new(script);
        let err = nav.decide(&ctx(vec![])).unwrap_err();
        assert!(matches!(err, NavigatorError::ScriptExhausted));
    }

    #[test]
    fn errors_when_selection_is_not_adjacent() {
        let script = ReplayScript {
            entities: vec![],
            decisions: vec![ScriptedDecision {
                sufficient: false,
                select: vec![key("x", "r", "y")],
            }],
        };
        let mut nav = ScriptedNavigator::new(script);
        let err = nav.decide(&ctx(vec![triple("a", "r", "b")])).unwrap_err();
        assert!(matches!(err, NavigatorError::ScriptSelectionUnavailable(_)));
    }

    #[test]
    fn script_round_trips_through_json() {
        let script = ReplayScript {
            entities: vec!["publisher".into()],
            decisions: vec![ScriptedDecision {
                sufficient: true,
                select: vec![key("a", "r", "b")],
            }],
        };
        let json = serde_json::to_string(&script).unwrap();
        assert_eq!(ReplayScript::from_json(&json).unwrap(), script);
    }
}
