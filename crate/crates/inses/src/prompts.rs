//! Prompt templates and the placeholder filler.
//!
//! Templates live as plain text files compiled into the binary. Placeholders
//! are written `{name}` with lowercase names; the filler substitutes only the
//! names it is given, so brace characters inside JSON examples pass through
//! untouched.

pub const ENTITY_EXTRACTION: &str = include_str!("prompts/entity_extraction.txt");
pub const NAVIGATION: &str = include_str!("prompts/navigation.txt");
pub const GRAPH_ANSWER: &str = include_str!("prompts/graph_answer.txt");
pub const RAG_ANSWER: &str = include_str!("prompts/rag_answer.txt");
pub const JUDGE_EQUIVALENCE: &str = include_str!("prompts/judge_equivalence.txt");
pub const JUDGE_SUFFICIENCY: &str = include_str!("prompts/judge_sufficiency.txt");

/// Replaces each `{name}` whose name appears in `values`. Unknown
/// placeholders and stray braces are left as-is. Replacement values are
/// inserted verbatim and never rescanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(close) = template[i + 1..].find(['{', '}']) {
                let end = i + 1 + close;
                if bytes[end] == b'}' {
                    let name = &template[i + 1..end];
                    if let Some((_, value)) = values.iter().find(|(k, _)| *k == name) {
                        out.push_str(value);
                        i = end + 1;
                        continue;
                    }
                }
            }
        }
        let ch = template[i..].chars().next().expect("in-bounds char");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_substitutes_known_placeholders() {
        let got = fill("Question: {query}\nContext: {context}", &[
            ("query", "who?"),
            ("context", "facts"),
        ]);
        assert_eq!(got, "Question: who?\nContext: facts");
    }

    #[test]
    fn fill_leaves_unknown_placeholders_and_literal_braces() {
        let template = "{query} stays {unknown} and {\"json\": 1} survives {{}}";
        let got = fill(template, &[("query", "Q")]);
        assert_eq!(got, "Q stays {unknown} and {\"json\": 1} survives {{}}");
    }

    #[test]
    fn fill_does_not_rescan_substituted_values() {
        let got = fill("{a} {b}", &[("a", "{b}"), ("b", "two")]);
        assert_eq!(got, "{b} two");
    }

    #[test]
    fn fill_handles_repeated_placeholders() {
        let got = fill("{x} and {x}", &[("x", "1")]);
        assert_eq!(got, "1 and 1");
    }

    #[test]
    fn templates_declare_their_placeholders() {
        for (template, names) in [
            (ENTITY_EXTRACTION, vec!["{query}"]),
            (
                NAVIGATION,
                vec![
                    "{query}",
                    "{visited_nodes}",
                    "{selected_triplets}",
                    "{current_nodes}",
                    "{adjacent_triplets}",
                ],
            ),
            (GRAPH_ANSWER, vec!["{query}", "{context}"]),
            (RAG_ANSWER, vec!["{query}", "{context}"]),
            (JUDGE_EQUIVALENCE, vec!["{question}", "{ground_truth}", "{prediction}"]),
            (JUDGE_SUFFICIENCY, vec!["{context}", "{correct_answer}"]),
        ] {
            for name in names {
                assert!(template.contains(name), "missing {name}");
            }
        }
    }
}
