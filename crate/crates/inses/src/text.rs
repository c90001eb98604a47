//! Shared tokenization helpers for lexical scoring.

/// Common English function words ignored by lexical overlap scoring.
pub(crate) const STOPWORDS: [&str; 50] = [
    "a", "about", "after", "against", "all", "an", "and", "are", "as", "at", "be", "but", "by",
    "for", "from", "had", "has", "have", "he", "her", "his", "how", "i", "in", "into", "is", "it",
    "its", "most", "of", "on", "or", "over", "she", "that", "the", "their", "them", "they",
    "this", "to", "under", "was", "were", "what", "when", "where", "which", "who", "with",
];

pub(crate) fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased alphanumeric tokens, split on everything else.
pub(crate) fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// [`tokens`] with stopwords removed.
pub(crate) fn content_tokens(text: &str) -> Vec<String> {
    tokens(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_table_is_sorted_for_binary_search() {
        let mut sorted = STOPWORDS;
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn stopword_table_has_fifty_entries() {
        assert_eq!(STOPWORDS.len(), 50);
    }

    #[test]
    fn tokens_split_on_punctuation_and_lowercase() {
        assert_eq!(tokens("Anti-slavery newspaper!"), vec!["anti", "slavery", "newspaper"]);
        assert_eq!(tokens(""), Vec::<String>::new());
    }

    #[test]
    fn content_tokens_drop_stopwords() {
        assert_eq!(
            content_tokens("Who was the publisher of The North Star?"),
            vec!["publisher", "north", "star"]
        );
    }
}
