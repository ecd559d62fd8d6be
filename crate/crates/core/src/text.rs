//! Tokenizers shared by the metrics, the sparse index and the stub providers.

/// Casefolds and splits on runs of non-alphanumeric characters.
///
/// This is the tokenization used for every text metric and for BM25 terms.
pub fn terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Whitespace tokens, the unit used for chunking and context budgets.
pub fn whitespace_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

pub fn whitespace_len(text: &str) -> usize {
    text.split_whitespace().count()
}

const STOPWORDS: &[&str] = &[
    "a", "about", "all", "an", "and", "any", "are", "as", "at", "be", "been", "by", "can", "did",
    "do", "does", "for", "from", "had", "has", "have", "how", "i", "if", "in", "into", "is", "it",
    "its", "me", "much", "my", "need", "of", "on", "or", "our", "so", "such", "than", "that",
    "the", "their", "them", "there", "these", "they", "this", "those", "to", "us", "was", "we",
    "were", "what", "when", "where", "which", "who", "whom", "why", "will", "with", "would",
    "you", "your",
];

pub fn is_stopword(term: &str) -> bool {
    STOPWORDS.binary_search(&term).is_ok()
}

/// Terms with stopwords removed, first occurrence order, deduplicated.
pub fn content_terms(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in terms(text) {
        if !is_stopword(&t) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// Splits text into sentences on `.`, `!`, `?` followed by whitespace, and on newlines.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut current = String::new();
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            current.push(c);
            if matches!(c, '.' | '!' | '?') && chars.peek().map_or(true, |n| n.is_whitespace()) {
                let s = current.trim();
                if !s.is_empty() {
                    out.push(s.to_string());
                }
                current.clear();
            }
        }
        let s = current.trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
    }
    out
}

/// Lowercased, whitespace-collapsed, trimmed form used by exact match.
pub fn collapse_casefold(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_table_is_sorted() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn terms_split_on_punctuation() {
        assert_eq!(terms("Apple, banana-Cherry!"), vec!["apple", "banana", "cherry"]);
        assert!(terms("  ?! ").is_empty());
    }

    #[test]
    fn sentence_split() {
        let s = sentences("Acme supplies lithium to us. Revenue rose.\nNew line here");
        assert_eq!(s, vec!["Acme supplies lithium to us.", "Revenue rose.", "New line here"]);
        assert_eq!(sentences("Version 1.5 shipped."), vec!["Version 1.5 shipped."]);
    }
}
