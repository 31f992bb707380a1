use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "being", "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have",
    "he", "her", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "may",
    "might", "more", "most", "no", "not", "of", "on", "only", "or", "other", "our", "out", "over",
    "same", "she", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "up", "very", "was", "we",
    "were", "what", "when", "where", "which", "while", "who", "whose", "why", "will", "with",
    "would", "yet", "you", "your",
];

/// Case-folded alphanumeric tokens with stopwords removed.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Share of `candidate` tokens that also occur in any of the `reference` texts.
///
/// Returns 0.0 when the candidate has no content tokens.
pub fn overlap_ratio(candidate: &str, reference: &[&str]) -> f64 {
    let cand = tokens(candidate);
    if cand.is_empty() {
        return 0.0;
    }
    let refs: BTreeSet<String> = reference.iter().flat_map(|r| tokens(r)).collect();
    let shared = cand.intersection(&refs).count();
    shared as f64 / cand.len() as f64
}
