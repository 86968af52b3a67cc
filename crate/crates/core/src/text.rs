//! Small text utilities shared by the layers: tokenization, whitespace
//! normalization, observation hashing and edit-distance similarity.

use sha2::{Digest, Sha256};

/// The fixed stopword list applied by [`tokenize`].
pub const STOPWORDS: [&str; 30] = [
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "in", "is", "it",
    "its", "of", "on", "or", "that", "the", "this", "to", "was", "were", "will", "with",
    "you", "your", "then", "into",
];

/// Lowercase, split on non-alphanumeric runs, drop tokens shorter than two
/// characters and stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .filter(|t| t.chars().count() >= 2 && !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Collapse every whitespace run into one space and trim the ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Stable 64-bit hash of whitespace-normalized text.
pub fn observation_hash(text: &str) -> u64 {
    let digest = Sha256::digest(collapse_whitespace(text).as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

/// Levenshtein distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max_len`, with two empty strings counting as identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / max_len as f64
}

/// Every segment enclosed in backticks, in order of appearance.
pub fn backtick_segments(text: &str) -> Vec<&str> {
    text.split('`').skip(1).step_by(2).filter(|s| !s.is_empty()).collect()
}

/// Quote a suggested action for a harness message. Actions that contain
/// backticks themselves are wrapped in double backticks.
pub fn quote_hint(action: &str) -> String {
    if action.contains('`') {
        format!("`` {action} ``")
    } else {
        format!("`{action}`")
    }
}

/// First action quoted with [`quote_hint`] in a harness message.
pub fn extract_hint(message: &str) -> Option<&str> {
    if let Some(start) = message.find("`` ") {
        let rest = &message[start + 3..];
        if let Some(end) = rest.find(" ``") {
            return Some(&rest[..end]);
        }
    }
    backtick_segments(message).into_iter().next()
}

/// Short hex digest used for stable identifiers.
pub fn short_digest(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(&hasher.finalize()[..8])
}
