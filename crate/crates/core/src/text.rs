//! Tokenization helpers and the bundled stop-word list.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::fingerprint::sha256_hex;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en_v1.txt");

/// A set of lowercase stop words together with the hash of its source text.
#[derive(Debug, Clone)]
pub struct StopWords {
    words: HashSet<String>,
    fingerprint: String,
}

impl StopWords {
    /// The versioned English list shipped with the crate.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    /// One word per line; blank lines and lines starting with `#` are ignored.
    pub fn parse(source: &str) -> Self {
        let words = source
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self {
            words,
            fingerprint: sha256_hex(source),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list: Vec<String> = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        list.sort();
        list.dedup();
        let source = list.join("\n");
        Self::parse(&source)
    }

    pub fn empty() -> Self {
        Self::parse("")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

/// Strips leading and trailing characters that are neither alphanumeric nor
/// apostrophes inside the word. Internal hyphens and apostrophes survive.
pub fn strip_surrounding_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Whitespace-split, punctuation-stripped, lowercased tokens. Tokens that are
/// pure punctuation are dropped.
pub fn content_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(strip_surrounding_punct)
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercases and collapses runs of whitespace into single spaces, trimming
/// both ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
