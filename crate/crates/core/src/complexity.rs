//! Lempel-Ziv (1976) complexity of text rendered as a symbol sequence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::collapse_whitespace;

/// How text is turned into symbols before parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rendering {
    /// UTF-8 bytes of the lowercased, whitespace-collapsed text.
    #[default]
    Bytes,
    /// Lowercased whitespace-separated words, one symbol per word.
    LowercasedWords,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub phrase_count: usize,
    pub length: usize,
    pub normalized: f64,
    pub rendering: Rendering,
}

/// Number of phrases in the exhaustive-history LZ76 parsing of `symbols`.
///
/// A phrase keeps growing while it can be copied from earlier in the
/// sequence (the copy may overlap the phrase itself). A trailing phrase that
/// is cut short by the end of input still counts.
pub fn lz76_phrase_count<T: PartialEq>(symbols: &[T]) -> usize {
    let n = symbols.len();
    if n < 2 {
        return n;
    }
    // Kaspar & Schuster scan: `l` is the start of the current phrase, `i`
    // the candidate copy start, `k` the match length at `i`.
    let mut count = 1;
    let mut l = 1;
    let mut i = 0;
    let mut k = 1;
    let mut k_max = 1;
    loop {
        if symbols[i + k - 1] == symbols[l + k - 1] {
            k += 1;
            if l + k > n {
                count += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                count += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    count
}

pub fn render(text: &str, rendering: Rendering) -> Vec<u32> {
    match rendering {
        Rendering::Bytes => collapse_whitespace(text).bytes().map(u32::from).collect(),
        Rendering::LowercasedWords => {
            let mut ids: HashMap<String, u32> = HashMap::new();
            text.split_whitespace()
                .map(|w| {
                    let next = ids.len() as u32;
                    *ids.entry(w.to_lowercase()).or_insert(next)
                })
                .collect()
        }
    }
}

/// Phrase count divided by the symbol count (0 for empty input).
pub fn normalized_lz(text: &str, rendering: Rendering) -> ComplexityResult {
    let symbols = render(text, rendering);
    let phrase_count = lz76_phrase_count(&symbols);
    let length = symbols.len();
    let normalized = if length == 0 {
        0.0
    } else {
        phrase_count as f64 / length as f64
    };
    ComplexityResult {
        phrase_count,
        length,
        normalized,
        rendering,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sequences() {
        assert_eq!(lz76_phrase_count::<u8>(&[]), 0);
        assert_eq!(lz76_phrase_count(b"a"), 1);
        assert_eq!(lz76_phrase_count(b"ab"), 2);
        assert_eq!(lz76_phrase_count(b"aaaaaaaa"), 2);
    }

    #[test]
    fn classic_binary_example() {
        // 0 | 001 | 10 | 100 | 1000 | 101
        assert_eq!(lz76_phrase_count(b"0001101001000101"), 6);
    }

    #[test]
    fn redundancy_lowers_normalized_value() {
        let low = normalized_lz("aaaaaaaa", Rendering::Bytes);
        let high = normalized_lz("qwertyui", Rendering::Bytes);
        assert!(low.normalized < high.normalized);
        assert_eq!(high.normalized, 1.0);
    }

    #[test]
    fn doubling_text_lowers_normalized_value() {
        let text = "The lighthouse keeper counted waves until the sea forgot her name.";
        let once = normalized_lz(text, Rendering::Bytes);
        let twice = normalized_lz(&format!("{text} {text}"), Rendering::Bytes);
        assert!(twice.normalized < once.normalized);
    }

    #[test]
    fn empty_text() {
        let r = normalized_lz("", Rendering::Bytes);
        assert_eq!((r.phrase_count, r.length, r.normalized), (0, 0, 0.0));
    }

    #[test]
    fn word_rendering_interns_case_insensitively() {
        assert_eq!(render("Rain rain GO", Rendering::LowercasedWords), vec![0, 0, 1]);
        let r = normalized_lz("rain rain rain rain", Rendering::LowercasedWords);
        assert_eq!((r.phrase_count, r.length), (2, 4));
    }

    #[test]
    fn byte_rendering_collapses_whitespace() {
        assert_eq!(render("A  b\n", Rendering::Bytes), b"a b".iter().map(|&b| b as u32).collect::<Vec<_>>());
    }
}
