//! Extracting a ten-word list from a free-form chat reply.

use serde::{Deserialize, Serialize};

use divbench_core::dat::RESPONSE_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListFormat {
    Numbered,
    Bulleted,
    CommaSeparated,
    OnePerLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseFailure {
    EmptyReply,
    TooFewItems { found: usize },
    /// Enough items were listed, but too many of them were not single words.
    MultiWordItems { single: usize, multi: usize },
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseFailure::EmptyReply => f.write_str("empty reply"),
            ParseFailure::TooFewItems { found } => write!(f, "too few items ({found})"),
            ParseFailure::MultiWordItems { single, multi } => {
                write!(f, "multi-word items ({single} single, {multi} multi-word)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList {
    pub words: Vec<String>,
    pub format: ListFormat,
}

fn numbered_item(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let digits = t.len() - t.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = &t[digits..];
    let rest = rest.strip_prefix(['.', ')', ':']).or_else(|| rest.strip_prefix(" -"))?;
    Some(rest.trim())
}

fn bulleted_item(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let rest = t.strip_prefix(['-', '*', '•', '–'])?;
    // "**word**" is emphasis, not a bullet
    if t.starts_with("**") && !t.starts_with("** ") {
        return None;
    }
    rest.starts_with(char::is_whitespace).then(|| rest.trim())
}

fn comma_items(line: &str) -> Vec<&str> {
    line.split(',')
        .map(|s| {
            let s = s.trim();
            s.strip_prefix("and ").unwrap_or(s).trim()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// Drops a trailing gloss ("cat - a small animal", "cat: ...", "cat (pet)")
/// and surrounding punctuation or emphasis.
fn clean_item(item: &str) -> String {
    let mut head = item;
    for sep in [" - ", " – ", " — ", ":", " ("] {
        if let Some(i) = head.find(sep) {
            head = &head[..i];
        }
    }
    head.trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

fn is_single_token(item: &str) -> bool {
    !item.is_empty() && !item.contains(char::is_whitespace)
}

fn extract(reply: &str) -> (ListFormat, Vec<String>) {
    let lines: Vec<&str> = reply.lines().filter(|l| !l.trim().is_empty()).collect();
    let numbered: Vec<&str> = lines.iter().filter_map(|l| numbered_item(l)).collect();
    if numbered.len() >= 2 {
        return (ListFormat::Numbered, numbered.into_iter().map(clean_item).collect());
    }
    let bulleted: Vec<&str> = lines.iter().filter_map(|l| bulleted_item(l)).collect();
    if bulleted.len() >= 2 {
        return (ListFormat::Bulleted, bulleted.into_iter().map(clean_item).collect());
    }
    let best_comma = lines.iter().map(|l| comma_items(l)).max_by_key(Vec::len).unwrap_or_default();
    if best_comma.len() >= 3 {
        return (ListFormat::CommaSeparated, best_comma.into_iter().map(clean_item).collect());
    }
    (ListFormat::OnePerLine, lines.into_iter().map(clean_item).collect())
}

/// Parses a reply into exactly ten words.
///
/// Formats are tried in a fixed order: numbered lines, bulleted lines, a
/// comma-separated line, then one item per line. The first format with at
/// least two (three for commas) items is used. Success needs ten
/// single-token items; the first ten are kept in order.
pub fn parse_word_list(reply: &str) -> Result<WordList, ParseFailure> {
    if reply.trim().is_empty() {
        return Err(ParseFailure::EmptyReply);
    }
    let (format, items) = extract(reply);
    let items: Vec<String> = items.into_iter().filter(|i| !i.is_empty()).collect();
    let single: Vec<String> = items.iter().filter(|i| is_single_token(i)).cloned().collect();
    if single.len() >= RESPONSE_LEN {
        return Ok(WordList {
            words: single.into_iter().take(RESPONSE_LEN).collect(),
            format,
        });
    }
    if items.len() >= RESPONSE_LEN {
        return Err(ParseFailure::MultiWordItems {
            single: single.len(),
            multi: items.len() - single.len(),
        });
    }
    Err(ParseFailure::TooFewItems { found: items.len() })
}
