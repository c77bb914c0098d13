//! Divergent Association Task: response validation, the first-seven-valid
//! rule, scoring, prompt adherence and word-frequency tables.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{semantic_distance, EmbedError, StaticEmbeddingStore};

/// Number of words a complete response lists.
pub const RESPONSE_LEN: usize = 10;
/// Number of valid words that enter the score.
pub const SCORED_WORDS: usize = 7;
/// Unordered pairs among the scored words.
pub const SCORED_PAIRS: usize = SCORED_WORDS * (SCORED_WORDS - 1) / 2;

pub const HUMAN_SOURCE: &str = "human";

#[derive(Debug, thiserror::Error)]
pub enum DatError {
    #[error("response is not scoreable: {valid} valid words, need {SCORED_WORDS}")]
    NotScoreable { valid: usize },
    #[error("selected word {0:?} is missing from the embedding table")]
    MissingWord(String),
    #[error("no responses given")]
    NoResponses,
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Prompt condition a response was collected under.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Condition {
    Dat,
    Control,
    Strategy(String),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Dat => f.write_str("dat"),
            Condition::Control => f.write_str("control"),
            Condition::Strategy(name) => write!(f, "strategy:{name}"),
        }
    }
}

impl FromStr for Condition {
    type Err = DatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dat" => Ok(Condition::Dat),
            "control" => Ok(Condition::Control),
            _ => match s.strip_prefix("strategy:") {
                Some(name) if !name.is_empty() => Ok(Condition::Strategy(name.to_string())),
                _ => Err(DatError::UnknownCondition(s.to_string())),
            },
        }
    }
}

impl TryFrom<String> for Condition {
    type Error = DatError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Condition> for String {
    fn from(c: Condition) -> Self {
        c.to_string()
    }
}

/// An ordered list of words as produced by a participant or a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatResponse {
    pub id: String,
    pub words: Vec<String>,
    /// `"human"` or a model id.
    pub source: String,
    pub condition: Condition,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordValidity {
    Valid,
    /// Misspelled or absent from the embedding vocabulary.
    OutOfVocabulary,
    /// Empty or multi-token entry.
    RuleViolation,
    /// Resolves to a word already accepted earlier in the list.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCheck {
    pub raw: String,
    pub normalized: String,
    /// Vocabulary key the word resolved to, if any.
    pub resolved: Option<String>,
    pub validity: WordValidity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedDatResponse {
    pub id: String,
    pub source: String,
    pub condition: Condition,
    pub temperature: Option<f64>,
    pub checks: Vec<WordCheck>,
    /// First seven valid vocabulary keys in input order (fewer when not scoreable).
    pub selected: Vec<String>,
    pub is_scoreable: bool,
    /// The response listed fewer than ten words.
    pub incomplete: bool,
}

impl ValidatedDatResponse {
    pub fn valid_count(&self) -> usize {
        self.checks.iter().filter(|c| c.validity == WordValidity::Valid).count()
    }

    /// Input positions (0-based) of the selected words.
    pub fn selected_positions(&self) -> Vec<usize> {
        self.checks
            .iter()
            .enumerate()
            .filter(|(_, c)| c.validity == WordValidity::Valid)
            .map(|(i, _)| i)
            .take(SCORED_WORDS)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatScore {
    pub value: f64,
    pub n_pairs: usize,
    pub table_fingerprint: String,
}

/// Trims, lowercases and strips surrounding punctuation.
pub fn normalize_word(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

fn resolve(word: &str, store: &StaticEmbeddingStore) -> Option<String> {
    if store.contains(word) {
        return Some(word.to_string());
    }
    ["s", "es"]
        .iter()
        .filter_map(|suffix| word.strip_suffix(suffix))
        .find(|stem| !stem.is_empty() && store.contains(stem))
        .map(str::to_string)
}

pub fn validate_response(resp: &DatResponse, store: &StaticEmbeddingStore) -> ValidatedDatResponse {
    let mut accepted: HashSet<String> = HashSet::new();
    let mut selected = Vec::with_capacity(SCORED_WORDS);
    let mut checks = Vec::with_capacity(resp.words.len());
    for raw in &resp.words {
        let normalized = normalize_word(raw);
        let (resolved, validity) = if normalized.is_empty() || normalized.contains(char::is_whitespace) {
            (None, WordValidity::RuleViolation)
        } else {
            match resolve(&normalized, store) {
                None => (None, WordValidity::OutOfVocabulary),
                Some(key) if accepted.contains(&key) => (Some(key), WordValidity::Duplicate),
                Some(key) => {
                    accepted.insert(key.clone());
                    if selected.len() < SCORED_WORDS {
                        selected.push(key.clone());
                    }
                    (Some(key), WordValidity::Valid)
                }
            }
        };
        checks.push(WordCheck {
            raw: raw.clone(),
            normalized,
            resolved,
            validity,
        });
    }
    ValidatedDatResponse {
        id: resp.id.clone(),
        source: resp.source.clone(),
        condition: resp.condition.clone(),
        temperature: resp.temperature,
        is_scoreable: selected.len() == SCORED_WORDS,
        selected,
        checks,
        incomplete: resp.words.len() < RESPONSE_LEN,
    }
}

/// Mean semantic distance over the 21 unordered pairs of the selected words.
pub fn dat_score(v: &ValidatedDatResponse, store: &StaticEmbeddingStore) -> Result<DatScore, DatError> {
    if !v.is_scoreable || v.selected.len() != SCORED_WORDS {
        return Err(DatError::NotScoreable { valid: v.selected.len() });
    }
    let vectors = v
        .selected
        .iter()
        .map(|w| store.get(w).ok_or_else(|| DatError::MissingWord(w.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            total += semantic_distance(a, b)?;
            pairs += 1;
        }
    }
    debug_assert_eq!(pairs, SCORED_PAIRS);
    Ok(DatScore {
        value: total / pairs as f64,
        n_pairs: pairs,
        table_fingerprint: store.fingerprint().to_string(),
    })
}

/// Validates and scores every response in parallel, preserving input order.
pub fn score_responses(
    responses: &[DatResponse],
    store: &StaticEmbeddingStore,
) -> Vec<(ValidatedDatResponse, Option<DatScore>)> {
    responses
        .par_iter()
        .map(|r| {
            let v = validate_response(r, store);
            let score = if v.is_scoreable {
                Some(dat_score(&v, store).expect("validated against the same store"))
            } else {
                None
            };
            (v, score)
        })
        .collect()
}

/// Fraction of responses that are scoreable.
pub fn adherence_ratio(responses: &[ValidatedDatResponse]) -> Result<f64, DatError> {
    if responses.is_empty() {
        return Err(DatError::NoResponses);
    }
    let ok = responses.iter().filter(|r| r.is_scoreable).count();
    Ok(ok as f64 / responses.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFrequency {
    pub word: String,
    /// Number of response sets containing the word.
    pub sets: usize,
    pub proportion: f64,
}

/// Proportion of response sets that contain each normalized word. A word is
/// counted once per set. Sorted by descending proportion, then word.
pub fn word_frequency(responses: &[DatResponse]) -> Result<Vec<WordFrequency>, DatError> {
    if responses.is_empty() {
        return Err(DatError::NoResponses);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in responses {
        let set: BTreeSet<String> = r
            .words
            .iter()
            .map(|w| normalize_word(w))
            .filter(|w| !w.is_empty())
            .collect();
        for w in set {
            *counts.entry(w).or_default() += 1;
        }
    }
    let n = responses.len() as f64;
    let mut table: Vec<WordFrequency> = counts
        .into_iter()
        .map(|(word, sets)| WordFrequency {
            word,
            sets,
            proportion: sets as f64 / n,
        })
        .collect();
    table.sort_by(|a, b| b.sets.cmp(&a.sets).then_with(|| a.word.cmp(&b.word)));
    Ok(table)
}
