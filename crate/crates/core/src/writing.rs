//! Structural checks for creative-writing corpora: haiku syllable patterns,
//! word limits, word-count distribution matching and theme similarity.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::embed::{cosine_similarity, mean_vector, StaticEmbeddingStore};
use crate::stats::{mean, sample_sd};
use crate::text::{content_tokens, strip_surrounding_punct, StopWords};

const SYLLABLE_TABLE: &str = include_str!("../data/syllables.txt");

#[derive(Debug, thiserror::Error)]
pub enum WritingError {
    #[error("{0:?} contains no letters")]
    NoLetters(String),
    #[error("unknown writing task {0:?}")]
    UnknownTask(String),
    #[error("need at least 2 non-empty groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("tolerances must be positive and the retention floor within (0, 1]")]
    BadOptions,
    #[error("theme word {0:?} is not in the embedding table")]
    ThemeOutOfVocabulary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Haiku,
    Synopsis,
    FlashFiction,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Haiku => "haiku",
            TaskKind::Synopsis => "synopsis",
            TaskKind::FlashFiction => "flash_fiction",
        })
    }
}

impl FromStr for TaskKind {
    type Err = WritingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "haiku" => Ok(TaskKind::Haiku),
            "synopsis" => Ok(TaskKind::Synopsis),
            "flash_fiction" => Ok(TaskKind::FlashFiction),
            other => Err(WritingError::UnknownTask(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WritingTaskSpec {
    pub kind: TaskKind,
    pub word_limit: Option<usize>,
    pub syllable_pattern: Option<Vec<usize>>,
}

impl WritingTaskSpec {
    pub fn for_kind(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Haiku => Self {
                kind,
                word_limit: None,
                syllable_pattern: Some(vec![5, 7, 5]),
            },
            TaskKind::Synopsis => Self {
                kind,
                word_limit: Some(50),
                syllable_pattern: None,
            },
            TaskKind::FlashFiction => Self {
                kind,
                word_limit: Some(200),
                syllable_pattern: None,
            },
        }
    }
}

/// One creative-writing text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSample {
    pub id: String,
    pub source: String,
    pub task: TaskKind,
    pub text: String,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl TextSample {
    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn syllable_table() -> &'static HashMap<&'static str, usize> {
    static TABLE: OnceLock<HashMap<&'static str, usize>> = OnceLock::new();
    TABLE.get_or_init(|| {
        SYLLABLE_TABLE
            .lines()
            .filter(|l| !l.starts_with('#'))
            .filter_map(|l| {
                let (w, n) = l.split_once(' ')?;
                Some((w, n.parse().ok()?))
            })
            .collect()
    })
}

/// Syllables from the bundled pronunciation table, if the word is listed.
pub fn dictionary_syllables(word: &str) -> Option<usize> {
    syllable_table().get(word).copied()
}

/// Vowel-cluster estimate with a silent-final-e adjustment; at least 1.
pub fn heuristic_syllables(word: &str) -> usize {
    let letters: Vec<char> = word.chars().filter(|c| c.is_ascii_alphabetic()).collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut clusters = 0usize;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            clusters += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == 'e' {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            clusters = clusters.saturating_sub(1);
        }
    }
    clusters.max(1)
}

/// Syllable count of a single word: dictionary first, heuristic fallback.
/// Hyphenated compounds absent from the table are counted per part.
pub fn count_syllables(word: &str) -> Result<usize, WritingError> {
    let w = strip_surrounding_punct(word).to_lowercase();
    if !w.chars().any(char::is_alphabetic) {
        return Err(WritingError::NoLetters(word.to_string()));
    }
    let w = w.replace('\u{2019}', "'");
    if let Some(n) = dictionary_syllables(&w) {
        return Ok(n);
    }
    if w.contains('-') {
        return w
            .split('-')
            .filter(|p| p.chars().any(char::is_alphabetic))
            .map(count_syllables)
            .sum();
    }
    if let Some(n) = w.strip_suffix("'s").and_then(dictionary_syllables) {
        return Ok(n);
    }
    Ok(heuristic_syllables(&w))
}

/// Syllables of a line; tokens without letters are ignored.
pub fn line_syllables(line: &str) -> usize {
    line.split_whitespace().filter_map(|w| count_syllables(w).ok()).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictDetails {
    LineSyllables(Vec<usize>),
    WordCount(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralVerdict {
    pub passes: bool,
    pub details: VerdictDetails,
    pub reason: String,
}

impl fmt::Display for VerdictDetails {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictDetails::LineSyllables(counts) => {
                let parts: Vec<String> = counts.iter().map(usize::to_string).collect();
                write!(f, "syllables={}", parts.join("-"))
            }
            VerdictDetails::WordCount(n) => write!(f, "words={n}"),
        }
    }
}

pub fn validate_structure(text: &str, spec: &WritingTaskSpec) -> StructuralVerdict {
    if let Some(pattern) = &spec.syllable_pattern {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let counts: Vec<usize> = lines.iter().map(|l| line_syllables(l)).collect();
        let (passes, reason) = if lines.len() != pattern.len() {
            (false, format!("line count: expected {}, found {}", pattern.len(), lines.len()))
        } else if &counts != pattern {
            (false, "syllable pattern".to_string())
        } else {
            (true, "ok".to_string())
        };
        return StructuralVerdict {
            passes,
            details: VerdictDetails::LineSyllables(counts),
            reason,
        };
    }
    let n = word_count(text);
    let (passes, reason) = match spec.word_limit {
        Some(limit) if n > limit => (false, format!("word count {n} exceeds limit {limit}")),
        _ => (true, "ok".to_string()),
    };
    StructuralVerdict {
        passes,
        details: VerdictDetails::WordCount(n),
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub mean_tolerance: f64,
    pub sd_tolerance: f64,
    /// Minimum fraction of each group's samples that must be kept.
    pub retention_floor: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            mean_tolerance: 1.0,
            sd_tolerance: 1.0,
            retention_floor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub retained: BTreeMap<String, Vec<TextSample>>,
    /// Ids removed, in removal order.
    pub dropped: Vec<String>,
    /// Both tolerances were met.
    pub converged: bool,
    pub max_mean_diff: f64,
    pub max_sd_diff: f64,
}

fn group_moments(samples: &[TextSample]) -> (f64, f64) {
    let counts: Vec<f64> = samples.iter().map(|s| s.word_count() as f64).collect();
    let sd = if counts.len() > 1 { sample_sd(&counts) } else { 0.0 };
    (mean(&counts), sd)
}

fn discrepancy(moments: &[(f64, f64)]) -> (f64, f64) {
    let mut dm = 0.0f64;
    let mut ds = 0.0f64;
    for (i, a) in moments.iter().enumerate() {
        for b in &moments[i + 1..] {
            dm = dm.max((a.0 - b.0).abs());
            ds = ds.max((a.1 - b.1).abs());
        }
    }
    (dm, ds)
}

/// Greedily trims samples until word-count means and standard deviations
/// agree across groups within tolerance, or the retention floor blocks
/// further removals.
///
/// Each step looks at the group(s) whose mean is farthest from the pooled
/// mean and removes the single sample that most lowers the worst pairwise
/// discrepancy, measured in tolerance units as
/// `max(|dmean| / mean_tol, |dsd| / sd_tol)`. Ties go to the lowest id.
pub fn match_word_count_distributions(
    groups: &BTreeMap<String, Vec<TextSample>>,
    opts: &MatchOptions,
) -> Result<MatchOutcome, WritingError> {
    if groups.len() < 2 {
        return Err(WritingError::TooFewGroups(groups.len()));
    }
    if let Some((name, _)) = groups.iter().find(|(_, s)| s.is_empty()) {
        return Err(WritingError::EmptyGroup(name.clone()));
    }
    if !(opts.mean_tolerance > 0.0 && opts.sd_tolerance > 0.0)
        || !(opts.retention_floor > 0.0 && opts.retention_floor <= 1.0)
    {
        return Err(WritingError::BadOptions);
    }
    let names: Vec<String> = groups.keys().cloned().collect();
    let floors: Vec<usize> = groups
        .values()
        .map(|s| ((s.len() as f64 * opts.retention_floor).ceil() as usize).max(1))
        .collect();
    let mut retained: Vec<Vec<TextSample>> = groups.values().cloned().collect();
    let mut dropped = Vec::new();
    let objective = |d: (f64, f64)| (d.0 / opts.mean_tolerance).max(d.1 / opts.sd_tolerance);

    loop {
        let moments: Vec<(f64, f64)> = retained.iter().map(|s| group_moments(s)).collect();
        let current = discrepancy(&moments);
        if current.0 <= opts.mean_tolerance && current.1 <= opts.sd_tolerance {
            return Ok(finish(names, retained, dropped, true, current));
        }
        let all_counts: Vec<f64> = retained.iter().flatten().map(|s| s.word_count() as f64).collect();
        let pooled = mean(&all_counts);
        let far = moments.iter().map(|m| (m.0 - pooled).abs()).fold(0.0f64, f64::max);
        let candidates: Vec<usize> = (0..retained.len())
            .filter(|&g| (moments[g].0 - pooled).abs() >= far - 1e-12 * far.max(1.0))
            .filter(|&g| retained[g].len() > floors[g])
            .collect();

        let mut best: Option<(f64, String, usize, usize)> = None;
        for &g in &candidates {
            for j in 0..retained[g].len() {
                let mut trial = moments.clone();
                let mut rest = retained[g].clone();
                rest.remove(j);
                trial[g] = group_moments(&rest);
                let score = objective(discrepancy(&trial));
                let id = &retained[g][j].id;
                let better = match &best {
                    None => true,
                    Some((s, bid, _, _)) => score < *s || (score == *s && id < bid),
                };
                if better {
                    best = Some((score, id.clone(), g, j));
                }
            }
        }
        match best {
            Some((score, id, g, j)) if score < objective(current) => {
                retained[g].remove(j);
                dropped.push(id);
            }
            _ => return Ok(finish(names, retained, dropped, false, current)),
        }
    }
}

fn finish(
    names: Vec<String>,
    retained: Vec<Vec<TextSample>>,
    dropped: Vec<String>,
    converged: bool,
    disc: (f64, f64),
) -> MatchOutcome {
    MatchOutcome {
        retained: names.into_iter().zip(retained).collect(),
        dropped,
        converged,
        max_mean_diff: disc.0,
        max_sd_diff: disc.1,
    }
}

/// Cosine similarity between each text's mean content-word vector and the
/// theme word's vector. `None` for texts with no in-vocabulary content word.
pub fn theme_similarity(
    texts: &[TextSample],
    theme_word: &str,
    store: &StaticEmbeddingStore,
    stopwords: &StopWords,
) -> Result<Vec<Option<f64>>, WritingError> {
    let theme = store
        .get(theme_word)
        .ok_or_else(|| WritingError::ThemeOutOfVocabulary(theme_word.to_string()))?;
    Ok(texts
        .iter()
        .map(|t| {
            let vectors: Vec<_> = content_tokens(&t.text)
                .iter()
                .filter(|w| !stopwords.contains(w))
                .filter_map(|w| store.get(w))
                .collect();
            if vectors.is_empty() {
                return None;
            }
            let centroid = mean_vector(vectors).ok()?;
            cosine_similarity(&centroid, theme).ok()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, words: usize) -> TextSample {
        TextSample {
            id: id.into(),
            source: "x".into(),
            task: TaskKind::Synopsis,
            text: vec!["word"; words].join(" "),
            temperature: None,
        }
    }

    #[test]
    fn dictionary_examples() {
        assert_eq!(count_syllables("sky").unwrap(), 1);
        assert_eq!(count_syllables("pond").unwrap(), 1);
        assert_eq!(count_syllables("banana").unwrap(), 3);
        assert_eq!(count_syllables("Autumn,").unwrap(), 2);
        assert!(matches!(count_syllables("123"), Err(WritingError::NoLetters(_))));
    }

    #[test]
    fn heuristic_rules() {
        assert_eq!(heuristic_syllables("cake"), 1);
        assert_eq!(heuristic_syllables("table"), 2);
        assert_eq!(heuristic_syllables("zzz"), 1);
        assert_eq!(heuristic_syllables("glimmerous"), 3);
    }

    #[test]
    fn hyphenated_compound_falls_back_per_part() {
        assert_eq!(count_syllables("moon-drenched").unwrap(), 2);
    }

    #[test]
    fn haiku_verdicts() {
        let spec = WritingTaskSpec::for_kind(TaskKind::Haiku);
        let good = "An old silent pond\nA frog jumps into the pond\nSplash! Silence again";
        let v = validate_structure(good, &spec);
        assert!(v.passes, "{v:?}");
        assert_eq!(v.details, VerdictDetails::LineSyllables(vec![5, 7, 5]));

        let v = validate_structure("An old silent pond\nA frog jumps into the pond", &spec);
        assert!(!v.passes);
        assert!(v.reason.starts_with("line count"));
    }

    #[test]
    fn word_limits() {
        let spec = WritingTaskSpec::for_kind(TaskKind::Synopsis);
        let text = vec!["word"; 60].join(" ");
        let v = validate_structure(&text, &spec);
        assert!(!v.passes);
        assert_eq!(v.details, VerdictDetails::WordCount(60));
        assert!(validate_structure(&vec!["word"; 50].join(" "), &spec).passes);
        assert_eq!(WritingTaskSpec::for_kind(TaskKind::FlashFiction).word_limit, Some(200));
    }

    #[test]
    fn identical_groups_need_no_trimming() {
        let groups = BTreeMap::from([
            ("a".to_string(), vec![sample("a1", 10), sample("a2", 20), sample("a3", 30)]),
            ("b".to_string(), vec![sample("b1", 30), sample("b2", 10), sample("b3", 20)]),
        ]);
        let out = match_word_count_distributions(&groups, &MatchOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.dropped.is_empty());
        assert_eq!(out.retained, groups);
    }

    #[test]
    fn outlier_is_trimmed() {
        let groups = BTreeMap::from([
            ("a".to_string(), vec![sample("a1", 10), sample("a2", 10), sample("a3", 10)]),
            ("b".to_string(), vec![sample("b1", 10), sample("b2", 10), sample("b3", 50)]),
        ]);
        let out = match_word_count_distributions(&groups, &MatchOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.dropped, vec!["b3"]);
        assert!(out.max_mean_diff <= 1.0);
    }

    #[test]
    fn matching_preconditions() {
        let one = BTreeMap::from([("a".to_string(), vec![sample("a1", 10)])]);
        assert!(matches!(
            match_word_count_distributions(&one, &MatchOptions::default()),
            Err(WritingError::TooFewGroups(1))
        ));
        let empty = BTreeMap::from([("a".to_string(), vec![sample("a1", 10)]), ("b".to_string(), vec![])]);
        assert!(matches!(
            match_word_count_distributions(&empty, &MatchOptions::default()),
            Err(WritingError::EmptyGroup(_))
        ));
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        let groups = BTreeMap::from([
            ("a".to_string(), vec![sample("a1", 10), sample("a2", 12)]),
            ("b".to_string(), vec![sample("b1", 40), sample("b2", 44)]),
        ]);
        let out = match_word_count_distributions(&groups, &MatchOptions::default()).unwrap();
        assert!(!out.converged);
        for (name, kept) in &out.retained {
            assert!(!kept.is_empty(), "{name} emptied");
        }
    }

    fn theme_store() -> StaticEmbeddingStore {
        StaticEmbeddingStore::from_entries([
            ("nature", vec![1.0, 0.0, 0.0]),
            ("pond", vec![1.0, 1.0, 0.0]),
            ("frog", vec![0.0, 1.0, 1.0]),
            ("steel", vec![0.0, 1.0, 0.0]),
            ("wire", vec![0.0, 0.0, 1.0]),
        ])
        .unwrap()
    }

    fn text(id: &str, body: &str) -> TextSample {
        TextSample {
            id: id.into(),
            source: "x".into(),
            task: TaskKind::Haiku,
            text: body.into(),
            temperature: None,
        }
    }

    #[test]
    fn theme_similarity_examples() {
        let store = theme_store();
        let sw = StopWords::english();
        let texts = [
            text("1", "Nature!"),
            text("2", "steel wire"),
            text("3", "the pond frog steel"),
            text("4", "zzz qqq"),
        ];
        let out = theme_similarity(&texts, "nature", &store, &sw).unwrap();
        assert_eq!(out[0], Some(1.0));
        assert_eq!(out[1], Some(0.0));
        // mean of (1,1,0),(0,1,1),(0,1,0) = (1/3, 1, 1/3); cos with (1,0,0)
        let expected = (1.0 / 3.0) / ((1.0f64 / 9.0 + 1.0 + 1.0 / 9.0).sqrt());
        assert!((out[2].unwrap() - expected).abs() < 1e-12);
        assert_eq!(out[3], None);
        assert!(matches!(
            theme_similarity(&texts, "ocean", &store, &sw),
            Err(WritingError::ThemeOutOfVocabulary(_))
        ));
    }

    #[test]
    fn theme_similarity_ignores_word_order() {
        let store = theme_store();
        let sw = StopWords::english();
        let a = theme_similarity(&[text("1", "pond frog steel")], "nature", &store, &sw).unwrap();
        let b = theme_similarity(&[text("1", "steel pond frog")], "nature", &store, &sw).unwrap();
        assert!((a[0].unwrap() - b[0].unwrap()).abs() < 1e-12);
    }
}
