//! Divergent Semantic Integration: mean cosine distance between
//! context-dependent word embeddings of a narrative.

use serde::{Deserialize, Serialize};

use crate::embed::{
    cosine_similarity, CombineMode, ContextScope, ContextualEmbedderSpec, ContextualProvider, EmbedError,
    EmbeddingVector,
};
use crate::text::{strip_surrounding_punct, StopWords};

#[derive(Debug, thiserror::Error)]
pub enum DsiError {
    #[error("text has no content tokens after stop-word and punctuation removal")]
    NoContent,
    #[error("need at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("provider returned {got} token states for a window of {expected}")]
    ProviderShape { expected: usize, got: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc", "e.g", "i.e", "no", "inc", "ltd", "co",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "gen", "capt", "lt",
    "col", "sgt", "rev", "fig", "approx", "dept", "est", "u.s",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessedText {
    pub sentences: Vec<Vec<String>>,
    /// Tokens removed as stop words or pure punctuation.
    pub dropped: usize,
}

impl PreprocessedText {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &String> {
        self.sentences.iter().flatten()
    }
}

fn ends_sentence(raw: &str) -> bool {
    let core = raw.trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}']);
    if !core.ends_with(['.', '!', '?']) {
        return false;
    }
    if core.ends_with(['!', '?']) || core.ends_with("...") {
        return true;
    }
    let stem = core.trim_end_matches('.').trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = stem.to_lowercase();
    let single_initial = stem.chars().count() == 1 && stem.chars().all(char::is_uppercase);
    !(single_initial || ABBREVIATIONS.contains(&lower.as_str()))
}

/// Splits into sentences on terminal punctuation, lowercases, and removes
/// stop words and punctuation-only tokens.
pub fn preprocess(text: &str, stopwords: &StopWords) -> Result<PreprocessedText, DsiError> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    let mut dropped = 0usize;
    for raw in text.split_whitespace() {
        let token = strip_surrounding_punct(raw).to_lowercase();
        if token.is_empty() || stopwords.contains(&token) {
            dropped += 1;
        } else {
            current.push(token);
        }
        if ends_sentence(raw) && !current.is_empty() {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    if sentences.is_empty() {
        return Err(DsiError::NoContent);
    }
    Ok(PreprocessedText { sentences, dropped })
}

fn combine_layers(layers: &[Vec<f64>], mode: CombineMode) -> Result<Vec<f64>, DsiError> {
    let first = layers.first().ok_or(EmbedError::NoLayers)?;
    match mode {
        CombineMode::Average => {
            let mut acc = vec![0.0; first.len()];
            for l in layers {
                if l.len() != acc.len() {
                    return Err(EmbedError::DimensionMismatch {
                        left: acc.len(),
                        right: l.len(),
                    }
                    .into());
                }
                acc.iter_mut().zip(l).for_each(|(a, x)| *a += x);
            }
            let n = layers.len() as f64;
            acc.iter_mut().for_each(|a| *a /= n);
            Ok(acc)
        }
        CombineMode::Concatenate => Ok(layers.concat()),
    }
}

fn mean_rows(rows: Vec<Vec<f64>>) -> Result<Vec<f64>, DsiError> {
    let n = rows.len() as f64;
    let mut iter = rows.into_iter();
    let mut acc = iter.next().ok_or(EmbedError::EmptyVector)?;
    for row in iter {
        if row.len() != acc.len() {
            return Err(EmbedError::DimensionMismatch {
                left: acc.len(),
                right: row.len(),
            }
            .into());
        }
        acc.iter_mut().zip(&row).for_each(|(a, x)| *a += x);
    }
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// One combined vector per surviving token, in document order.
pub fn contextual_embed(
    pre: &PreprocessedText,
    spec: &ContextualEmbedderSpec,
    provider: &dyn ContextualProvider,
) -> Result<Vec<EmbeddingVector>, DsiError> {
    let layers = spec.layers();
    if let Some(&layer) = layers.iter().find(|&&l| l >= provider.depth()) {
        return Err(EmbedError::LayerOutOfRange {
            layer,
            depth: provider.depth(),
        }
        .into());
    }
    let windows: Vec<Vec<String>> = match spec.scope {
        ContextScope::Sentence => pre.sentences.clone(),
        ContextScope::Document => vec![pre.tokens().cloned().collect()],
    };
    let mut out = Vec::with_capacity(pre.token_count());
    for window in &windows {
        let states = provider.hidden_states(window, &layers)?;
        if states.len() != window.len() {
            return Err(DsiError::ProviderShape {
                expected: window.len(),
                got: states.len(),
            });
        }
        for token in states {
            let pieces = token
                .pieces
                .iter()
                .map(|piece| combine_layers(piece, spec.combine))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(EmbeddingVector::new(mean_rows(pieces)?)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsiMode {
    /// Adjacent pairs in document order.
    #[default]
    Successive,
    /// Every unordered pair.
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsiScore {
    pub value: f64,
    pub mode: DsiMode,
    pub n_pairs: usize,
    pub embedder_spec: Option<ContextualEmbedderSpec>,
}

fn cosine_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, DsiError> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// Mean cosine distance `1 - cos` over adjacent or all pairs.
pub fn dsi_score(vectors: &[EmbeddingVector], mode: DsiMode) -> Result<DsiScore, DsiError> {
    let n = vectors.len();
    if n < 2 {
        return Err(DsiError::TooFewVectors(n));
    }
    let (total, pairs) = match mode {
        DsiMode::Successive => {
            let mut total = 0.0;
            for w in vectors.windows(2) {
                total += cosine_distance(&w[0], &w[1])?;
            }
            (total, n - 1)
        }
        DsiMode::AllPairs => {
            let mut total = 0.0;
            for (i, a) in vectors.iter().enumerate() {
                for b in &vectors[i + 1..] {
                    total += cosine_distance(a, b)?;
                }
            }
            (total, n * (n - 1) / 2)
        }
    };
    Ok(DsiScore {
        value: total / pairs as f64,
        mode,
        n_pairs: pairs,
        embedder_spec: None,
    })
}

/// Preprocess, embed and score one text.
pub fn score_text(
    text: &str,
    stopwords: &StopWords,
    spec: &ContextualEmbedderSpec,
    provider: &dyn ContextualProvider,
    mode: DsiMode,
) -> Result<DsiScore, DsiError> {
    let pre = preprocess(text, stopwords)?;
    let vectors = contextual_embed(&pre, spec, provider)?;
    let mut score = dsi_score(&vectors, mode)?;
    score.embedder_spec = Some(spec.clone());
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::MockContextualProvider;

    fn v(xs: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(xs.to_vec()).unwrap()
    }

    fn strs(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn preprocess_example() {
        let sw = StopWords::from_words(["the", "a"]);
        let pre = preprocess("The cat sat. A dog ran!", &sw).unwrap();
        assert_eq!(pre.sentences, vec![strs(&["cat", "sat"]), strs(&["dog", "ran"])]);
        assert_eq!(pre.dropped, 2);
    }

    #[test]
    fn preprocess_rejects_empty_content() {
        assert!(matches!(preprocess("...!!!", &StopWords::english()), Err(DsiError::NoContent)));
        assert!(matches!(preprocess("the a an", &StopWords::english()), Err(DsiError::NoContent)));
    }

    #[test]
    fn preprocess_single_sentence_keeps_all() {
        let pre = preprocess("Crimson leaves drift slowly", &StopWords::english()).unwrap();
        assert_eq!(pre.sentences, vec![strs(&["crimson", "leaves", "drift", "slowly"])]);
        assert_eq!(pre.dropped, 0);
    }

    #[test]
    fn abbreviations_do_not_split() {
        let pre = preprocess("Dr. Smith met J. Doe. They talked?", &StopWords::empty()).unwrap();
        assert_eq!(pre.sentences, vec![strs(&["dr", "smith", "met", "j", "doe"]), strs(&["they", "talked"])]);
    }

    #[test]
    fn average_of_layers_matches_fixture_mean() {
        let p = MockContextualProvider::new(12, 3)
            .with_fixture("moon", 6, vec![1.0, 2.0, 3.0])
            .with_fixture("moon", 7, vec![3.0, 0.0, 1.0]);
        let pre = PreprocessedText {
            sentences: vec![strs(&["moon"])],
            dropped: 0,
        };
        let out = contextual_embed(&pre, &ContextualEmbedderSpec::default(), &p).unwrap();
        assert_eq!(out[0].as_slice(), &[2.0, 1.0, 2.0]);

        let single = ContextualEmbedderSpec::new([6], CombineMode::Average, ContextScope::Sentence).unwrap();
        let out = contextual_embed(&pre, &single, &p).unwrap();
        assert_eq!(out[0].as_slice(), &[1.0, 2.0, 3.0]);

        let concat = ContextualEmbedderSpec::new([6, 7], CombineMode::Concatenate, ContextScope::Document).unwrap();
        let out = contextual_embed(&pre, &concat, &p).unwrap();
        assert_eq!(out[0].as_slice(), &[1.0, 2.0, 3.0, 3.0, 0.0, 1.0]);
    }

    #[test]
    fn pieces_are_mean_pooled() {
        let p = MockContextualProvider::new(12, 2)
            .with_piece_len(2)
            .with_fixture("ab", 6, vec![1.0, 0.0])
            .with_fixture("cd", 6, vec![0.0, 1.0]);
        let pre = PreprocessedText {
            sentences: vec![strs(&["abcd"])],
            dropped: 0,
        };
        let spec = ContextualEmbedderSpec::new([6], CombineMode::Average, ContextScope::Sentence).unwrap();
        let out = contextual_embed(&pre, &spec, &p).unwrap();
        assert_eq!(out[0].as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn layer_out_of_range() {
        let p = MockContextualProvider::new(12, 3);
        let pre = PreprocessedText {
            sentences: vec![strs(&["moon"])],
            dropped: 0,
        };
        let spec = ContextualEmbedderSpec::new([99], CombineMode::Average, ContextScope::Sentence).unwrap();
        assert!(matches!(
            contextual_embed(&pre, &spec, &p),
            Err(DsiError::Embed(EmbedError::LayerOutOfRange { layer: 99, depth: 12 }))
        ));
    }

    #[test]
    fn dsi_examples() {
        let xs = [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 0.0])];
        let s = dsi_score(&xs, DsiMode::Successive).unwrap();
        assert_eq!((s.value, s.n_pairs), (1.0, 2));
        let a = dsi_score(&xs, DsiMode::AllPairs).unwrap();
        assert!((a.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.n_pairs, 3);

        let two = [v(&[0.2, 0.9]), v(&[0.7, 0.1])];
        assert_eq!(
            dsi_score(&two, DsiMode::Successive).unwrap().value,
            dsi_score(&two, DsiMode::AllPairs).unwrap().value
        );
        assert!(matches!(dsi_score(&xs[..1], DsiMode::Successive), Err(DsiError::TooFewVectors(1))));
    }

    #[test]
    fn successive_mode_is_order_sensitive() {
        let a = [v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let b = [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 0.0])];
        assert_ne!(
            dsi_score(&a, DsiMode::Successive).unwrap().value,
            dsi_score(&b, DsiMode::Successive).unwrap().value
        );
        assert_eq!(
            dsi_score(&a, DsiMode::AllPairs).unwrap().value,
            dsi_score(&b, DsiMode::AllPairs).unwrap().value
        );
    }

    #[test]
    fn score_text_records_spec() {
        let p = MockContextualProvider::new(12, 8);
        let s = score_text(
            "Moonlight spills across the silent lake. Frogs sing.",
            &StopWords::english(),
            &ContextualEmbedderSpec::default(),
            &p,
            DsiMode::Successive,
        )
        .unwrap();
        assert_eq!(s.n_pairs, 6);
        assert!((0.0..=1.0).contains(&s.value));
        assert_eq!(s.embedder_spec, Some(ContextualEmbedderSpec::default()));
    }
}
