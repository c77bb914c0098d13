use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingVector};
use crate::fingerprint::{seed_from, sha256_parts};

/// Whether a provider tolerates concurrent calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concurrency {
    Parallel,
    Serialized,
}

/// A whole-text embedding backend.
pub trait DocumentEmbedder: Send + Sync {
    fn model_id(&self) -> &str;

    /// Raw vector for `text`. Callers go through [`embed_document`], which
    /// validates input and output.
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentEmbedding {
    pub vector: EmbeddingVector,
    pub model_id: String,
}

pub fn embed_document(text: &str, provider: &dyn DocumentEmbedder) -> Result<DocumentEmbedding, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let vector = EmbeddingVector::new(provider.embed_raw(text)?)?;
    Ok(DocumentEmbedding {
        vector,
        model_id: provider.model_id().to_string(),
    })
}

/// Embeds every text, enforcing one dimension across the batch.
pub fn embed_documents(texts: &[&str], provider: &dyn DocumentEmbedder) -> Result<Vec<DocumentEmbedding>, EmbedError> {
    let mut out: Vec<DocumentEmbedding> = Vec::with_capacity(texts.len());
    for text in texts {
        let emb = embed_document(text, provider)?;
        if let Some(first) = out.first() {
            if first.vector.dim() != emb.vector.dim() {
                return Err(EmbedError::DimensionMismatch {
                    left: first.vector.dim(),
                    right: emb.vector.dim(),
                });
            }
        }
        out.push(emb);
    }
    Ok(out)
}

/// Deterministic document embedder: a unit vector seeded from the SHA-256 of
/// the text.
#[derive(Debug, Clone)]
pub struct MockDocumentEmbedder {
    model_id: String,
    dim: usize,
}

impl MockDocumentEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            model_id: format!("mock-document-{dim}"),
            dim,
        }
    }
}

impl DocumentEmbedder for MockDocumentEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_from(text.as_bytes()));
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    #[default]
    Average,
    Concatenate,
}

/// Which span of text the provider sees as context for each token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextScope {
    #[default]
    Sentence,
    Document,
}

/// Layer selection for context-dependent word embeddings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextualEmbedderSpec {
    layers: BTreeSet<usize>,
    pub combine: CombineMode,
    pub scope: ContextScope,
}

impl Default for ContextualEmbedderSpec {
    fn default() -> Self {
        Self {
            layers: BTreeSet::from([6, 7]),
            combine: CombineMode::Average,
            scope: ContextScope::Sentence,
        }
    }
}

impl ContextualEmbedderSpec {
    pub fn new<I: IntoIterator<Item = usize>>(
        layers: I,
        combine: CombineMode,
        scope: ContextScope,
    ) -> Result<Self, EmbedError> {
        let layers: BTreeSet<usize> = layers.into_iter().collect();
        if layers.is_empty() {
            return Err(EmbedError::NoLayers);
        }
        Ok(Self { layers, combine, scope })
    }

    /// Requested layers in ascending order.
    pub fn layers(&self) -> Vec<usize> {
        self.layers.iter().copied().collect()
    }

    pub fn fingerprint(&self) -> String {
        sha256_parts([
            format!("{:?}", self.layers),
            format!("{:?}", self.combine),
            format!("{:?}", self.scope),
        ])
    }
}

/// Hidden states for one input word: `pieces[p][l]` is the vector of sub-word
/// piece `p` at the `l`-th requested layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenStates {
    pub pieces: Vec<Vec<Vec<f64>>>,
}

/// A context-dependent encoder exposing per-layer hidden states.
pub trait ContextualProvider: Send + Sync {
    /// Identifies model and tokenization; enters score fingerprints.
    fn id(&self) -> &str;

    /// Number of addressable hidden-state layers.
    fn depth(&self) -> usize;

    /// One [`TokenStates`] per word in `window`, in order. `layers` is sorted
    /// and within `0..depth()`.
    fn hidden_states(&self, window: &[String], layers: &[usize]) -> Result<Vec<TokenStates>, EmbedError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

/// Deterministic contextual provider. Each (piece, layer) maps to a fixed
/// non-negative vector seeded from its text; explicit fixtures override the
/// seeded vectors. Words longer than `piece_len` characters are split into
/// pieces of that many characters.
#[derive(Debug, Clone)]
pub struct MockContextualProvider {
    id: String,
    depth: usize,
    dim: usize,
    piece_len: Option<usize>,
    fixtures: HashMap<(String, usize), Vec<f64>>,
}

impl MockContextualProvider {
    pub fn new(depth: usize, dim: usize) -> Self {
        Self {
            id: format!("mock-contextual-{depth}x{dim}"),
            depth,
            dim,
            piece_len: None,
            fixtures: HashMap::new(),
        }
    }

    pub fn with_piece_len(mut self, len: usize) -> Self {
        self.piece_len = Some(len.max(1));
        self.id = format!("{}-p{len}", self.id);
        self
    }

    pub fn with_fixture(mut self, piece: &str, layer: usize, vector: Vec<f64>) -> Self {
        self.fixtures.insert((piece.to_string(), layer), vector);
        self
    }

    fn pieces(&self, word: &str) -> Vec<String> {
        match self.piece_len {
            Some(n) if word.chars().count() > n => {
                let chars: Vec<char> = word.chars().collect();
                chars.chunks(n).map(|c| c.iter().collect()).collect()
            }
            _ => vec![word.to_string()],
        }
    }

    fn vector(&self, piece: &str, layer: usize) -> Vec<f64> {
        if let Some(v) = self.fixtures.get(&(piece.to_string(), layer)) {
            return v.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed_from(format!("{piece}\u{1f}{layer}")));
        (0..self.dim).map(|_| rng.gen_range(0.0..1.0)).collect()
    }
}

impl ContextualProvider for MockContextualProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn hidden_states(&self, window: &[String], layers: &[usize]) -> Result<Vec<TokenStates>, EmbedError> {
        if let Some(&layer) = layers.iter().find(|&&l| l >= self.depth) {
            return Err(EmbedError::LayerOutOfRange { layer, depth: self.depth });
        }
        Ok(window
            .iter()
            .map(|word| TokenStates {
                pieces: self
                    .pieces(word)
                    .iter()
                    .map(|p| layers.iter().map(|&l| self.vector(p, l)).collect())
                    .collect(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_document_embedder_is_deterministic() {
        let p = MockDocumentEmbedder::new(16);
        let a = embed_document("a quiet pond", &p).unwrap();
        let b = embed_document("a quiet pond", &p).unwrap();
        assert_eq!(a, b);
        assert!((a.vector.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_texts_get_distinct_vectors() {
        let p = MockDocumentEmbedder::new(16);
        let a = embed_document("a quiet pond", &p).unwrap();
        let b = embed_document("a loud river", &p).unwrap();
        assert_ne!(a.vector, b.vector);
    }

    struct Counting(std::sync::atomic::AtomicUsize);
    impl DocumentEmbedder for Counting {
        fn model_id(&self) -> &str {
            "counting"
        }
        fn embed_raw(&self, _: &str) -> Result<Vec<f64>, EmbedError> {
            self.0.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(vec![1.0])
        }
    }

    #[test]
    fn empty_text_never_reaches_provider() {
        let p = Counting(Default::default());
        assert!(matches!(embed_document("", &p), Err(EmbedError::EmptyText)));
        assert!(matches!(embed_document("  \n", &p), Err(EmbedError::EmptyText)));
        assert_eq!(p.0.load(std::sync::atomic::Ordering::SeqCst), 0);
    }

    #[test]
    fn spec_requires_layers() {
        assert!(matches!(
            ContextualEmbedderSpec::new([], CombineMode::Average, ContextScope::Sentence),
            Err(EmbedError::NoLayers)
        ));
        assert_eq!(ContextualEmbedderSpec::default().layers(), vec![6, 7]);
    }

    #[test]
    fn mock_contextual_splits_long_words() {
        let p = MockContextualProvider::new(12, 4).with_piece_len(3);
        let out = p.hidden_states(&["raindrop".into(), "sky".into()], &[6, 7]).unwrap();
        assert_eq!(out[0].pieces.len(), 3);
        assert_eq!(out[1].pieces.len(), 1);
        assert_eq!(out[1].pieces[0].len(), 2);
    }
}
