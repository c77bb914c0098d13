//! Embedding vectors, similarity math, the static word-vector store and the
//! provider interfaces for contextual and document embeddings.

mod provider;
mod store;
mod vector;

pub use provider::{
    embed_document, embed_documents, CombineMode, Concurrency, ContextScope, ContextualEmbedderSpec,
    ContextualProvider, DocumentEmbedder, DocumentEmbedding, MockContextualProvider, MockDocumentEmbedder,
    TokenStates,
};
pub use store::StaticEmbeddingStore;
pub use vector::{cosine_similarity, mean_vector, semantic_distance, EmbeddingVector};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding vector must have at least one component")]
    EmptyVector,
    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("cannot read embedding file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding file is empty")]
    EmptyFile,
    #[error("line {line}: expected {expected} components, found {found}")]
    InconsistentDimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: component {column} is not a number: {value:?}")]
    NonNumeric { line: usize, column: usize, value: String },
    #[error("line {line}: non-finite component")]
    NonFiniteComponent { line: usize },
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("no layers requested")]
    NoLayers,
    #[error("layer {layer} out of range for a provider with {depth} layers")]
    LayerOutOfRange { layer: usize, depth: usize },
    #[error("provider failure: {0}")]
    Provider(String),
}
