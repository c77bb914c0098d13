//! Metrics for divergent (semantic) creativity of text producers.
//!
//! The crate is pure: every scorer works on in-memory inputs and provider
//! handles. Campaign running, HTTP bindings and persistence live in the
//! `divbench-harness` and `divbench-store` crates.

pub mod complexity;
pub mod dat;
pub mod dsi;
pub mod embed;
pub mod fingerprint;
pub mod pca;
pub mod stats;
pub mod text;
pub mod writing;

pub use embed::{cosine_similarity, semantic_distance, EmbedError, EmbeddingVector, StaticEmbeddingStore};
