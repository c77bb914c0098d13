//! Network and subprocess backends for the embedding traits in core.

use divbench_core::embed::{Concurrency, ContextualProvider, DocumentEmbedder, TokenStates};
use divbench_core::EmbedError;
use serde::Deserialize;

use crate::transport::{http_agent, post_json, run_process};

/// OpenAI-compatible `POST <base_url>/embeddings`.
pub struct HttpDocumentEmbedder {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpDocumentEmbedder {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, timeout_secs: Option<u64>) -> Self {
        Self {
            agent: http_agent(timeout_secs),
            url: format!("{}/embeddings", base_url.trim_end_matches('/')),
            model: model.to_string(),
            api_key,
        }
    }
}

impl DocumentEmbedder for HttpDocumentEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let body = serde_json::json!({ "model": self.model, "input": text });
        let reply = post_json(&self.agent, &self.url, self.api_key.as_deref(), &body)
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        serde_json::from_value(reply["data"][0]["embedding"].clone())
            .map_err(|e| EmbedError::Provider(format!("unexpected embeddings reply: {e}")))
    }
}

#[derive(Deserialize)]
struct HiddenStatesReply {
    /// `words[w][p][l]`: word, sub-word piece, requested layer.
    words: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Contextual encoder behind a subprocess. For each window the program gets
/// `{"words": [...], "layers": [...]}` on stdin and must print
/// `{"words": [[[f64; dim]; n_layers]; n_pieces]; n_words]}`.
pub struct ProcessContextualProvider {
    id: String,
    depth: usize,
    command: Vec<String>,
}

impl ProcessContextualProvider {
    pub fn new(id: &str, depth: usize, command: Vec<String>) -> Self {
        Self {
            id: id.to_string(),
            depth,
            command,
        }
    }
}

impl ContextualProvider for ProcessContextualProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn hidden_states(&self, window: &[String], layers: &[usize]) -> Result<Vec<TokenStates>, EmbedError> {
        let input = serde_json::json!({ "words": window, "layers": layers });
        let out = run_process(&self.command, input.to_string().as_bytes())
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        let reply: HiddenStatesReply =
            serde_json::from_str(&out).map_err(|e| EmbedError::Provider(format!("unexpected encoder output: {e}")))?;
        Ok(reply.words.into_iter().map(|pieces| TokenStates { pieces }).collect())
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Serialized
    }
}
