use std::path::PathBuf;

use anyhow::{anyhow, bail, Context as _, Result};
use divbench_core::embed::{
    ContextualEmbedderSpec, ContextualProvider, DocumentEmbedder, MockContextualProvider, MockDocumentEmbedder,
};
use divbench_core::fingerprint::sha256_parts;
use divbench_core::text::StopWords;
use divbench_core::StaticEmbeddingStore;
use divbench_harness::embedders::{HttpDocumentEmbedder, ProcessContextualProvider};
use divbench_store::{RunHeader, RunStore};

use crate::config::{ContextualKind, DocumentKind, RunConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a command needs besides its own arguments.
pub struct Context {
    pub config: RunConfig,
    pub config_hash: String,
    pub out: PathBuf,
    /// Pins the `created:` header line; tests use it to compare bytes.
    pub timestamp: Option<String>,
}

impl Context {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        Self {
            config_hash: config.hash(),
            config,
            out: out.into(),
            timestamp: None,
        }
    }

    /// `config.run_id` if set, else `<command>-<hash of config and inputs>`.
    pub fn run_id(&self, command: &str, input_hashes: &[String]) -> String {
        if let Some(id) = &self.config.run_id {
            return id.clone();
        }
        let mut parts = vec![self.config_hash.clone()];
        parts.extend(input_hashes.iter().cloned());
        format!("{command}-{}", &sha256_parts(parts)[..12])
    }

    pub fn open_store(&self, run_id: &str, fingerprints: &[(&str, String)]) -> Result<RunStore> {
        let mut header = RunHeader::new(TOOL_VERSION, &self.config_hash);
        for (k, v) in fingerprints {
            header = header.with_fingerprint(*k, v.clone());
        }
        let store = RunStore::open(&self.out, run_id, header)?;
        Ok(match &self.timestamp {
            Some(ts) => store.with_timestamp(ts.clone()),
            None => store,
        })
    }

    pub fn has_embedding_table(&self) -> bool {
        self.config.embedding.is_some()
    }

    pub fn embedding_table(&self) -> Result<StaticEmbeddingStore> {
        let e = self
            .config
            .embedding
            .as_ref()
            .ok_or_else(|| anyhow!("no embedding table configured ([embedding] table = ...)"))?;
        StaticEmbeddingStore::load(&e.table, e.dim).with_context(|| format!("loading {}", e.table.display()))
    }

    pub fn stopwords(&self) -> Result<StopWords> {
        match &self.config.stopwords {
            Some(p) => StopWords::load(p).with_context(|| format!("reading {}", p.display())),
            None => Ok(StopWords::english()),
        }
    }

    pub fn contextual(&self) -> Result<(Box<dyn ContextualProvider>, ContextualEmbedderSpec)> {
        let c = &self.config.contextual;
        let spec = ContextualEmbedderSpec::new(c.layers.iter().copied(), c.combine, c.scope)?;
        let provider: Box<dyn ContextualProvider> = match c.kind {
            ContextualKind::Mock => Box::new(MockContextualProvider::new(c.depth, c.dim)),
            ContextualKind::Process => {
                if c.command.is_empty() {
                    bail!("contextual.command is required for a process provider");
                }
                let id = c.id.clone().unwrap_or_else(|| c.command.join(" "));
                Box::new(ProcessContextualProvider::new(&id, c.depth, c.command.clone()))
            }
        };
        Ok((provider, spec))
    }

    pub fn document_embedder(&self) -> Result<Box<dyn DocumentEmbedder>> {
        let d = &self.config.document;
        Ok(match d.kind {
            DocumentKind::Mock => Box::new(MockDocumentEmbedder::new(d.dim)),
            DocumentKind::Http => {
                let (Some(url), Some(model)) = (&d.base_url, &d.model) else {
                    bail!("document.base_url and document.model are required for an http embedder");
                };
                let key = d.api_key_env.as_ref().and_then(|v| std::env::var(v).ok());
                Box::new(HttpDocumentEmbedder::new(url, model, key, d.timeout_secs))
            }
        })
    }
}
