use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ArtifactKind;

const TOOL: &str = "divbench";

/// Provenance stamped at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub tool_version: String,
    pub config_hash: String,
    /// e.g. `embedding_table` or `contextual_provider` to a content hash.
    pub fingerprints: BTreeMap<String, String>,
}

impl RunHeader {
    pub fn new(tool_version: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            tool_version: tool_version.into(),
            config_hash: config_hash.into(),
            fingerprints: BTreeMap::new(),
        }
    }

    pub fn with_fingerprint(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.fingerprints.insert(key.into(), value.into());
        self
    }

    /// `#`-prefixed lines for CSV and JSONL files. The timestamp is always the
    /// last line.
    pub(crate) fn comment_block(&self, kind: ArtifactKind, created: &str) -> String {
        let mut out = format!("# {TOOL} {}\n# config_hash: {}\n", self.tool_version, self.config_hash);
        for (k, v) in &self.fingerprints {
            out.push_str(&format!("# fingerprint {k}: {v}\n"));
        }
        out.push_str(&format!("# kind: {kind}\n# created: {created}\n"));
        out
    }
}

/// Header object embedded in JSON documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentHeader {
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub fingerprints: BTreeMap<String, String>,
    pub kind: ArtifactKind,
    /// Files in the same run this document was derived from.
    #[serde(default)]
    pub sources: Vec<String>,
    pub created: String,
}

impl DocumentHeader {
    pub(crate) fn new(header: &RunHeader, kind: ArtifactKind, sources: Vec<String>, created: &str) -> Self {
        Self {
            tool: TOOL.to_string(),
            tool_version: header.tool_version.clone(),
            config_hash: header.config_hash.clone(),
            fingerprints: header.fingerprints.clone(),
            kind,
            sources,
            created: created.to_string(),
        }
    }
}

/// Splits a CSV/JSONL file into its leading comment block and the rest.
pub(crate) fn split_comment_block(content: &str) -> (&str, &str) {
    let mut end = 0;
    for line in content.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        end += line.len();
    }
    content.split_at(end)
}

/// The `config_hash` recorded in a comment block, if any.
pub(crate) fn comment_config_hash(block: &str) -> Option<&str> {
    block
        .lines()
        .find_map(|l| l.strip_prefix("# config_hash: "))
        .map(str::trim)
}
