use std::fmt;

use serde::{Deserialize, Serialize};

use crate::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Samples,
    Scores,
    Summary,
    Contrasts,
    Heatmap,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
    Json,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 6] = [
        ArtifactKind::Samples,
        ArtifactKind::Scores,
        ArtifactKind::Summary,
        ArtifactKind::Contrasts,
        ArtifactKind::Heatmap,
        ArtifactKind::Pca,
    ];

    pub fn format(self) -> Format {
        match self {
            ArtifactKind::Samples => Format::Jsonl,
            ArtifactKind::Scores | ArtifactKind::Contrasts | ArtifactKind::Pca => Format::Csv,
            ArtifactKind::Summary | ArtifactKind::Heatmap => Format::Json,
        }
    }

    /// Fields every record of this kind must carry.
    pub fn required_fields(self) -> &'static [&'static str] {
        match self {
            ArtifactKind::Samples => &["sample_id", "campaign", "temperature", "reply", "outcome"],
            ArtifactKind::Scores | ArtifactKind::Pca => &["sample_id"],
            ArtifactKind::Contrasts => &["group_a", "group_b", "t", "df", "p_raw", "p_adj", "tier"],
            ArtifactKind::Summary | ArtifactKind::Heatmap => &[],
        }
    }

    /// Whether rows of this kind cite a persisted sample.
    pub fn cites_samples(self) -> bool {
        matches!(self, ArtifactKind::Scores | ArtifactKind::Pca)
    }

    fn prefix(self) -> &'static str {
        match self {
            ArtifactKind::Samples => "samples",
            ArtifactKind::Scores => "scores",
            ArtifactKind::Summary => "summary",
            ArtifactKind::Contrasts => "contrasts",
            ArtifactKind::Heatmap => "heatmap",
            ArtifactKind::Pca => "pca",
        }
    }

    fn extension(self) -> &'static str {
        match self.format() {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// One file in a run directory. Every kind except samples carries a name,
/// e.g. `scores_dat.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub name: Option<String>,
}

impl Artifact {
    pub fn samples() -> Self {
        Self {
            kind: ArtifactKind::Samples,
            name: None,
        }
    }

    pub fn named(kind: ArtifactKind, name: &str) -> Result<Self, StoreError> {
        if kind == ArtifactKind::Samples {
            return Ok(Self::samples());
        }
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-');
        if !ok {
            return Err(StoreError::BadName(name.to_string()));
        }
        Ok(Self {
            kind,
            name: Some(name.to_string()),
        })
    }

    pub fn file_name(&self) -> String {
        match &self.name {
            None => format!("{}.{}", self.kind.prefix(), self.kind.extension()),
            Some(n) => format!("{}_{}.{}", self.kind.prefix(), n, self.kind.extension()),
        }
    }

    /// Inverse of [`Artifact::file_name`].
    pub fn from_file_name(file: &str) -> Option<Self> {
        if file == "samples.jsonl" {
            return Some(Self::samples());
        }
        ArtifactKind::ALL
            .iter()
            .filter(|k| **k != ArtifactKind::Samples)
            .find_map(|&kind| {
                let rest = file.strip_prefix(kind.prefix())?.strip_prefix('_')?;
                let name = rest.strip_suffix(kind.extension())?.strip_suffix('.')?;
                Artifact::named(kind, name).ok()
            })
    }
}
