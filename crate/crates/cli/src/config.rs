//! The TOML run configuration. Everything that can change an output lives
//! here; command-line flags only carry paths and verbosity.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use divbench_core::complexity::Rendering;
use divbench_core::dsi::DsiMode;
use divbench_core::embed::{CombineMode, ContextScope};
use divbench_core::fingerprint::sha256_hex;
use divbench_core::stats::TTestVariant;
use divbench_core::writing::MatchOptions;
use divbench_harness::{CampaignTask, ProviderProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides the derived run directory name.
    pub run_id: Option<String>,
    pub embedding: Option<EmbeddingConfig>,
    /// One word per line; defaults to the bundled English list.
    pub stopwords: Option<PathBuf>,
    pub contextual: ContextualConfig,
    pub document: DocumentConfig,
    pub scoring: ScoringOptions,
    pub compare: CompareOptions,
    /// Word-count matching across sources before text statistics.
    pub matching: Option<MatchOptions>,
    pub pca: PcaOptions,
    pub providers: Vec<ProviderProfile>,
    pub campaigns: Vec<CampaignEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Whitespace-separated text vectors (GloVe / word2vec text format).
    pub table: PathBuf,
    #[serde(default)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContextualKind {
    #[default]
    Mock,
    Process,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextualConfig {
    pub kind: ContextualKind,
    /// Model identifier recorded in fingerprints (process providers).
    pub id: Option<String>,
    pub depth: usize,
    /// Vector size of the mock provider.
    pub dim: usize,
    pub layers: Vec<usize>,
    pub combine: CombineMode,
    pub scope: ContextScope,
    pub command: Vec<String>,
}

impl Default for ContextualConfig {
    fn default() -> Self {
        Self {
            kind: ContextualKind::Mock,
            id: None,
            depth: 12,
            dim: 32,
            layers: vec![6, 7],
            combine: CombineMode::Average,
            scope: ContextScope::Sentence,
            command: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocumentConfig {
    pub kind: DocumentKind,
    pub dim: usize,
    pub model: Option<String>,
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<u64>,
}

impl Default for DocumentConfig {
    fn default() -> Self {
        Self {
            kind: DocumentKind::Mock,
            dim: 64,
            model: None,
            base_url: None,
            api_key_env: None,
            timeout_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringOptions {
    pub dsi_mode: DsiMode,
    pub lz_rendering: Rendering,
    pub ttest: TTestVariant,
    pub ci_level: f64,
    /// Entries per group in the word-frequency table.
    pub top_words: usize,
    /// Word whose similarity to each text is reported, e.g. "nature".
    pub theme_word: Option<String>,
    /// What happens to texts failing their structure check.
    pub non_conforming: NonConforming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonConforming {
    /// Flag them and keep them in the statistics.
    #[default]
    Keep,
    /// Flag them and leave them out of matching and the statistics.
    Drop,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            dsi_mode: DsiMode::Successive,
            lz_rendering: Rendering::Bytes,
            ttest: TTestVariant::Welch,
            ci_level: 0.95,
            top_words: 10,
            theme_word: None,
            non_conforming: NonConforming::Keep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOptions {
    /// Column to compare; defaults to `score`, else `dsi`.
    pub metric: Option<String>,
    /// Columns whose values jointly name a group; absent columns are skipped.
    pub group_by: Vec<String>,
    /// Group whose values serve as the percentile reference, e.g. "human/dat".
    pub reference_group: Option<String>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            metric: None,
            group_by: ["source", "condition", "task", "temperature"].map(String::from).to_vec(),
            reference_group: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaOptions {
    pub k: usize,
}

impl Default for PcaOptions {
    fn default() -> Self {
        Self { k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignEntry {
    pub task: CampaignTask,
    /// A `provider_id` from `providers`.
    pub provider: String,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).context("parsing run config")?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file and resolves relative paths against its folder.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(e) = &mut config.embedding {
            e.table = resolve(base, &e.table);
        }
        if let Some(s) = &mut config.stopwords {
            *s = resolve(base, s);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.providers {
            p.validate()?;
        }
        for (i, c) in self.campaigns.iter().enumerate() {
            if !self.providers.iter().any(|p| p.provider_id == c.provider) {
                bail!("campaign {} names unknown provider {:?}", i + 1, c.provider);
            }
        }
        if !(self.scoring.ci_level > 0.0 && self.scoring.ci_level < 1.0) {
            bail!("scoring.ci_level must lie in (0, 1)");
        }
        if self.pca.k == 0 {
            bail!("pca.k must be positive");
        }
        Ok(())
    }

    pub fn provider(&self, id: &str) -> Option<&ProviderProfile> {
        self.providers.iter().find(|p| p.provider_id == id)
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes"))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
