//! Loading human response tables and text corpora as [`RawSample`]s, so
//! every score can cite a persisted sample.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use divbench_core::dat::{Condition, HUMAN_SOURCE};
use divbench_core::fingerprint::{sha256_hex, sha256_parts};
use divbench_core::writing::TextSample;
use divbench_harness::{ListFormat, RawSample, SampleOutcome};
use divbench_store::{Artifact, RunStore};

pub struct Inputs {
    pub samples: Vec<RawSample>,
    /// Content hash per input file, in argument order.
    pub hashes: Vec<String>,
}

impl Inputs {
    pub fn combined_hash(&self) -> String {
        sha256_parts(&self.hashes)
    }
}

/// Campaign task string for a DAT condition.
pub fn task_for_condition(c: &Condition) -> String {
    match c {
        Condition::Dat => "dat".into(),
        Condition::Control => "dat_control".into(),
        Condition::Strategy(s) => format!("dat_strategy:{s}"),
    }
}

/// DAT condition of a sample's task, `None` for writing tasks.
pub fn condition_of_task(task: &str) -> Option<Condition> {
    match task {
        "dat" => Some(Condition::Dat),
        "dat_control" => Some(Condition::Control),
        _ => task
            .strip_prefix("dat_strategy:")
            .filter(|s| !s.is_empty())
            .map(|s| Condition::Strategy(s.to_string())),
    }
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn word_column(name: &str) -> Option<usize> {
    let rest = name.strip_prefix("word")?;
    let rest = rest.strip_prefix('_').unwrap_or(rest);
    rest.parse().ok()
}

/// Reads a response table: an `id` column, optional `source`, `condition`
/// and `temperature` columns, and `word1..wordN` (or `word_1..`) columns.
pub fn read_dat_csv(path: &Path, bytes: &[u8]) -> Result<Vec<RawSample>> {
    let hash = sha256_hex(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id").or_else(|| col("sample_id"));
    let (source_col, cond_col, temp_col) = (col("source"), col("condition"), col("temperature"));
    let mut words: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| word_column(h).map(|n| (n, i)))
        .collect();
    if words.is_empty() {
        bail!("{}: no word columns (expected word1, word2, ...)", path.display());
    }
    words.sort();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();

    let mut out = Vec::new();
    for (index, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{} row {}", path.display(), index + 1))?;
        let field = |c: Option<usize>| c.and_then(|i| rec.get(i)).map(str::trim).filter(|s| !s.is_empty());
        let condition: Condition = match field(cond_col) {
            Some(c) => c.parse().with_context(|| format!("{} row {}", path.display(), index + 1))?,
            None => Condition::Dat,
        };
        let temperature = match field(temp_col) {
            Some(t) => Some(t.parse::<f64>().with_context(|| format!("bad temperature {t:?}"))?),
            None => None,
        };
        let list: Vec<String> = words
            .iter()
            .filter_map(|&(_, i)| rec.get(i))
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        out.push(RawSample {
            sample_id: field(id_col)
                .map(str::to_string)
                .unwrap_or_else(|| format!("{stem}-{:06}", index + 1)),
            campaign: format!("input:{}", &hash[..12]),
            index,
            task: task_for_condition(&condition),
            source: field(source_col).unwrap_or(HUMAN_SOURCE).to_string(),
            model: None,
            temperature,
            seed: None,
            max_tokens: None,
            requested_at: None,
            attempts: 0,
            reply: list.join("\n"),
            outcome: SampleOutcome::Words {
                words: list,
                format: ListFormat::OnePerLine,
            },
        });
    }
    Ok(out)
}

fn text_sample_to_raw(s: TextSample, hash: &str, index: usize) -> RawSample {
    RawSample {
        sample_id: s.id,
        campaign: format!("input:{}", &hash[..12]),
        index,
        task: s.task.to_string(),
        source: s.source,
        model: None,
        temperature: s.temperature,
        seed: None,
        max_tokens: None,
        requested_at: None,
        attempts: 0,
        reply: s.text.clone(),
        outcome: SampleOutcome::Text { text: s.text },
    }
}

/// JSONL lines are either persisted samples (they carry `outcome`) or
/// `{id, source, task, text, temperature?}` objects.
fn read_jsonl(path: &Path, bytes: &[u8]) -> Result<Vec<RawSample>> {
    let hash = sha256_hex(bytes);
    let text = std::str::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let where_ = || format!("{} line {}", path.display(), n + 1);
        let value: serde_json::Value = serde_json::from_str(line).with_context(where_)?;
        let sample = if value.get("outcome").is_some() {
            serde_json::from_value::<RawSample>(value).with_context(where_)?
        } else {
            let s: TextSample = serde_json::from_value(value).with_context(where_)?;
            text_sample_to_raw(s, &hash, out.len())
        };
        out.push(sample);
    }
    Ok(out)
}

fn read_text_csv(path: &Path, bytes: &[u8]) -> Result<Vec<RawSample>> {
    let hash = sha256_hex(bytes);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let mut out = Vec::new();
    for (index, rec) in reader.deserialize::<TextSample>().enumerate() {
        let s = rec.with_context(|| format!("{} row {}", path.display(), index + 1))?;
        out.push(text_sample_to_raw(s, &hash, index));
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Dat,
    Text,
}

/// Loads every input file; sample ids must be unique across them.
pub fn load(paths: &[PathBuf], kind: InputKind) -> Result<Inputs> {
    if paths.is_empty() {
        bail!("no input files given");
    }
    let mut samples = Vec::new();
    let mut hashes = Vec::new();
    for path in paths {
        let bytes = read_bytes(path)?;
        hashes.push(sha256_hex(&bytes));
        let loaded = match (is_jsonl(path), kind) {
            (true, _) => read_jsonl(path, &bytes)?,
            (false, InputKind::Dat) => read_dat_csv(path, &bytes)?,
            (false, InputKind::Text) => read_text_csv(path, &bytes)?,
        };
        if loaded.is_empty() {
            bail!("{} contains no records", path.display());
        }
        samples.extend(loaded);
    }
    let mut seen = HashSet::new();
    for s in &samples {
        if !seen.insert(s.sample_id.as_str()) {
            bail!("duplicate sample id {:?} across inputs", s.sample_id);
        }
    }
    Ok(Inputs { samples, hashes })
}

/// Appends samples not yet in the run. A sample id that is already
/// persisted with different content is an error.
pub fn persist_samples(store: &RunStore, samples: &[RawSample]) -> Result<()> {
    let existing: Vec<RawSample> = store.read_records(&Artifact::samples())?;
    let known: std::collections::HashMap<&str, &RawSample> =
        existing.iter().map(|s| (s.sample_id.as_str(), s)).collect();
    let mut fresh = Vec::new();
    for s in samples {
        match known.get(s.sample_id.as_str()) {
            Some(old) if *old != s => {
                return Err(anyhow!("sample {:?} already exists in this run with different content", s.sample_id))
            }
            Some(_) => {}
            None => fresh.push(s.clone()),
        }
    }
    if !fresh.is_empty() {
        store.write_records(&Artifact::samples(), &fresh)?;
    }
    Ok(())
}
