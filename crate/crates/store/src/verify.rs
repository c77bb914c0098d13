use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::header::{comment_config_hash, split_comment_block};
use crate::read::{jsonl_lines, parse_table, read_document};
use crate::{io_err, Artifact, ArtifactKind, Format, RunManifest, StoreError, MANIFEST_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    MissingFile,
    HashMismatch,
    RowCount,
    ConfigHash,
    UnlistedFile,
    DanglingReference,
    CountExceedsSamples,
    MissingSource,
    CountTotals,
    Unreadable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub file: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub run_id: String,
    pub passed: bool,
    pub files_checked: usize,
    pub findings: Vec<Finding>,
}

struct Findings(Vec<Finding>);

impl Findings {
    fn push(&mut self, kind: FindingKind, file: &str, message: String) {
        self.0.push(Finding {
            kind,
            file: Some(file.to_string()),
            message,
        });
    }
}

/// Checks hashes and row counts against the manifest, config hashes in
/// headers, sample references from score-like tables, and document sources.
pub fn verify_run(root: &Path, run_id: &str) -> Result<VerifyReport, StoreError> {
    let dir = root.join(run_id);
    if !dir.join(MANIFEST_FILE).exists() {
        return Err(StoreError::MissingManifest(run_id.to_string()));
    }
    let manifest = RunManifest::load(&dir)?;
    let mut out = Findings(Vec::new());

    let mut present: HashSet<String> = HashSet::new();
    for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
        let name = entry.map_err(io_err(&dir))?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_FILE && !name.starts_with(".tmp-") {
            present.insert(name);
        }
    }
    let mut unlisted: Vec<&String> = present.iter().filter(|n| !manifest.files.contains_key(*n)).collect();
    unlisted.sort();
    for name in unlisted {
        out.push(FindingKind::UnlistedFile, name, format!("{name} is not listed in the manifest"));
    }

    let mut sample_ids: Option<HashSet<String>> = None;
    let mut tables = Vec::new();
    let mut documents = Vec::new();
    for (name, entry) in &manifest.files {
        let path = dir.join(name);
        if !present.contains(name) {
            out.push(FindingKind::MissingFile, name, format!("{name} is listed but missing"));
            continue;
        }
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let sha = hex::encode(Sha256::digest(&bytes));
        if sha != entry.sha256 {
            out.push(FindingKind::HashMismatch, name, format!("{name} does not match its recorded sha256"));
        }
        let text = String::from_utf8_lossy(&bytes);
        let Some(artifact) = Artifact::from_file_name(name) else {
            out.push(FindingKind::Unreadable, name, format!("{name} is not a known artifact name"));
            continue;
        };
        let (rows, config_hash) = match artifact.kind.format() {
            Format::Jsonl => {
                let (block, _) = split_comment_block(&text);
                let mut ids = HashSet::new();
                let mut rows = 0;
                for line in jsonl_lines(&text) {
                    rows += 1;
                    match serde_json::from_str::<Value>(line) {
                        Ok(v) => {
                            if let Some(id) = v.get("sample_id").and_then(Value::as_str) {
                                ids.insert(id.to_string());
                            }
                        }
                        Err(e) => out.push(FindingKind::Unreadable, name, format!("{name} line {rows}: {e}")),
                    }
                }
                if artifact.kind == ArtifactKind::Samples {
                    sample_ids = Some(ids);
                }
                (rows, comment_config_hash(block).map(str::to_string))
            }
            Format::Csv => {
                let (block, _) = split_comment_block(&text);
                match parse_table(&text, name) {
                    Ok(t) => {
                        let n = t.rows.len();
                        tables.push((name.clone(), artifact.kind, t));
                        (n, comment_config_hash(block).map(str::to_string))
                    }
                    Err(e) => {
                        out.push(FindingKind::Unreadable, name, e.to_string());
                        continue;
                    }
                }
            }
            Format::Json => match read_document::<Value>(&path) {
                Ok((h, _)) => {
                    let hash = h.config_hash.clone();
                    documents.push((name.clone(), h.sources));
                    (1, Some(hash))
                }
                Err(e) => {
                    out.push(FindingKind::Unreadable, name, e.to_string());
                    continue;
                }
            },
        };
        if rows != entry.rows {
            out.push(
                FindingKind::RowCount,
                name,
                format!("{name} has {rows} rows, manifest says {}", entry.rows),
            );
        }
        if config_hash.as_deref() != Some(manifest.config_hash.as_str()) {
            out.push(
                FindingKind::ConfigHash,
                name,
                format!(
                    "{name} header config hash {} differs from run config {}",
                    config_hash.as_deref().unwrap_or("<none>"),
                    manifest.config_hash
                ),
            );
        }
    }

    let empty = HashSet::new();
    let ids = sample_ids.as_ref().unwrap_or(&empty);
    for (name, kind, table) in &tables {
        if !kind.cites_samples() {
            continue;
        }
        if table.rows.len() > ids.len() {
            out.push(
                FindingKind::CountExceedsSamples,
                name,
                format!("{name} has {} rows but the run has {} samples", table.rows.len(), ids.len()),
            );
        }
        let Some(col) = table.column("sample_id") else {
            out.push(FindingKind::Unreadable, name, format!("{name} has no sample_id column"));
            continue;
        };
        for (i, row) in table.rows.iter().enumerate() {
            if !ids.contains(&row[col]) {
                out.push(
                    FindingKind::DanglingReference,
                    name,
                    format!("{name} row {} cites unknown sample {}", i + 1, row[col]),
                );
            }
        }
    }
    for (name, sources) in &documents {
        for s in sources {
            if !manifest.files.contains_key(s) {
                out.push(FindingKind::MissingSource, name, format!("{name} references missing file {s}"));
            }
        }
    }

    let mut totals: BTreeMap<ArtifactKind, usize> = BTreeMap::new();
    for e in manifest.files.values() {
        *totals.entry(e.kind).or_insert(0) += e.rows;
    }
    if totals != manifest.counts {
        out.0.push(Finding {
            kind: FindingKind::CountTotals,
            file: Some(MANIFEST_FILE.to_string()),
            message: "manifest counts do not sum its file entries".into(),
        });
    }

    Ok(VerifyReport {
        run_id: run_id.to_string(),
        passed: out.0.is_empty(),
        files_checked: manifest.files.len(),
        findings: out.0,
    })
}
