//! Run directories under `<root>/<run_id>/`: append-only JSONL samples, CSV
//! tables, JSON documents and a `manifest.json` with per-file hashes.

mod artifact;
mod header;
mod read;
mod verify;

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use artifact::{Artifact, ArtifactKind, Format};
pub use header::{DocumentHeader, RunHeader};
pub use read::{read_document, read_records, read_table, Table};
pub use verify::{verify_run, Finding, FindingKind, VerifyReport};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{kind} record {index}: missing required field `{field}`")]
    MissingField {
        kind: ArtifactKind,
        index: usize,
        field: String,
    },
    #[error("{kind} record {index}: {reason}")]
    Schema {
        kind: ArtifactKind,
        index: usize,
        reason: String,
    },
    #[error("invalid artifact name {0:?}")]
    BadName(String),
    #[error("run {0} has no manifest")]
    MissingManifest(String),
    #[error("run {run_id} belongs to config {found}, not {expected}")]
    ConfigMismatch {
        run_id: String,
        expected: String,
        found: String,
    },
    #[error("{0} no longer matches its manifest hash")]
    Corrupt(String),
    #[error("{file}: {reason}")]
    Parse { file: String, reason: String },
    #[error("{file} is not a {expected} artifact")]
    WrongFormat { file: String, expected: &'static str },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub kind: ArtifactKind,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    pub tool_version: String,
    pub files: BTreeMap<String, FileEntry>,
    pub counts: BTreeMap<ArtifactKind, usize>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Parse {
            file: MANIFEST_FILE.to_string(),
            reason: e.to_string(),
        })
    }
}

struct FileState {
    hasher: Sha256,
    rows: usize,
    columns: Option<Vec<String>>,
}

struct State {
    manifest: RunManifest,
    files: HashMap<String, FileState>,
}

/// Handle on one run directory. Safe to share across threads: writes to a
/// given file are serialized, and manifest updates are serialized across the
/// run.
pub struct RunStore {
    dir: PathBuf,
    header: RunHeader,
    timestamp: Option<String>,
    state: Mutex<State>,
    file_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl RunStore {
    /// Opens `<root>/<run_id>`, creating it if needed. An existing run must
    /// carry the same config hash. A torn last line in a JSONL file (from an
    /// interrupted append) is dropped; any other file that no longer matches
    /// the manifest is an error.
    pub fn open(root: &Path, run_id: &str, header: RunHeader) -> Result<Self, StoreError> {
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id.starts_with('.') {
            return Err(StoreError::BadName(run_id.to_string()));
        }
        let dir = root.join(run_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let previous = if dir.join(MANIFEST_FILE).exists() {
            let m = RunManifest::load(&dir)?;
            if m.config_hash != header.config_hash {
                return Err(StoreError::ConfigMismatch {
                    run_id: run_id.to_string(),
                    expected: header.config_hash.clone(),
                    found: m.config_hash,
                });
            }
            Some(m)
        } else {
            None
        };

        let mut files = HashMap::new();
        let mut entries = BTreeMap::new();
        let mut names: Vec<String> = previous
            .as_ref()
            .map(|m| m.files.keys().cloned().collect())
            .unwrap_or_default();
        // Append-only files may exist without a manifest entry after a crash.
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let name = entry.map_err(io_err(&dir))?.file_name().to_string_lossy().into_owned();
            if let Some(a) = Artifact::from_file_name(&name) {
                if a.kind.format() == Format::Jsonl && !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        for name in names {
            let Some(artifact) = Artifact::from_file_name(&name) else { continue };
            let path = dir.join(&name);
            if !path.exists() {
                return Err(StoreError::Corrupt(name));
            }
            if artifact.kind.format() == Format::Jsonl {
                truncate_torn_tail(&path)?;
            }
            let (fs_state, sha) = scan_file(&path, artifact.kind)?;
            if artifact.kind.format() != Format::Jsonl {
                let recorded = previous.as_ref().and_then(|m| m.files.get(&name));
                if recorded.map(|e| &e.sha256) != Some(&sha) {
                    return Err(StoreError::Corrupt(name));
                }
            }
            entries.insert(
                name.clone(),
                FileEntry {
                    kind: artifact.kind,
                    sha256: sha,
                    rows: fs_state.rows,
                },
            );
            files.insert(name, fs_state);
        }

        let mut manifest = RunManifest {
            run_id: run_id.to_string(),
            config_hash: header.config_hash.clone(),
            tool_version: header.tool_version.clone(),
            files: entries,
            counts: BTreeMap::new(),
        };
        manifest.counts = counts_of(&manifest.files);
        write_atomic(&dir, MANIFEST_FILE, manifest_bytes(&manifest)?.as_slice())?;
        Ok(Self {
            dir,
            header,
            timestamp: None,
            state: Mutex::new(State { manifest, files }),
            file_locks: Mutex::new(HashMap::new()),
        })
    }

    /// Uses a fixed creation timestamp in headers instead of the clock.
    pub fn with_timestamp(mut self, ts: impl Into<String>) -> Self {
        self.timestamp = Some(ts.into());
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, artifact: &Artifact) -> PathBuf {
        self.dir.join(artifact.file_name())
    }

    pub fn header(&self) -> &RunHeader {
        &self.header
    }

    pub fn manifest(&self) -> RunManifest {
        self.state.lock().expect("store state poisoned").manifest.clone()
    }

    fn created(&self) -> String {
        self.timestamp
            .clone()
            .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    }

    fn file_lock(&self, name: &str) -> Arc<Mutex<()>> {
        let mut locks = self.file_locks.lock().expect("lock table poisoned");
        locks.entry(name.to_string()).or_default().clone()
    }

    /// Appends records to a JSONL or CSV artifact, creating it with a header
    /// on first write.
    pub fn write_records<T: Serialize>(&self, artifact: &Artifact, records: &[T]) -> Result<PathBuf, StoreError> {
        let objects = to_objects(artifact.kind, records)?;
        let name = artifact.file_name();
        let path = self.dir.join(&name);
        let lock = self.file_lock(&name);
        let _guard = lock.lock().expect("file lock poisoned");

        let existing_columns = {
            let state = self.state.lock().expect("store state poisoned");
            state.files.get(&name).map(|f| f.columns.clone())
        };
        let is_new = existing_columns.is_none();
        let (bytes, columns) = match artifact.kind.format() {
            Format::Jsonl => {
                let mut out = String::new();
                if is_new {
                    out.push_str(&self.header.comment_block(artifact.kind, &self.created()));
                }
                for o in &objects {
                    out.push_str(&serde_json::to_string(o).expect("json values serialize"));
                    out.push('\n');
                }
                (out.into_bytes(), None)
            }
            Format::Csv => {
                let columns = match existing_columns.flatten() {
                    Some(c) => c,
                    None => match objects.first() {
                        Some(o) => o.keys().cloned().collect(),
                        None => return Ok(path),
                    },
                };
                let mut out = Vec::new();
                if is_new {
                    out.extend(self.header.comment_block(artifact.kind, &self.created()).into_bytes());
                }
                out.extend(csv_rows(artifact.kind, &columns, &objects, is_new)?);
                (out, Some(columns))
            }
            Format::Json => {
                return Err(StoreError::WrongFormat {
                    file: name,
                    expected: "record",
                })
            }
        };
        if objects.is_empty() && !is_new {
            return Ok(path);
        }

        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        f.write_all(&bytes).map_err(io_err(&path))?;
        f.flush().map_err(io_err(&path))?;

        let mut state = self.state.lock().expect("store state poisoned");
        let entry = state.files.entry(name.clone()).or_insert_with(|| FileState {
            hasher: Sha256::new(),
            rows: 0,
            columns: None,
        });
        entry.hasher.update(&bytes);
        entry.rows += objects.len();
        if columns.is_some() {
            entry.columns = columns;
        }
        self.commit(&mut state, &name, artifact.kind)?;
        Ok(path)
    }

    /// Replaces a JSONL or CSV artifact in one atomic rename.
    pub fn replace_records<T: Serialize>(&self, artifact: &Artifact, records: &[T]) -> Result<PathBuf, StoreError> {
        let objects = to_objects(artifact.kind, records)?;
        let name = artifact.file_name();
        let lock = self.file_lock(&name);
        let _guard = lock.lock().expect("file lock poisoned");

        let mut content = self.header.comment_block(artifact.kind, &self.created()).into_bytes();
        let columns = match artifact.kind.format() {
            Format::Jsonl => {
                for o in &objects {
                    content.extend(serde_json::to_string(o).expect("json values serialize").into_bytes());
                    content.push(b'\n');
                }
                None
            }
            Format::Csv => {
                let columns: Vec<String> = objects.first().map(|o| o.keys().cloned().collect()).unwrap_or_default();
                if !columns.is_empty() {
                    content.extend(csv_rows(artifact.kind, &columns, &objects, true)?);
                }
                Some(columns)
            }
            Format::Json => {
                return Err(StoreError::WrongFormat {
                    file: name,
                    expected: "record",
                })
            }
        };
        let path = write_atomic(&self.dir, &name, &content)?;
        let mut state = self.state.lock().expect("store state poisoned");
        state.files.insert(
            name.clone(),
            FileState {
                hasher: Sha256::new_with_prefix(&content),
                rows: objects.len(),
                columns: columns.filter(|c| !c.is_empty()),
            },
        );
        self.commit(&mut state, &name, artifact.kind)?;
        Ok(path)
    }

    /// Writes a JSON document `{"header": ..., "data": ...}` atomically.
    /// `sources` names files of this run the document was derived from.
    pub fn write_document<T: Serialize>(
        &self,
        artifact: &Artifact,
        data: &T,
        sources: &[String],
    ) -> Result<PathBuf, StoreError> {
        let name = artifact.file_name();
        if artifact.kind.format() != Format::Json {
            return Err(StoreError::WrongFormat {
                file: name,
                expected: "document",
            });
        }
        let lock = self.file_lock(&name);
        let _guard = lock.lock().expect("file lock poisoned");
        let header = DocumentHeader::new(&self.header, artifact.kind, sources.to_vec(), &self.created());
        let doc = serde_json::json!({ "header": header, "data": data });
        let mut content = serde_json::to_vec_pretty(&doc).map_err(|e| StoreError::Schema {
            kind: artifact.kind,
            index: 0,
            reason: e.to_string(),
        })?;
        content.push(b'\n');
        let path = write_atomic(&self.dir, &name, &content)?;
        let mut state = self.state.lock().expect("store state poisoned");
        state.files.insert(
            name.clone(),
            FileState {
                hasher: Sha256::new_with_prefix(&content),
                rows: 1,
                columns: None,
            },
        );
        self.commit(&mut state, &name, artifact.kind)?;
        Ok(path)
    }

    pub fn read_records<T: serde::de::DeserializeOwned>(&self, artifact: &Artifact) -> Result<Vec<T>, StoreError> {
        let path = self.path_of(artifact);
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_records(&path)
    }

    fn commit(&self, state: &mut State, name: &str, kind: ArtifactKind) -> Result<(), StoreError> {
        let fs_state = &state.files[name];
        let sha = hex::encode(fs_state.hasher.clone().finalize());
        let rows = fs_state.rows;
        state.manifest.files.insert(name.to_string(), FileEntry { kind, sha256: sha, rows });
        state.manifest.counts = counts_of(&state.manifest.files);
        write_atomic(&self.dir, MANIFEST_FILE, &manifest_bytes(&state.manifest)?)?;
        Ok(())
    }
}

fn counts_of(files: &BTreeMap<String, FileEntry>) -> BTreeMap<ArtifactKind, usize> {
    let mut counts = BTreeMap::new();
    for e in files.values() {
        *counts.entry(e.kind).or_insert(0) += e.rows;
    }
    counts
}

fn manifest_bytes(m: &RunManifest) -> Result<Vec<u8>, StoreError> {
    let mut bytes = serde_json::to_vec_pretty(m).map_err(|e| StoreError::Parse {
        file: MANIFEST_FILE.to_string(),
        reason: e.to_string(),
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes to a temporary file in `dir`, then renames it over `name`.
fn write_atomic(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf, StoreError> {
    let path = dir.join(name);
    let mut tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)
        .map_err(io_err(dir))?;
    tmp.write_all(content).map_err(io_err(&path))?;
    tmp.as_file().sync_all().map_err(io_err(&path))?;
    tmp.persist(&path).map_err(|e| StoreError::Io {
        path: path.clone(),
        source: e.error,
    })?;
    Ok(path)
}

fn truncate_torn_tail(path: &Path) -> Result<(), StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
    f.set_len(keep as u64).map_err(io_err(path))?;
    Ok(())
}

fn scan_file(path: &Path, kind: ArtifactKind) -> Result<(FileState, String), StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let hasher = Sha256::new_with_prefix(&bytes);
    let sha = hex::encode(hasher.clone().finalize());
    let text = String::from_utf8_lossy(&bytes);
    let file = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (rows, columns) = match kind.format() {
        Format::Jsonl => (read::jsonl_lines(&text).count(), None),
        Format::Csv => {
            let table = read::parse_table(&text, &file)?;
            (table.rows.len(), Some(table.columns).filter(|c| !c.is_empty()))
        }
        Format::Json => (1, None),
    };
    Ok((FileState { hasher, rows, columns }, sha))
}

fn to_objects<T: Serialize>(kind: ArtifactKind, records: &[T]) -> Result<Vec<Map<String, Value>>, StoreError> {
    records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let value = serde_json::to_value(r).map_err(|e| StoreError::Schema {
                kind,
                index,
                reason: e.to_string(),
            })?;
            let Value::Object(map) = value else {
                return Err(StoreError::Schema {
                    kind,
                    index,
                    reason: "record is not an object".into(),
                });
            };
            validate_object(kind, index, &map)?;
            Ok(map)
        })
        .collect()
}

fn validate_object(kind: ArtifactKind, index: usize, map: &Map<String, Value>) -> Result<(), StoreError> {
    if let Some(field) = kind.required_fields().iter().find(|f| !map.contains_key(**f)) {
        return Err(StoreError::MissingField {
            kind,
            index,
            field: field.to_string(),
        });
    }
    if let Some(id) = map.get("sample_id") {
        if !matches!(id, Value::String(s) if !s.is_empty()) {
            return Err(StoreError::Schema {
                kind,
                index,
                reason: "sample_id must be a non-empty string".into(),
            });
        }
    }
    Ok(())
}

fn csv_cell(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(_) | Value::Object(_) => None,
    }
}

fn csv_rows(
    kind: ArtifactKind,
    columns: &[String],
    objects: &[Map<String, Value>],
    with_header: bool,
) -> Result<Vec<u8>, StoreError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |index: usize, e: csv::Error| StoreError::Schema {
        kind,
        index,
        reason: e.to_string(),
    };
    if with_header {
        w.write_record(columns).map_err(|e| csv_err(0, e))?;
    }
    for (index, o) in objects.iter().enumerate() {
        if let Some(extra) = o.keys().find(|k| !columns.contains(k)) {
            return Err(StoreError::Schema {
                kind,
                index,
                reason: format!("unexpected field `{extra}`"),
            });
        }
        let mut row = Vec::with_capacity(columns.len());
        for c in columns {
            let v = o.get(c).ok_or_else(|| StoreError::MissingField {
                kind,
                index,
                field: c.clone(),
            })?;
            row.push(csv_cell(v).ok_or_else(|| StoreError::Schema {
                kind,
                index,
                reason: format!("field `{c}` is nested; CSV cells must be scalars"),
            })?);
        }
        w.write_record(&row).map_err(|e| csv_err(index, e))?;
    }
    w.into_inner().map_err(|e| StoreError::Schema {
        kind,
        index: 0,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Score {
        sample_id: String,
        score: Option<f64>,
        note: String,
    }

    fn header() -> RunHeader {
        RunHeader::new("0.1.0", "cfg").with_fingerprint("table", "abc")
    }

    #[test]
    fn csv_append_and_read_back() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::open(tmp.path(), "r1", header()).unwrap().with_timestamp("T");
        let a = Artifact::named(ArtifactKind::Scores, "dat").unwrap();
        let rows = vec![
            Score {
                sample_id: "s1".into(),
                score: Some(81.25),
                note: "a, \"quoted\"\nline".into(),
            },
            Score {
                sample_id: "s2".into(),
                score: None,
                note: String::new(),
            },
        ];
        store.write_records(&a, &rows[..1]).unwrap();
        store.write_records(&a, &rows[1..]).unwrap();
        let back: Vec<Score> = store.read_records(&a).unwrap();
        assert_eq!(back, rows);
        let m = store.manifest();
        assert_eq!(m.files["scores_dat.csv"].rows, 2);
        let bytes = fs::read(store.path_of(&a)).unwrap();
        assert_eq!(m.files["scores_dat.csv"].sha256, hex::encode(Sha256::digest(&bytes)));
    }

    #[test]
    fn missing_field_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::open(tmp.path(), "r1", header()).unwrap();
        let err = store
            .write_records(&Artifact::samples(), &[serde_json::json!({"sample_id": "x", "campaign": "c"})])
            .unwrap_err();
        assert!(err.to_string().contains("`temperature`"), "{err}");
    }

    #[test]
    fn reopen_with_other_config_fails() {
        let tmp = tempfile::tempdir().unwrap();
        RunStore::open(tmp.path(), "r1", header()).unwrap();
        let err = RunStore::open(tmp.path(), "r1", RunHeader::new("0.1.0", "other"));
        assert!(matches!(err, Err(StoreError::ConfigMismatch { .. })));
    }

    #[test]
    fn torn_jsonl_tail_dropped_on_reopen() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::open(tmp.path(), "r1", header()).unwrap();
        let rec = serde_json::json!({"sample_id": "a", "campaign": "c", "temperature": 1.0, "reply": "x", "outcome": null});
        store.write_records(&Artifact::samples(), &[rec]).unwrap();
        let path = store.path_of(&Artifact::samples());
        drop(store);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"sample_id\": \"b\", \"camp").unwrap();
        let store = RunStore::open(tmp.path(), "r1", header()).unwrap();
        let back: Vec<Value> = store.read_records(&Artifact::samples()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(store.manifest().counts[&ArtifactKind::Samples], 1);
    }

    #[test]
    fn document_carries_header() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::open(tmp.path(), "r1", header()).unwrap().with_timestamp("T");
        let a = Artifact::named(ArtifactKind::Summary, "dat").unwrap();
        store.write_document(&a, &serde_json::json!({"mean": 1.5}), &["scores_dat.csv".into()]).unwrap();
        let (h, data): (DocumentHeader, Value) = read_document(&store.path_of(&a)).unwrap();
        assert_eq!(h.config_hash, "cfg");
        assert_eq!(h.sources, vec!["scores_dat.csv".to_string()]);
        assert_eq!(data["mean"], 1.5);
        let text = fs::read_to_string(store.path_of(&a)).unwrap();
        assert_eq!(text.lines().filter(|l| l.contains("\"T\"")).count(), 1);
    }
}
