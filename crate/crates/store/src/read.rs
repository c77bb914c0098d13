use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::header::split_comment_block;
use crate::{io_err, DocumentHeader, StoreError};

/// A CSV artifact as strings, header comments removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub(crate) fn jsonl_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_table(text: &str, file: &str) -> Result<Table, StoreError> {
    let (_, body) = split_comment_block(text);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let parse_err = |e: csv::Error| StoreError::Parse {
        file: file.to_string(),
        reason: e.to_string(),
    };
    let columns: Vec<String> = reader.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec.map_err(parse_err)?.iter().map(str::to_string).collect());
    }
    Ok(Table { columns, rows })
}

pub fn read_table(path: &Path) -> Result<Table, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_table(&text, &file_label(path))
}

/// Reads every record of a JSONL or CSV file, skipping header comments.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file = file_label(path);
    let parse_err = |reason: String| StoreError::Parse {
        file: file.clone(),
        reason,
    };
    if file.ends_with(".jsonl") {
        return jsonl_lines(&text)
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(format!("record {i}: {e}"))))
            .collect();
    }
    if file.ends_with(".csv") {
        let (_, body) = split_comment_block(&text);
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        return reader
            .deserialize()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| parse_err(format!("record {i}: {e}"))))
            .collect();
    }
    Err(StoreError::WrongFormat {
        file,
        expected: "record",
    })
}

#[derive(Deserialize)]
struct Document<T> {
    header: DocumentHeader,
    data: T,
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<(DocumentHeader, T), StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let doc: Document<T> = serde_json::from_str(&text).map_err(|e| StoreError::Parse {
        file: file_label(path),
        reason: e.to_string(),
    })?;
    Ok((doc.header, doc.data))
}
