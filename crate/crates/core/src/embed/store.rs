use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingVector};
use crate::fingerprint::sha256_parts;

/// Context-independent word vectors loaded from a text table
/// (`word v1 v2 ... vD` per line, GloVe layout).
///
/// Keys are lowercased on ingest and on lookup. When a word appears on
/// several lines the last occurrence wins.
#[derive(Debug, Clone)]
pub struct StaticEmbeddingStore {
    vocabulary: HashMap<String, EmbeddingVector>,
    dim: usize,
    fingerprint: String,
}

impl StaticEmbeddingStore {
    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<Self, EmbedError> {
        let io_err = |source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        Self::from_reader(BufReader::new(file), expected_dim).map_err(|e| match e {
            EmbedError::Io { source, .. } => io_err(source),
            other => other,
        })
    }

    /// Parses a table from any buffered reader. The fingerprint is the
    /// SHA-256 of the exact bytes consumed.
    pub fn from_reader<R: BufRead>(mut reader: R, expected_dim: Option<usize>) -> Result<Self, EmbedError> {
        let mut hasher = Sha256::new();
        let mut vocabulary = HashMap::new();
        let mut dim = expected_dim;
        let mut line = String::new();
        let mut line_no = 0usize;
        loop {
            line.clear();
            let read = reader.read_line(&mut line).map_err(|source| EmbedError::Io {
                path: Default::default(),
                source,
            })?;
            if read == 0 {
                break;
            }
            hasher.update(line.as_bytes());
            line_no += 1;
            let record = line.trim_end_matches(['\n', '\r']);
            if record.trim().is_empty() {
                continue;
            }
            let mut fields = record.split(' ').filter(|f| !f.is_empty());
            let word = fields.next().unwrap_or_default().to_lowercase();
            let raw: Vec<&str> = fields.collect();
            // word2vec text tables open with a "<count> <dim>" header line
            if line_no == 1 && raw.len() == 1 && word.parse::<usize>().is_ok() {
                if let Ok(header_dim) = raw[0].parse::<usize>() {
                    if dim.is_none() {
                        dim = Some(header_dim);
                    }
                    continue;
                }
            }
            let expected = *dim.get_or_insert(raw.len());
            if raw.len() != expected || expected == 0 {
                return Err(EmbedError::InconsistentDimension {
                    line: line_no,
                    expected,
                    found: raw.len(),
                });
            }
            let mut values = Vec::with_capacity(expected);
            for (column, field) in raw.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| EmbedError::NonNumeric {
                    line: line_no,
                    column: column + 1,
                    value: field.to_string(),
                })?;
                values.push(value);
            }
            let vector = EmbeddingVector::new(values).map_err(|_| EmbedError::NonFiniteComponent { line: line_no })?;
            vocabulary.insert(word, vector);
        }
        let dim = match dim {
            Some(d) if !vocabulary.is_empty() => d,
            _ => return Err(EmbedError::EmptyFile),
        };
        Ok(Self {
            vocabulary,
            dim,
            fingerprint: hex::encode(hasher.finalize()),
        })
    }

    /// Builds a store from in-memory entries. The fingerprint is computed
    /// over the entries in the order given.
    pub fn from_entries<I, S>(entries: I) -> Result<Self, EmbedError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut vocabulary = HashMap::new();
        let mut dim = None;
        let mut parts: Vec<Vec<u8>> = Vec::new();
        for (i, (word, values)) in entries.into_iter().enumerate() {
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected {
                return Err(EmbedError::InconsistentDimension {
                    line: i + 1,
                    expected,
                    found: values.len(),
                });
            }
            let word = word.as_ref().to_lowercase();
            parts.push(word.as_bytes().to_vec());
            parts.push(values.iter().flat_map(|v| v.to_le_bytes()).collect());
            vocabulary.insert(word, EmbeddingVector::new(values)?);
        }
        let dim = dim.ok_or(EmbedError::EmptyFile)?;
        Ok(Self {
            vocabulary,
            dim,
            fingerprint: sha256_parts(&parts),
        })
    }

    pub fn get(&self, word: &str) -> Option<&EmbeddingVector> {
        match self.vocabulary.get(word) {
            Some(v) => Some(v),
            None => self.vocabulary.get(&word.to_lowercase()),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Vocabulary words in lexicographic order.
    pub fn words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.vocabulary.keys().map(String::as_str).collect();
        words.sort_unstable();
        words
    }
}
