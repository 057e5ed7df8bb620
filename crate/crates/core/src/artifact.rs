//! Artifact files: JSONL with an optional leading metadata record, plain-text
//! files with a leading `--` comment, and content digests.
//!
//! Every artifact written by the tools carries the config digest and seed that
//! produced it. Readers skip the metadata record and comment lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub config_digest: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    meta: ArtifactMeta,
}

impl ArtifactMeta {
    pub fn new(config_digest: impl Into<String>, seed: u64) -> Self {
        Self { config_digest: config_digest.into(), seed }
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(&MetaRecord { meta: self.clone() }).expect("meta serializes")
    }

    pub fn comment_line(&self) -> String {
        format!("-- config_digest={} seed={}", self.config_digest, self.seed)
    }

    pub fn parse_json_line(line: &str) -> Option<Self> {
        serde_json::from_str::<MetaRecord>(line).ok().map(|r| r.meta)
    }
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
}

impl ArtifactError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        ArtifactError::Io { path: path.display().to_string(), source }
    }
}

/// Hex SHA-256, truncated to 16 characters.
pub fn digest_hex(bytes: &[u8]) -> String {
    let full = Sha256::digest(bytes);
    hex::encode(full)[..16].to_string()
}

/// Digest of a serializable value's canonical JSON form.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    digest_hex(&serde_json::to_vec(value).expect("value serializes"))
}

pub fn jsonl_string<T: Serialize>(meta: Option<&ArtifactMeta>, items: &[T]) -> String {
    let mut out = String::new();
    if let Some(meta) = meta {
        out.push_str(&meta.json_line());
        out.push('\n');
    }
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, meta: Option<&ArtifactMeta>, items: &[T]) -> Result<(), ArtifactError> {
    let file = File::create(path).map_err(|e| ArtifactError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(jsonl_string(meta, items).as_bytes()).map_err(|e| ArtifactError::io(path, e))?;
    w.flush().map_err(|e| ArtifactError::io(path, e))
}

/// Records plus any per-line problems skipped in permissive mode.
#[derive(Debug)]
pub struct JsonlRead<T> {
    pub records: Vec<T>,
    pub meta: Option<ArtifactMeta>,
    pub skipped: Vec<(usize, String)>,
}

/// Reads JSONL; malformed lines are fatal unless `permissive`.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, permissive: bool) -> Result<JsonlRead<T>, ArtifactError> {
    let file = File::open(path).map_err(|e| ArtifactError::io(path, e))?;
    parse_jsonl(BufReader::new(file), &path.display().to_string(), permissive)
}

pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(
    reader: R,
    name: &str,
    permissive: bool,
) -> Result<JsonlRead<T>, ArtifactError> {
    let mut out = JsonlRead { records: Vec::new(), meta: None, skipped: Vec::new() };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ArtifactError::Io { path: name.to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        if out.records.is_empty() && out.meta.is_none() {
            if let Some(meta) = ArtifactMeta::parse_json_line(&line) {
                out.meta = Some(meta);
                continue;
            }
        }
        match serde_json::from_str(&line) {
            Ok(record) => out.records.push(record),
            Err(e) if permissive => out.skipped.push((line_no, e.to_string())),
            Err(e) => {
                return Err(ArtifactError::Line { path: name.to_string(), line: line_no, message: e.to_string() })
            }
        }
    }
    Ok(out)
}

/// Non-empty lines that are not `--` or `#` comments.
pub fn content_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("--") && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn write_text_lines(path: &Path, meta: Option<&ArtifactMeta>, lines: &[String]) -> Result<(), ArtifactError> {
    let mut out = String::new();
    if let Some(meta) = meta {
        out.push_str(&meta.comment_line());
        out.push('\n');
    }
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| ArtifactError::io(path, e))
}
