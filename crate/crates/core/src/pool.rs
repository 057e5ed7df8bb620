//! Statement pools: one statement per line, or JSONL `{"id","statement","nl"}`.

use std::path::Path;

use crate::artifact::{content_lines, parse_jsonl, ArtifactError};
use crate::search::ProofTask;

/// Parses pool text. Plain lines get ids `t1`, `t2`, ... in file order.
pub fn parse_pool(text: &str, name: &str) -> Result<Vec<ProofTask>, ArtifactError> {
    let lines = content_lines(text);
    if lines.first().is_some_and(|l| l.starts_with('{')) {
        return Ok(parse_jsonl(text.as_bytes(), name, false)?.records);
    }
    Ok(lines.into_iter().enumerate().map(|(i, s)| ProofTask::new(format!("t{}", i + 1), s)).collect())
}

pub fn load_pool(path: &Path) -> Result<Vec<ProofTask>, ArtifactError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ArtifactError::Io { path: path.display().to_string(), source: e })?;
    parse_pool(&text, &path.display().to_string())
}
