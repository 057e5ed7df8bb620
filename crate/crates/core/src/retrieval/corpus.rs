//! Premise corpus and training-pair files.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Premise, RetrievalError, TrainPair, TrainTriplet};
use crate::artifact::{self, ArtifactError, ArtifactMeta};

impl From<ArtifactError> for RetrievalError {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Io { source, .. } => RetrievalError::Io(source),
            ArtifactError::Line { path, line, message } => RetrievalError::Format { path, line, message },
        }
    }
}

pub fn validate_corpus(premises: &[Premise]) -> Result<(), RetrievalError> {
    let mut seen = HashSet::new();
    for p in premises {
        if !seen.insert(p.id) {
            return Err(RetrievalError::DuplicateId(p.id));
        }
        if p.formal_statement.trim().is_empty() {
            return Err(RetrievalError::Precondition(format!("premise {} has an empty formal statement", p.id)));
        }
    }
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<Vec<Premise>, RetrievalError> {
    let premises = artifact::read_jsonl::<Premise>(path, false)?.records;
    validate_corpus(&premises)?;
    Ok(premises)
}

pub fn write_corpus(path: &Path, meta: Option<&ArtifactMeta>, premises: &[Premise]) -> Result<(), RetrievalError> {
    Ok(artifact::write_jsonl(path, meta, premises)?)
}

pub fn corpus_digest(premises: &[Premise]) -> String {
    artifact::digest_of(&premises)
}

/// One line of a pair or triplet file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub state: String,
    pub pos_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_id: Option<u32>,
}

impl From<&TrainPair> for PairRecord {
    fn from(p: &TrainPair) -> Self {
        PairRecord { state: p.state.clone(), pos_id: p.positive, neg_id: None }
    }
}

impl From<&TrainTriplet> for PairRecord {
    fn from(t: &TrainTriplet) -> Self {
        PairRecord { state: t.state.clone(), pos_id: t.positive, neg_id: Some(t.negative) }
    }
}

impl PairRecord {
    pub fn pair(&self) -> TrainPair {
        TrainPair { state: self.state.clone(), positive: self.pos_id }
    }

    pub fn triplet(&self) -> Option<TrainTriplet> {
        self.neg_id.map(|negative| TrainTriplet { state: self.state.clone(), positive: self.pos_id, negative })
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairRecord>, RetrievalError> {
    Ok(artifact::read_jsonl(path, false)?.records)
}

pub fn write_pairs(path: &Path, meta: Option<&ArtifactMeta>, records: &[PairRecord]) -> Result<(), RetrievalError> {
    Ok(artifact::write_jsonl(path, meta, records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            "{\"id\":0,\"formal_name\":\"and_comm\",\"informal_name\":\"Commutativity of and\",\"formal_statement\":\"A /\\\\ B -> B /\\\\ A\"}\n",
        )
        .unwrap();
        let ps = load_corpus(&path).unwrap();
        assert_eq!(ps[0].formal_statement, "A /\\ B -> B /\\ A");
        let dup = vec![ps[0].clone(), ps[0].clone()];
        assert!(matches!(validate_corpus(&dup), Err(RetrievalError::DuplicateId(0))));
    }

    #[test]
    fn pair_records() {
        let r = PairRecord { state: "⊢ A".into(), pos_id: 3, neg_id: None };
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"state":"⊢ A","pos_id":3}"#);
        assert!(r.triplet().is_none());
        let t = PairRecord { neg_id: Some(4), ..r };
        assert_eq!(t.triplet().unwrap().negative, 4);
    }
}
