use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::corpus_digest;
use super::embedder::{Embedding, Role, ToyEmbedder};
use super::{Premise, PremiseRetriever, RetrievalError, ScoredPremise};
use crate::artifact::ArtifactMeta;

/// Immutable exact nearest-neighbor index over unit-norm passage embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct Index {
    premises: Vec<Premise>,
    vectors: Vec<Embedding>,
    corpus_digest: String,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<ArtifactMeta>,
    corpus_digest: String,
    ids: Vec<u32>,
    vectors: Vec<Vec<f64>>,
}

impl Index {
    pub fn build(embedder: &ToyEmbedder, premises: &[Premise]) -> Result<Self, RetrievalError> {
        if premises.is_empty() {
            return Err(RetrievalError::Precondition("cannot index an empty corpus".into()));
        }
        let mut seen = HashSet::new();
        for p in premises {
            if !seen.insert(p.id) {
                return Err(RetrievalError::DuplicateId(p.id));
            }
        }
        let vectors =
            premises.iter().map(|p| embedder.embed(&p.passage_text(), Role::Passage)).collect::<Result<_, _>>()?;
        Ok(Self { premises: premises.to_vec(), vectors, corpus_digest: corpus_digest(premises) })
    }

    /// Builds from explicit vectors; they are normalized on the way in.
    pub fn from_vectors(premises: Vec<Premise>, vectors: Vec<Vec<f64>>) -> Result<Self, RetrievalError> {
        if premises.len() != vectors.len() || premises.is_empty() {
            return Err(RetrievalError::Precondition("premises and vectors must be non-empty and aligned".into()));
        }
        let mut seen = HashSet::new();
        for p in &premises {
            if !seen.insert(p.id) {
                return Err(RetrievalError::DuplicateId(p.id));
            }
        }
        let vectors = vectors
            .into_iter()
            .map(|v| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n < 1e-12 {
                    return Err(RetrievalError::ZeroTokens);
                }
                Ok(Embedding(v.into_iter().map(|x| x / n).collect()))
            })
            .collect::<Result<_, _>>()?;
        let corpus_digest = corpus_digest(&premises);
        Ok(Self { premises, vectors, corpus_digest })
    }

    pub fn len(&self) -> usize {
        self.premises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premises.is_empty()
    }

    pub fn premises(&self) -> &[Premise] {
        &self.premises
    }

    pub fn vectors(&self) -> &[Embedding] {
        &self.vectors
    }

    pub fn corpus_digest(&self) -> &str {
        &self.corpus_digest
    }

    /// Exact top-`min(k, len)` by cosine similarity, ties by ascending id.
    pub fn search_top_k(&self, query: &Embedding, k: usize) -> Vec<ScoredPremise> {
        let mut scored: Vec<(usize, f64)> = self.vectors.iter().enumerate().map(|(i, v)| (i, query.dot(v))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(self.premises[a.0].id.cmp(&self.premises[b.0].id)));
        scored
            .into_iter()
            .take(k)
            .map(|(i, similarity)| ScoredPremise { premise: self.premises[i].clone(), similarity })
            .collect()
    }

    pub fn save(&self, path: &Path, meta: Option<&ArtifactMeta>) -> Result<(), RetrievalError> {
        let file = IndexFile {
            meta: meta.cloned(),
            corpus_digest: self.corpus_digest.clone(),
            ids: self.premises.iter().map(|p| p.id).collect(),
            vectors: self.vectors.iter().map(|v| v.0.clone()).collect(),
        };
        std::fs::write(path, serde_json::to_string(&file).map_err(|e| RetrievalError::Checkpoint(e.to_string()))?)?;
        Ok(())
    }

    /// Loads a saved index, refusing it if `premises` is not the corpus it was built from.
    pub fn load(path: &Path, premises: &[Premise]) -> Result<Self, RetrievalError> {
        let text = std::fs::read_to_string(path)?;
        let file: IndexFile = serde_json::from_str(&text).map_err(|e| RetrievalError::Checkpoint(e.to_string()))?;
        let actual = corpus_digest(premises);
        if actual != file.corpus_digest {
            return Err(RetrievalError::Stale { expected: file.corpus_digest, actual });
        }
        let ids: Vec<u32> = premises.iter().map(|p| p.id).collect();
        if ids != file.ids {
            return Err(RetrievalError::Checkpoint("index ids do not match corpus order".into()));
        }
        Self::from_vectors(premises.to_vec(), file.vectors)
    }
}

/// Embedder plus index: the retrieval service used during search.
#[derive(Clone, Debug)]
pub struct Retriever {
    pub embedder: ToyEmbedder,
    pub index: Index,
}

impl Retriever {
    pub fn new(embedder: ToyEmbedder, premises: &[Premise]) -> Result<Self, RetrievalError> {
        let index = Index::build(&embedder, premises)?;
        Ok(Self { embedder, index })
    }
}

impl PremiseRetriever for Retriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<ScoredPremise>, RetrievalError> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let q = self.embedder.embed(query, Role::Query)?;
        Ok(self.index.search_top_k(&q, k))
    }
}
