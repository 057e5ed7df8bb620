//! Premise selection: a hashed-token embedder shared by proof states and
//! theorems, exact top-k search, and two-stage training (in-batch contrastive,
//! then triplets with mined hard negatives).

pub mod corpus;
pub mod embedder;
pub mod index;
pub mod loss;
pub mod mining;
pub mod synthetic;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{load_corpus, read_pairs, write_pairs, PairRecord};
pub use embedder::{Embedding, Role, ToyEmbedder};
pub use index::{Index, Retriever};
pub use loss::{contrastive_loss, triplet_loss};
pub use mining::mine_hard_negatives;
pub use synthetic::{planted_dataset, recall_at_k, SyntheticDataset, SyntheticSpec};
pub use train::{gradient_check, train_stage1, train_stage2, StageConfig, TrainLog};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premise {
    pub id: u32,
    pub formal_name: String,
    pub informal_name: String,
    pub formal_statement: String,
}

impl Premise {
    /// Text embedded on the passage side.
    pub fn passage_text(&self) -> String {
        format!("{} {}", self.formal_name, self.formal_statement)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPremise {
    pub premise: Premise,
    pub similarity: f64,
}

/// Anything that can return the `k` premises most relevant to a query text.
pub trait PremiseRetriever: Sync {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<ScoredPremise>, RetrievalError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainPair {
    pub state: String,
    pub positive: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainTriplet {
    pub state: String,
    pub positive: u32,
    pub negative: u32,
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("text has no tokens")]
    ZeroTokens,
    #[error("duplicate premise id {0}")]
    DuplicateId(u32),
    #[error("unknown premise id {0}")]
    UnknownId(u32),
    #[error("{0}")]
    Precondition(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}: {loss}")]
    NonFinite { epoch: usize, batch: usize, loss: f64 },
    #[error("index is stale: corpus digest {actual} does not match {expected}")]
    Stale { expected: String, actual: String },
    #[error("embedder checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
