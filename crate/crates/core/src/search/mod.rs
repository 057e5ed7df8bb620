//! Best-first search over proof states.
//!
//! A node reached by tactics `a_0 .. a_{L-1}` is scored as
//! `Σ log p(a_t | s_t) / L^α`. The root (L = 0) is expanded before the loop and
//! never scored. The highest-scoring open node is expanded next; equal scores
//! go to the node created first.

mod frontier;
mod pass;
pub mod snapshot;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvError;
use crate::generator::GenError;
use crate::kernel::{ErrorClass, ProofState};
use crate::retrieval::RetrievalError;

pub use frontier::Frontier;
pub use pass::{pass_seed, ProofTask, ProveResult, Prover};

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("path length must be at least 1 to score a node")]
    ZeroLength,
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("invalid pass configuration: {0}")]
    Config(String),
    #[error("statement rejected by the environment ({class}): {message}")]
    Init { class: ErrorClass, message: String },
    #[error("tactic generator failed: {0}")]
    Generator(#[from] GenError),
    #[error("environment failed: {0}")]
    Environment(#[from] EnvError),
    #[error("premise retrieval failed: {0}")]
    Retrieval(#[from] RetrievalError),
}

/// `cumulative / length^alpha`.
pub fn score_node(cumulative_logprob: f64, length: u32, alpha: f64) -> Result<f64, SearchError> {
    if length == 0 {
        return Err(SearchError::ZeroLength);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SearchError::AlphaOutOfRange(alpha));
    }
    Ok(cumulative_logprob / f64::from(length).powf(alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeStatus {
    Open,
    Expanded,
    TerminalComplete,
    /// Expanded without producing any child.
    Dead,
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub state: ProofState,
    pub tactic: Option<String>,
    pub step_logprob: f64,
    pub cumulative: f64,
    pub depth: u32,
    /// `None` only for the root.
    pub score: Option<f64>,
    pub status: NodeStatus,
    /// Index of the expansion that created this node.
    pub born: Option<usize>,
    /// Index of the expansion that expanded this node.
    pub expanded_at: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassConfig {
    /// Candidates requested per expansion (N).
    pub samples_per_step: usize,
    /// Generator calls allowed per pass, root included (E).
    pub max_expansions: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub top_k: usize,
    pub seed: u64,
    #[serde(default, with = "optional_secs")]
    pub time_limit: Option<Duration>,
}

impl Default for PassConfig {
    fn default() -> Self {
        Self {
            samples_per_step: 64,
            max_expansions: 100,
            alpha: 0.5,
            temperature: 1.5,
            top_k: 6,
            seed: 0,
            time_limit: None,
        }
    }
}

impl PassConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.samples_per_step == 0 {
            return Err(SearchError::Config("samples per step must be at least 1".into()));
        }
        if self.max_expansions == 0 {
            return Err(SearchError::Config("max expansions must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SearchError::AlphaOutOfRange(self.alpha));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(SearchError::Config("temperature must be positive".into()));
        }
        Ok(())
    }
}

mod optional_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassStats {
    pub expansions: usize,
    pub generator_calls: usize,
    /// Largest number of candidates any single call returned.
    pub max_candidates_per_call: usize,
    pub max_children_per_expansion: usize,
    pub tactics_attempted: usize,
    pub tactics_valid: usize,
    pub tactics_invalid: usize,
    pub cycles_dropped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassOutcome {
    Solved,
    FrontierExhausted,
    BudgetExhausted,
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct PassResult {
    pub outcome: PassOutcome,
    pub script: Option<Vec<String>>,
    pub stats: PassStats,
    pub nodes: Vec<SearchNode>,
    pub seed: u64,
}

impl PassResult {
    pub fn solved(&self) -> bool {
        self.outcome == PassOutcome::Solved
    }
}

/// Reported sampling budget: `passes × samples per step`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingBudget {
    pub passes: usize,
    pub samples_per_step: usize,
}

impl fmt::Display for SamplingBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} × {}", self.passes, self.samples_per_step)
    }
}
