//! Tactic candidate generation.

pub mod policy;
pub mod prompt;
pub mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::ProofState;

pub use policy::{PolicyMode, ToyPolicy};
pub use prompt::{assemble_prompt, proof_prefix, PromptContext};
pub use remote::{CompletionClient, RemoteGenerator, GEN_URL_ENV};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TacticCandidate {
    pub tactic: String,
    pub logprob: f64,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("generation request failed: {0}")]
    Transport(String),
    #[error("generation endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed generation response: {0}")]
    Malformed(String),
    #[error("no generation endpoint configured (set {GEN_URL_ENV})")]
    NoEndpoint,
}

pub trait TacticGenerator: Sync {
    /// Up to `n` candidates for the first goal of `state`.
    fn generate(
        &self,
        state: &ProofState,
        ctx: &PromptContext,
        n: usize,
        temperature: f64,
        seed: u64,
    ) -> Result<Vec<TacticCandidate>, GenError>;
}
