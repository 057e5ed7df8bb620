//! Retrieval-augmented stepwise theorem proving at desk scale.

pub mod artifact;
pub mod bundled;
pub mod config;
pub mod env;
pub mod eval;
pub mod generator;
pub mod herald;
pub mod iteration;
pub mod kernel;
pub mod pool;
pub mod retrieval;
pub mod search;
