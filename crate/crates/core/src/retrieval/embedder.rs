use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::artifact::ArtifactMeta;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Query,
    Passage,
}

impl Role {
    fn prefix(self) -> &'static str {
        match self {
            Role::Query => "query",
            Role::Passage => "passage",
        }
    }
}

/// Unit-norm embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase().split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_string).collect()
}

fn fnv1a(token: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in token.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Sparse hashed bag of tokens: `(bucket, count)` sorted by bucket.
pub type TokenCounts = Vec<(usize, f64)>;

/// Forward-pass intermediates kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub counts: TokenCounts,
    pub raw_norm: f64,
    pub embedding: Embedding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyEmbedder {
    dim_hash: usize,
    dim_out: usize,
    pub max_query_tokens: usize,
    pub max_passage_tokens: usize,
    /// Row-major `dim_hash × dim_out` projection.
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    dim_hash: usize,
    dim_out: usize,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<ArtifactMeta>,
    header: CheckpointHeader,
    max_query_tokens: usize,
    max_passage_tokens: usize,
    weights: Vec<f64>,
}

impl ToyEmbedder {
    pub const DEFAULT_DIM_HASH: usize = 1024;
    pub const DEFAULT_DIM_OUT: usize = 64;

    pub fn new(dim_hash: usize, dim_out: usize, seed: u64) -> Self {
        assert!(dim_hash > 0 && dim_out > 0, "embedder dimensions must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (dim_out as f64).sqrt()).expect("valid normal");
        let weights = (0..dim_hash * dim_out).map(|_| normal.sample(&mut rng)).collect();
        Self { dim_hash, dim_out, max_query_tokens: 128, max_passage_tokens: 256, weights }
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::new(Self::DEFAULT_DIM_HASH, Self::DEFAULT_DIM_OUT, seed)
    }

    pub fn dim_hash(&self) -> usize {
        self.dim_hash
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Role token followed by the truncated content tokens, hashed and counted.
    pub fn token_counts(&self, text: &str, role: Role) -> Result<TokenCounts, RetrievalError> {
        let limit = match role {
            Role::Query => self.max_query_tokens,
            Role::Passage => self.max_passage_tokens,
        };
        let tokens: Vec<String> = tokenize(text).into_iter().take(limit).collect();
        if tokens.is_empty() {
            return Err(RetrievalError::ZeroTokens);
        }
        let mut buckets: Vec<usize> = std::iter::once(role.prefix())
            .chain(tokens.iter().map(String::as_str))
            .map(|t| (fnv1a(t) % self.dim_hash as u64) as usize)
            .collect();
        buckets.sort_unstable();
        let mut counts: TokenCounts = Vec::new();
        for b in buckets {
            match counts.last_mut() {
                Some((last, c)) if *last == b => *c += 1.0,
                _ => counts.push((b, 1.0)),
            }
        }
        Ok(counts)
    }

    pub fn encode_counts(&self, counts: TokenCounts) -> Result<Encoded, RetrievalError> {
        let mut raw = vec![0.0; self.dim_out];
        for &(bucket, count) in &counts {
            let row = &self.weights[bucket * self.dim_out..(bucket + 1) * self.dim_out];
            for (acc, w) in raw.iter_mut().zip(row) {
                *acc += count * w;
            }
        }
        let raw_norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if raw_norm < 1e-12 {
            return Err(RetrievalError::ZeroTokens);
        }
        raw.iter_mut().for_each(|x| *x /= raw_norm);
        Ok(Encoded { counts, raw_norm, embedding: Embedding(raw) })
    }

    pub fn encode(&self, text: &str, role: Role) -> Result<Encoded, RetrievalError> {
        self.encode_counts(self.token_counts(text, role)?)
    }

    pub fn embed(&self, text: &str, role: Role) -> Result<Embedding, RetrievalError> {
        Ok(self.encode(text, role)?.embedding)
    }

    /// Accumulates `∂loss/∂weights` given `∂loss/∂embedding` for one encoding.
    pub fn backprop(&self, encoded: &Encoded, grad_embedding: &[f64], grad_weights: &mut [f64]) {
        let e = &encoded.embedding.0;
        let along: f64 = e.iter().zip(grad_embedding).map(|(a, b)| a * b).sum();
        let grad_raw: Vec<f64> =
            e.iter().zip(grad_embedding).map(|(ei, gi)| (gi - ei * along) / encoded.raw_norm).collect();
        for &(bucket, count) in &encoded.counts {
            let row = &mut grad_weights[bucket * self.dim_out..(bucket + 1) * self.dim_out];
            for (g, gr) in row.iter_mut().zip(&grad_raw) {
                *g += count * gr;
            }
        }
    }

    pub fn save(&self, path: &Path, meta: Option<&ArtifactMeta>) -> Result<(), RetrievalError> {
        let checkpoint = Checkpoint {
            meta: meta.cloned(),
            header: CheckpointHeader { dim_hash: self.dim_hash, dim_out: self.dim_out, version: CHECKPOINT_VERSION },
            max_query_tokens: self.max_query_tokens,
            max_passage_tokens: self.max_passage_tokens,
            weights: self.weights.clone(),
        };
        let text = serde_json::to_string(&checkpoint).map_err(|e| RetrievalError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let text = std::fs::read_to_string(path)?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| RetrievalError::Checkpoint(e.to_string()))?;
        if c.header.version != CHECKPOINT_VERSION {
            return Err(RetrievalError::Checkpoint(format!("unsupported version {}", c.header.version)));
        }
        if c.weights.len() != c.header.dim_hash * c.header.dim_out {
            return Err(RetrievalError::Checkpoint("weight count does not match header dimensions".into()));
        }
        Ok(Self {
            dim_hash: c.header.dim_hash,
            dim_out: c.header.dim_out,
            max_query_tokens: c.max_query_tokens,
            max_passage_tokens: c.max_passage_tokens,
            weights: c.weights,
        })
    }
}
