//! Planted-token synthetic data: every premise owns one invented token, and
//! each training state mentions its positive premise's token among filler
//! words drawn from a vocabulary shared by all texts.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Premise, PremiseRetriever, RetrievalError, TrainPair};

const FILLER: &[&str] = &[
    "forall", "exists", "x", "y", "z", "n", "m", "add", "mul", "zero", "one", "le", "lt", "eq", "comm", "assoc",
    "group", "ring", "field", "nat", "int", "real", "succ", "pred", "map", "fun", "hom", "ker", "image", "sub",
    "finite", "card", "prime", "dvd", "mod", "pow", "sum", "prod", "list", "set",
];

const SYLLABLES: &[&str] =
    &["ka", "zo", "ri", "vex", "tul", "mar", "qui", "dro", "sel", "pha", "nor", "bex", "yl", "gor", "wen", "fy"];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub premises: Vec<Premise>,
    pub pairs: Vec<TrainPair>,
    /// Planted token of each premise, indexed like `premises`.
    pub tokens: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub pairs: usize,
    pub premises: usize,
    /// Filler words per state and per premise statement.
    pub state_filler: usize,
    pub premise_filler: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { pairs: 200, premises: 100, state_filler: 8, premise_filler: 6, seed: 42 }
    }
}

fn invented_token(rng: &mut ChaCha8Rng, taken: &[String]) -> String {
    loop {
        let parts = rng.random_range(3..=4);
        let token: String = (0..parts).map(|_| *SYLLABLES.choose(rng).expect("syllables")).collect();
        if !taken.contains(&token) && !FILLER.contains(&token.as_str()) {
            return token;
        }
    }
}

fn filler(rng: &mut ChaCha8Rng, count: usize) -> Vec<&'static str> {
    (0..count).map(|_| *FILLER.choose(rng).expect("filler")).collect()
}

pub fn planted_dataset(spec: &SyntheticSpec) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tokens: Vec<String> = Vec::with_capacity(spec.premises);
    for _ in 0..spec.premises {
        let t = invented_token(&mut rng, &tokens);
        tokens.push(t);
    }
    let premises = tokens
        .iter()
        .enumerate()
        .map(|(i, token)| {
            let words = filler(&mut rng, spec.premise_filler);
            Premise {
                id: i as u32,
                formal_name: format!("Synth.{token}"),
                informal_name: format!("synthetic fact {i}"),
                formal_statement: format!(
                    "{} {token} {}",
                    words[..words.len() / 2].join(" "),
                    words[words.len() / 2..].join(" ")
                ),
            }
        })
        .collect();
    let pairs = (0..spec.pairs)
        .map(|i| {
            // Every premise is used before any repeats.
            let positive = if i < spec.premises { i } else { rng.random_range(0..spec.premises) };
            let mut words: Vec<&str> = filler(&mut rng, spec.state_filler);
            let at = rng.random_range(0..=words.len());
            words.insert(at, &tokens[positive]);
            TrainPair { state: words.join(" "), positive: positive as u32 }
        })
        .collect();
    SyntheticDataset { premises, pairs, tokens }
}

/// Fraction of pairs whose positive appears in the top `k`.
pub fn recall_at_k(retriever: &dyn PremiseRetriever, pairs: &[TrainPair], k: usize) -> Result<f64, RetrievalError> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for pair in pairs {
        if retriever.retrieve(&pair.state, k)?.iter().any(|s| s.premise.id == pair.positive) {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}
