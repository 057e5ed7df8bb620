//! Shared inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stepprove::retrieval::Premise;

/// `size` premises with random filler statements.
pub fn random_premises(size: usize, seed: u64) -> Vec<Premise> {
    const WORDS: &[&str] = &["add", "mul", "comm", "assoc", "zero", "one", "le", "lt", "ring", "group", "nat", "prime"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size as u32)
        .map(|id| {
            let words: Vec<&str> = (0..8).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            Premise {
                id,
                formal_name: format!("bench_{id}"),
                informal_name: String::new(),
                formal_statement: words.join(" "),
            }
        })
        .collect()
}
