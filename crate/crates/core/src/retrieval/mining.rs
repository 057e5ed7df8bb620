use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::embedder::{Embedding, Role, ToyEmbedder};
use super::{Premise, RetrievalError, TrainPair, TrainTriplet};

/// Default 1-based rank window over non-positive passages.
pub const DEFAULT_WINDOW: (usize, usize) = (30, 100);

/// Passages other than `positive`, most similar first, ties by ascending id.
pub fn rank_negatives(query: &Embedding, passages: &[(u32, Embedding)], positive: u32) -> Vec<(u32, f64)> {
    let mut ranked: Vec<(u32, f64)> =
        passages.iter().filter(|(id, _)| *id != positive).map(|(id, e)| (*id, query.dot(e))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

/// Clips a 1-based window to the `passages − 1` available negatives.
pub fn clip_window(window: (usize, usize), passages: usize) -> (usize, usize) {
    let last = passages.saturating_sub(1);
    (window.0.min(last), window.1.min(last))
}

/// Draws one negative per pair uniformly from the clipped rank window.
pub fn mine_hard_negatives(
    embedder: &ToyEmbedder,
    pairs: &[TrainPair],
    premises: &[Premise],
    window: (usize, usize),
    seed: u64,
) -> Result<Vec<TrainTriplet>, RetrievalError> {
    if premises.len() < 2 {
        return Err(RetrievalError::Precondition("hard-negative mining needs at least two passages".into()));
    }
    if window.0 < 1 || window.0 > window.1 {
        return Err(RetrievalError::Precondition(format!("invalid rank window [{}, {}]", window.0, window.1)));
    }
    let passages: Vec<(u32, Embedding)> = premises
        .iter()
        .map(|p| Ok((p.id, embedder.embed(&p.passage_text(), Role::Passage)?)))
        .collect::<Result<_, RetrievalError>>()?;
    let (lo, hi) = clip_window(window, premises.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs
        .iter()
        .map(|pair| {
            if !passages.iter().any(|(id, _)| *id == pair.positive) {
                return Err(RetrievalError::UnknownId(pair.positive));
            }
            let query = embedder.embed(&pair.state, Role::Query)?;
            let ranked = rank_negatives(&query, &passages, pair.positive);
            let rank = rng.random_range(lo..=hi);
            Ok(TrainTriplet { state: pair.state.clone(), positive: pair.positive, negative: ranked[rank - 1].0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: u32) -> Vec<Premise> {
        (0..n)
            .map(|i| Premise {
                id: i,
                formal_name: format!("lemma_{i}"),
                informal_name: String::new(),
                formal_statement: format!("token{i} shared words {}", "x ".repeat(i as usize)),
            })
            .collect()
    }

    #[test]
    fn window_clipping() {
        assert_eq!(clip_window((30, 100), 10), (9, 9));
        assert_eq!(clip_window((2, 4), 5), (2, 4));
    }

    #[test]
    fn fixed_window_picks_the_ranked_passage() {
        let emb = ToyEmbedder::new(128, 16, 5);
        let ps = corpus(5);
        let pairs: Vec<TrainPair> =
            (0..5).map(|i| TrainPair { state: format!("token{i} goal"), positive: i }).collect();
        let triplets = mine_hard_negatives(&emb, &pairs, &ps, (2, 2), 9).unwrap();
        for (pair, t) in pairs.iter().zip(&triplets) {
            // Brute force: similarity of every passage, positive removed, sorted.
            let q = emb.embed(&pair.state, Role::Query).unwrap();
            let mut sims: Vec<(f64, u32)> = ps
                .iter()
                .filter(|p| p.id != pair.positive)
                .map(|p| {
                    let e = emb.embed(&p.passage_text(), Role::Passage).unwrap();
                    (q.0.iter().zip(&e.0).map(|(a, b)| a * b).sum(), p.id)
                })
                .collect();
            sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            assert_eq!(t.negative, sims[1].1);
        }
    }

    #[test]
    fn never_returns_the_positive() {
        let emb = ToyEmbedder::new(128, 16, 5);
        let ps = corpus(5);
        let pairs: Vec<TrainPair> = (0..5).map(|i| TrainPair { state: format!("token{i}"), positive: i }).collect();
        for seed in 0..20 {
            for t in mine_hard_negatives(&emb, &pairs, &ps, (2, 4), seed).unwrap() {
                assert_ne!(t.negative, t.positive);
            }
        }
    }

    #[test]
    fn preconditions() {
        let emb = ToyEmbedder::new(16, 4, 5);
        let pairs = vec![TrainPair { state: "a".into(), positive: 0 }];
        assert!(mine_hard_negatives(&emb, &pairs, &corpus(1), (1, 1), 0).is_err());
        assert!(mine_hard_negatives(&emb, &pairs, &corpus(3), (0, 1), 0).is_err());
        assert!(mine_hard_negatives(&emb, &pairs, &corpus(3), (3, 2), 0).is_err());
    }
}
