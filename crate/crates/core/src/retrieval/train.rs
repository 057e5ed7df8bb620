//! Two-stage embedder training by minibatch gradient descent on the shared
//! projection matrix.
//!
//! Distances are Euclidean between unit-norm embeddings, so they lie in
//! `[0, 2]`. Batch objectives are divided by the number of queries in the batch
//! before the update; the logged epoch loss is the mean of those per-batch
//! values, each measured before its own update.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embedder::{Encoded, Role, ToyEmbedder};
use super::loss::{contrastive_grad, contrastive_loss, distance_grad, triplet_grad, triplet_loss};
use super::{Premise, RetrievalError, TrainPair, TrainTriplet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub batch_size: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl StageConfig {
    pub fn stage1() -> Self {
        Self { batch_size: 16, margin: 1.0, learning_rate: 0.5, epochs: 10, seed: 42 }
    }

    pub fn stage2() -> Self {
        Self { batch_size: 16, margin: 0.2, learning_rate: 0.2, epochs: 5, seed: 42 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

impl TrainLog {
    pub fn first(&self) -> Option<f64> {
        self.epoch_losses.first().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Objective value and its gradient with respect to the projection weights.
#[derive(Clone, Debug)]
pub struct Objective {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn passage_lookup(premises: &[Premise]) -> HashMap<u32, &Premise> {
    premises.iter().map(|p| (p.id, p)).collect()
}

fn passage<'a>(lookup: &HashMap<u32, &'a Premise>, id: u32) -> Result<&'a Premise, RetrievalError> {
    lookup.get(&id).copied().ok_or(RetrievalError::UnknownId(id))
}

/// In-batch contrastive objective: each state's own premise is the positive,
/// every other premise in the batch with a different id is a negative.
pub fn contrastive_objective(
    embedder: &ToyEmbedder,
    batch: &[(&str, &Premise)],
    margin: f64,
) -> Result<Objective, RetrievalError> {
    let queries: Vec<Encoded> = batch.iter().map(|(s, _)| embedder.encode(s, Role::Query)).collect::<Result<_, _>>()?;
    let passages: Vec<Encoded> =
        batch.iter().map(|(_, p)| embedder.encode(&p.passage_text(), Role::Passage)).collect::<Result<_, _>>()?;
    let dim = embedder.dim_out();
    let mut grad_q = vec![vec![0.0; dim]; batch.len()];
    let mut grad_p = vec![vec![0.0; dim]; batch.len()];
    let mut loss = 0.0;
    for (i, q) in queries.iter().enumerate() {
        for (j, p) in passages.iter().enumerate() {
            let similar = i == j;
            if !similar && batch[i].1.id == batch[j].1.id {
                continue;
            }
            let (qe, pe) = (&q.embedding.0, &p.embedding.0);
            let d = q.embedding.distance(&p.embedding);
            loss += contrastive_loss(d, similar, margin);
            let g = contrastive_grad(d, similar, margin);
            if g == 0.0 {
                continue;
            }
            for (k, dd) in distance_grad(qe, pe, d).into_iter().enumerate() {
                grad_q[i][k] += g * dd;
                grad_p[j][k] -= g * dd;
            }
        }
    }
    Ok(finish(embedder, loss, batch.len(), queries.iter().zip(&grad_q).chain(passages.iter().zip(&grad_p))))
}

/// Mean triplet objective over `(state, positive, negative)` triples.
pub fn triplet_objective(
    embedder: &ToyEmbedder,
    batch: &[(&str, &Premise, &Premise)],
    margin: f64,
) -> Result<Objective, RetrievalError> {
    let mut loss = 0.0;
    let mut encodings = Vec::with_capacity(batch.len() * 3);
    let mut grads = Vec::with_capacity(batch.len() * 3);
    for (state, pos, neg) in batch {
        let x = embedder.encode(state, Role::Query)?;
        let p = embedder.encode(&pos.passage_text(), Role::Passage)?;
        let n = embedder.encode(&neg.passage_text(), Role::Passage)?;
        let d_pos = x.embedding.distance(&p.embedding);
        let d_neg = x.embedding.distance(&n.embedding);
        loss += triplet_loss(d_pos, d_neg, margin);
        let (g_pos, g_neg) = triplet_grad(d_pos, d_neg, margin);
        let dp = distance_grad(&x.embedding.0, &p.embedding.0, d_pos);
        let dn = distance_grad(&x.embedding.0, &n.embedding.0, d_neg);
        let gx: Vec<f64> = dp.iter().zip(&dn).map(|(a, b)| g_pos * a + g_neg * b).collect();
        let gp: Vec<f64> = dp.iter().map(|a| -g_pos * a).collect();
        let gn: Vec<f64> = dn.iter().map(|b| -g_neg * b).collect();
        encodings.extend([x, p, n]);
        grads.extend([gx, gp, gn]);
    }
    Ok(finish(embedder, loss, batch.len(), encodings.iter().zip(&grads)))
}

fn finish<'a>(
    embedder: &ToyEmbedder,
    loss: f64,
    queries: usize,
    parts: impl Iterator<Item = (&'a Encoded, &'a Vec<f64>)>,
) -> Objective {
    let scale = 1.0 / queries as f64;
    let mut grad = vec![0.0; embedder.weights().len()];
    for (encoded, g) in parts {
        if g.iter().any(|x| *x != 0.0) {
            embedder.backprop(encoded, g, &mut grad);
        }
    }
    grad.iter_mut().for_each(|x| *x *= scale);
    Objective { loss: loss * scale, grad }
}

/// Largest relative error between the analytic gradient of `objective` and a
/// central difference with step `h`, over up to `samples` weight coordinates
/// that the objective actually touches.
pub fn gradient_check(
    embedder: &ToyEmbedder,
    samples: usize,
    h: f64,
    objective: impl Fn(&ToyEmbedder) -> Result<Objective, RetrievalError>,
) -> Result<f64, RetrievalError> {
    let analytic = objective(embedder)?.grad;
    let touched: Vec<usize> = (0..analytic.len()).filter(|&i| analytic[i].abs() > 1e-9).collect();
    let stride = (touched.len() / samples.max(1)).max(1);
    let mut worst: f64 = 0.0;
    let mut probe = embedder.clone();
    for &i in touched.iter().step_by(stride).take(samples) {
        let w = probe.weights()[i];
        probe.weights_mut()[i] = w + h;
        let up = objective(&probe)?.loss;
        probe.weights_mut()[i] = w - h;
        let down = objective(&probe)?.loss;
        probe.weights_mut()[i] = w;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

fn batches<T: Clone>(items: &[T], batch_size: usize, rng: &mut ChaCha8Rng, min_batch: usize) -> Vec<Vec<T>> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(rng);
    let mut out: Vec<Vec<T>> =
        order.chunks(batch_size).map(|c| c.iter().map(|&i| items[i].clone()).collect()).collect();
    // A trailing batch too small to have negatives joins the previous one.
    if out.len() > 1 && out.last().is_some_and(|b| b.len() < min_batch) {
        let tail = out.pop().unwrap();
        out.last_mut().unwrap().extend(tail);
    }
    out
}

fn descend(
    mut embedder: ToyEmbedder,
    config: &StageConfig,
    count: usize,
    min_batch: usize,
    mut objective: impl FnMut(&ToyEmbedder, &[usize]) -> Result<Objective, RetrievalError>,
) -> Result<(ToyEmbedder, TrainLog), RetrievalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let indices: Vec<usize> = (0..count).collect();
    let mut log = TrainLog::default();
    for epoch in 0..config.epochs {
        let mut total = 0.0;
        let epoch_batches = batches(&indices, config.batch_size, &mut rng, min_batch);
        for (b, batch) in epoch_batches.iter().enumerate() {
            let Objective { loss, grad } = objective(&embedder, batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(RetrievalError::NonFinite { epoch, batch: b, loss });
            }
            total += loss;
            for (w, g) in embedder.weights_mut().iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
        log.epoch_losses.push(total / epoch_batches.len() as f64);
    }
    Ok((embedder, log))
}

/// Stage one: contrastive training with in-batch negatives.
pub fn train_stage1(
    embedder: &ToyEmbedder,
    pairs: &[TrainPair],
    premises: &[Premise],
    config: &StageConfig,
) -> Result<(ToyEmbedder, TrainLog), RetrievalError> {
    if pairs.len() < 2 || config.batch_size < 2 {
        return Err(RetrievalError::Precondition(
            "in-batch negatives need at least two pairs and a batch size of at least two".into(),
        ));
    }
    let lookup = passage_lookup(premises);
    let resolved: Vec<(&str, &Premise)> = pairs
        .iter()
        .map(|p| Ok((p.state.as_str(), passage(&lookup, p.positive)?)))
        .collect::<Result<_, RetrievalError>>()?;
    descend(embedder.clone(), config, resolved.len(), 2, |emb, idx| {
        let batch: Vec<(&str, &Premise)> = idx.iter().map(|&i| resolved[i]).collect();
        contrastive_objective(emb, &batch, config.margin)
    })
}

/// Stage two: triplet training against mined hard negatives.
pub fn train_stage2(
    embedder: &ToyEmbedder,
    triplets: &[TrainTriplet],
    premises: &[Premise],
    config: &StageConfig,
) -> Result<(ToyEmbedder, TrainLog), RetrievalError> {
    if triplets.is_empty() || config.batch_size == 0 {
        return Err(RetrievalError::Precondition("stage two needs at least one triplet".into()));
    }
    let lookup = passage_lookup(premises);
    let resolved: Vec<(&str, &Premise, &Premise)> = triplets
        .iter()
        .map(|t| {
            if t.positive == t.negative {
                return Err(RetrievalError::Precondition(format!("triplet negative equals positive {}", t.positive)));
            }
            Ok((t.state.as_str(), passage(&lookup, t.positive)?, passage(&lookup, t.negative)?))
        })
        .collect::<Result<_, _>>()?;
    descend(embedder.clone(), config, resolved.len(), 1, |emb, idx| {
        let batch: Vec<(&str, &Premise, &Premise)> = idx.iter().map(|&i| resolved[i]).collect();
        triplet_objective(emb, &batch, config.margin)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn premise(id: u32, text: &str) -> Premise {
        Premise { id, formal_name: format!("thm{id}"), informal_name: String::new(), formal_statement: text.into() }
    }

    #[test]
    fn batch_of_one_is_rejected() {
        let emb = ToyEmbedder::new(64, 8, 1);
        let ps = vec![premise(0, "alpha")];
        let pairs = vec![TrainPair { state: "alpha".into(), positive: 0 }];
        assert!(matches!(
            train_stage1(&emb, &pairs, &ps, &StageConfig::stage1()),
            Err(RetrievalError::Precondition(_))
        ));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let emb = ToyEmbedder::new(64, 8, 1);
        let ps = vec![premise(0, "alpha"), premise(1, "beta")];
        let pairs =
            vec![TrainPair { state: "alpha".into(), positive: 0 }, TrainPair { state: "beta".into(), positive: 1 }];
        let cfg = StageConfig { epochs: 0, ..StageConfig::stage1() };
        let (out, log) = train_stage1(&emb, &pairs, &ps, &cfg).unwrap();
        assert_eq!(out, emb);
        assert!(log.epoch_losses.is_empty());
    }

    #[test]
    fn satisfied_triplets_leave_embedder_unchanged() {
        let emb = ToyEmbedder::new(64, 8, 1);
        let ps = vec![premise(0, "alpha beta"), premise(1, "gamma delta")];
        let x = emb.embed("alpha beta", Role::Query).unwrap();
        let p = emb.embed(&ps[0].passage_text(), Role::Passage).unwrap();
        let n = emb.embed(&ps[1].passage_text(), Role::Passage).unwrap();
        assert!(x.distance(&p) < x.distance(&n));
        let triplets = vec![TrainTriplet { state: "alpha beta".into(), positive: 0, negative: 1 }];
        let cfg = StageConfig { margin: 0.0, ..StageConfig::stage2() };
        let (out, log) = train_stage2(&emb, &triplets, &ps, &cfg).unwrap();
        assert_eq!(out, emb);
        assert!(log.epoch_losses.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn unknown_positive_is_an_error() {
        let emb = ToyEmbedder::new(64, 8, 1);
        let ps = vec![premise(0, "alpha")];
        let pairs =
            vec![TrainPair { state: "alpha".into(), positive: 0 }, TrainPair { state: "beta".into(), positive: 5 }];
        assert!(matches!(train_stage1(&emb, &pairs, &ps, &StageConfig::stage1()), Err(RetrievalError::UnknownId(5))));
    }

    #[test]
    fn trailing_singleton_joins_previous_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = batches(&[0, 1, 2, 3, 4], 2, &mut rng, 2);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 3]);
    }

    fn small_corpus() -> (Vec<Premise>, Vec<TrainPair>) {
        let words = ["alpha beta", "gamma delta", "eps zeta", "eta theta"];
        let ps: Vec<Premise> = words.iter().enumerate().map(|(i, w)| premise(i as u32, w)).collect();
        let pairs = words
            .iter()
            .enumerate()
            .map(|(i, w)| TrainPair { state: format!("goal {w} extra"), positive: i as u32 })
            .collect();
        (ps, pairs)
    }

    #[test]
    fn contrastive_gradient_matches_differences() {
        let emb = ToyEmbedder::new(64, 8, 3);
        let (ps, pairs) = small_corpus();
        let batch: Vec<(&str, &Premise)> = pairs.iter().map(|p| (p.state.as_str(), &ps[p.positive as usize])).collect();
        let err = gradient_check(&emb, 40, 1e-6, |e| contrastive_objective(e, &batch, 1.0)).unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn triplet_gradient_matches_differences() {
        let emb = ToyEmbedder::new(64, 8, 3);
        let (ps, pairs) = small_corpus();
        let batch: Vec<(&str, &Premise, &Premise)> = pairs
            .iter()
            .map(|p| (p.state.as_str(), &ps[p.positive as usize], &ps[(p.positive as usize + 1) % ps.len()]))
            .collect();
        let err = gradient_check(&emb, 40, 1e-6, |e| triplet_objective(e, &batch, 2.0)).unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }
}
