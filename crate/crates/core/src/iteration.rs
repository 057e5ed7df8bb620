//! Expert iteration: prove, harvest state-tactic pairs from the proofs found,
//! merge them into a growing dataset, and re-estimate the policy.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{digest_of, read_jsonl, write_jsonl, ArtifactError, ArtifactMeta};
use crate::env::{EnvError, EnvironmentFactory};
use crate::generator::{proof_prefix, ToyPolicy};
use crate::kernel::{ApplyResult, ProofState};
use crate::retrieval::{PremiseRetriever, RetrievalError};
use crate::search::{NodeStatus, PassConfig, PassResult, ProofTask, Prover, SearchError};

#[derive(Debug, Error)]
pub enum IterationError {
    #[error("pass did not find a proof")]
    Unsolved,
    #[error("replay of {statement_id} failed at step {step}: {message}")]
    Replay { statement_id: String, step: usize, message: String },
    #[error("iteration needs at least one round")]
    NoRounds,
    #[error("statement pool is empty")]
    EmptyPool,
    #[error("round {round} failed on {statement_id}: {source}")]
    Round { round: usize, statement_id: String, source: SearchError },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("policy snapshot: {0}")]
    Policy(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPremise {
    pub id: u32,
    pub formal_name: String,
    pub formal_statement: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTacticPair {
    pub nl_description: Option<String>,
    pub prefix: Vec<String>,
    pub state: String,
    pub premises: Vec<PairPremise>,
    pub tactic: String,
    pub statement_id: String,
    pub round: usize,
}

impl StateTacticPair {
    /// Text the policy would see as the formal proof so far.
    pub fn proof_context(&self, statement: &str) -> String {
        proof_prefix(statement, self.nl_description.as_deref(), &self.prefix)
    }
}

fn replay_err(task: &ProofTask, step: usize, message: impl Into<String>) -> IterationError {
    IterationError::Replay { statement_id: task.id.clone(), step, message: message.into() }
}

/// Replays `tactics` from the statement's initial state in a fresh session and
/// returns every state visited, initial state first.
pub fn replay_states(
    task: &ProofTask,
    tactics: &[String],
    envs: &dyn EnvironmentFactory,
) -> Result<Vec<ProofState>, IterationError> {
    let mut env = envs.open()?;
    let mut state = match env.init(&task.statement)? {
        ApplyResult::Error { message, .. } => return Err(replay_err(task, 0, message)),
        ApplyResult::NewState(s) | ApplyResult::Complete(s) => s,
    };
    let mut states = vec![state.clone()];
    for (i, tactic) in tactics.iter().enumerate() {
        state = match env.apply(&state, tactic)? {
            ApplyResult::Error { class, message } => {
                return Err(replay_err(task, i + 1, format!("{tactic}: {class}: {message}")))
            }
            ApplyResult::NewState(s) | ApplyResult::Complete(s) => s,
        };
        states.push(state.clone());
    }
    Ok(states)
}

/// True iff the pair's prefix replays to the recorded state and its tactic
/// then succeeds.
pub fn pair_replays(pair: &StateTacticPair, task: &ProofTask, envs: &dyn EnvironmentFactory) -> bool {
    let mut tactics = pair.prefix.clone();
    tactics.push(pair.tactic.clone());
    match replay_states(task, &tactics, envs) {
        Ok(states) => states[pair.prefix.len()].render() == pair.state,
        Err(_) => false,
    }
}

/// One pair per proof step, root to leaf. The proof is replayed in a fresh
/// environment and must reproduce the tree's states; premises come from the
/// retriever as it is now.
pub fn extract_pairs(
    result: &PassResult,
    task: &ProofTask,
    envs: &dyn EnvironmentFactory,
    retriever: Option<&dyn PremiseRetriever>,
    k: usize,
    round: usize,
) -> Result<Vec<StateTacticPair>, IterationError> {
    let Some(leaf) = result.nodes.iter().find(|n| n.status == NodeStatus::TerminalComplete) else {
        return Err(IterationError::Unsolved);
    };
    if !result.solved() {
        return Err(IterationError::Unsolved);
    }
    let mut path = vec![leaf];
    while let Some(parent) = path.last().and_then(|n| n.parent) {
        path.push(&result.nodes[parent]);
    }
    path.reverse();
    let tactics: Vec<String> = path[1..].iter().map(|n| n.tactic.clone().unwrap_or_default()).collect();
    let states = replay_states(task, &tactics, envs)?;
    if !states.last().is_some_and(ProofState::is_complete) {
        return Err(replay_err(task, tactics.len(), "replayed script leaves goals open"));
    }
    let mut pairs = Vec::with_capacity(tactics.len());
    for (i, tactic) in tactics.iter().enumerate() {
        let state = states[i].render();
        if state != path[i].state.render() {
            return Err(replay_err(task, i, "replayed state differs from the search tree"));
        }
        let premises = match retriever {
            Some(r) if k > 0 => r
                .retrieve(&state, k)?
                .into_iter()
                .map(|s| PairPremise {
                    id: s.premise.id,
                    formal_name: s.premise.formal_name,
                    formal_statement: s.premise.formal_statement,
                })
                .collect(),
            _ => Vec::new(),
        };
        pairs.push(StateTacticPair {
            nl_description: task.nl.clone(),
            prefix: tactics[..i].to_vec(),
            state,
            premises,
            tactic: tactic.clone(),
            statement_id: task.id.clone(),
            round,
        });
    }
    Ok(pairs)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    pub existing: usize,
    pub added: usize,
    pub duplicates: usize,
    /// `(line, message)` for lines skipped in permissive mode.
    pub skipped: Vec<(usize, String)>,
}

/// Existing pairs first, then new pairs whose `(state, tactic)` is unseen.
pub fn merge_pairs(existing: Vec<StateTacticPair>, new: Vec<StateTacticPair>) -> (Vec<StateTacticPair>, MergeStats) {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut stats = MergeStats::default();
    let mut merged = Vec::with_capacity(existing.len() + new.len());
    for pair in existing {
        if seen.insert((pair.state.clone(), pair.tactic.clone())) {
            merged.push(pair);
        }
    }
    stats.existing = merged.len();
    for pair in new {
        if seen.insert((pair.state.clone(), pair.tactic.clone())) {
            merged.push(pair);
            stats.added += 1;
        } else {
            stats.duplicates += 1;
        }
    }
    (merged, stats)
}

/// Merges `new` into the pair file at `path` (missing file = empty) and
/// rewrites it.
pub fn merge_dataset(
    path: &Path,
    new: Vec<StateTacticPair>,
    meta: &ArtifactMeta,
    permissive: bool,
) -> Result<(Vec<StateTacticPair>, MergeStats), IterationError> {
    let (existing, skipped) = if path.exists() {
        let read = read_jsonl::<StateTacticPair>(path, permissive)?;
        (read.records, read.skipped)
    } else {
        (Vec::new(), Vec::new())
    };
    let (merged, mut stats) = merge_pairs(existing, new);
    stats.skipped = skipped;
    write_jsonl(path, Some(meta), &merged)?;
    Ok((merged, stats))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub rounds: usize,
    /// Passes per statement per round.
    pub passes: usize,
    pub pass: PassConfig,
    /// Re-attempt statements solved in earlier rounds.
    pub resolve_solved: bool,
    pub jobs: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self { rounds: 3, passes: 1, pass: PassConfig::default(), resolve_solved: false, jobs: 1 }
    }
}

pub fn round_seed(master: u64, round: usize) -> u64 {
    master ^ ((round as u64) << 16)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRound {
    pub round: usize,
    pub pool_digest: String,
    pub attempted: usize,
    /// Solved in this round.
    pub solved_ids: Vec<String>,
    pub cumulative_solved: usize,
    pub new_pairs: usize,
    pub dataset_size: usize,
    pub dataset_digest: String,
    pub policy_digest: String,
    /// Statements the environment refused to start.
    pub rejected_ids: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub rounds: Vec<IterationRound>,
    pub dataset: Vec<StateTacticPair>,
    pub policy: ToyPolicy,
}

impl IterationOutcome {
    pub fn cumulative_solved(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.cumulative_solved).collect()
    }
}

/// Where round artifacts are written after every completed round.
#[derive(Clone, Debug)]
pub struct IterationOutputs {
    pub dir: PathBuf,
    pub meta: ArtifactMeta,
}

impl IterationOutputs {
    pub fn pairs_path(&self) -> PathBuf {
        self.dir.join("pairs.jsonl")
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.dir.join("rounds.jsonl")
    }

    pub fn policy_path(&self, round: usize) -> PathBuf {
        self.dir.join(format!("policy-round{round}.json"))
    }

    fn persist(
        &self,
        rounds: &[IterationRound],
        dataset: &[StateTacticPair],
        policy: &ToyPolicy,
    ) -> Result<(), IterationError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| ArtifactError::Io { path: self.dir.display().to_string(), source: e })?;
        write_jsonl(&self.pairs_path(), Some(&self.meta), dataset)?;
        write_jsonl(&self.ledger_path(), Some(&self.meta), rounds)?;
        let round = rounds.last().map_or(0, |r| r.round);
        let path = self.policy_path(round);
        let body = serde_json::json!({ "meta": self.meta, "policy": policy });
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&body).map_err(|e| IterationError::Policy(e.to_string()))? + "\n",
        )
        .map_err(|e| ArtifactError::Io { path: path.display().to_string(), source: e })?;
        Ok(())
    }
}

/// `None` when the environment rejected the statement; otherwise solved flag and harvested pairs.
type Attempt = Option<(bool, Vec<StateTacticPair>)>;

fn dataset_tactics(dataset: &[StateTacticPair]) -> impl Iterator<Item = &str> {
    dataset.iter().map(|p| p.tactic.as_str())
}

/// Runs `config.rounds` rounds over `pool`. Rounds are numbered from 1; the
/// policy for round r + 1 is re-estimated from every pair harvested so far.
pub fn run_iteration(
    pool: &[ProofTask],
    config: &IterationConfig,
    initial: &ToyPolicy,
    envs: &dyn EnvironmentFactory,
    retriever: Option<&dyn PremiseRetriever>,
    outputs: Option<&IterationOutputs>,
) -> Result<IterationOutcome, IterationError> {
    if config.rounds == 0 {
        return Err(IterationError::NoRounds);
    }
    if pool.is_empty() {
        return Err(IterationError::EmptyPool);
    }
    config.pass.validate().map_err(|source| IterationError::Round { round: 0, statement_id: String::new(), source })?;
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| IterationError::Pool(e.to_string()))?;
    let pool_digest = digest_of(&pool);
    let mut policy = initial.clone();
    let mut dataset: Vec<StateTacticPair> = Vec::new();
    let mut solved: BTreeSet<String> = BTreeSet::new();
    let mut rounds = Vec::new();

    for round in 1..=config.rounds {
        let pass = PassConfig { seed: round_seed(config.pass.seed, round), ..config.pass.clone() };
        let todo: Vec<&ProofTask> = pool.iter().filter(|t| config.resolve_solved || !solved.contains(&t.id)).collect();
        let prover = Prover { generator: &policy, environments: envs, retriever };
        let attempts: Vec<Result<Attempt, IterationError>> = threads.install(|| {
            todo.par_iter()
                .map(|task| {
                    let result = match prover.run_prove(task, config.passes, &pass) {
                        Ok(r) => r,
                        Err(SearchError::Init { message, .. }) => {
                            log::warn!("{}: statement rejected: {message}", task.id);
                            return Ok(None);
                        }
                        Err(source) => {
                            return Err(IterationError::Round { round, statement_id: task.id.clone(), source })
                        }
                    };
                    match result.passes.iter().find(|p| p.solved()) {
                        Some(p) => extract_pairs(p, task, envs, retriever, pass.top_k, round).map(|v| Some((true, v))),
                        None => Ok(Some((false, Vec::new()))),
                    }
                })
                .collect()
        });

        let mut solved_ids = Vec::new();
        let mut rejected_ids = Vec::new();
        let mut harvested = Vec::new();
        for (task, attempt) in todo.iter().zip(attempts) {
            match attempt? {
                None => rejected_ids.push(task.id.clone()),
                Some((true, pairs)) => {
                    solved_ids.push(task.id.clone());
                    harvested.extend(pairs);
                }
                Some((false, _)) => {}
            }
        }
        solved.extend(solved_ids.iter().cloned());
        let (merged, stats) = merge_pairs(std::mem::take(&mut dataset), harvested);
        dataset = merged;
        policy = initial.updated(dataset_tactics(&dataset));
        rounds.push(IterationRound {
            round,
            pool_digest: pool_digest.clone(),
            attempted: todo.len(),
            solved_ids,
            cumulative_solved: solved.len(),
            new_pairs: stats.added,
            dataset_size: dataset.len(),
            dataset_digest: digest_of(&dataset),
            policy_digest: digest_of(&policy),
            rejected_ids,
        });
        if let Some(out) = outputs {
            out.persist(&rounds, &dataset, &policy)?;
        }
    }
    Ok(IterationOutcome { rounds, dataset, policy })
}

/// Template counts of a dataset, for reporting.
pub fn template_histogram(dataset: &[StateTacticPair]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in dataset_tactics(dataset) {
        if let Some(template) = crate::kernel::tactic::template_of(t) {
            *counts.entry(template.to_string()).or_default() += 1;
        }
    }
    counts
}
