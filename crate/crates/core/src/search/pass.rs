use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    score_node, Frontier, NodeId, NodeStatus, PassConfig, PassOutcome, PassResult, PassStats, SamplingBudget,
    SearchError, SearchNode,
};
use crate::env::{Environment, EnvironmentFactory};
use crate::generator::{proof_prefix, PromptContext, TacticCandidate, TacticGenerator};
use crate::kernel::{ApplyResult, ProofState};
use crate::retrieval::PremiseRetriever;

/// A statement to prove, passed verbatim to the environment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTask {
    pub id: String,
    pub statement: String,
    #[serde(default)]
    pub nl: Option<String>,
}

impl ProofTask {
    pub fn new(id: impl Into<String>, statement: impl Into<String>) -> Self {
        Self { id: id.into(), statement: statement.into(), nl: None }
    }
}

/// Seed of pass `index` under master seed `master`.
pub fn pass_seed(master: u64, index: usize) -> u64 {
    master ^ index as u64
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Result of up to M independent passes, stopping at the first success.
#[derive(Clone, Debug)]
pub struct ProveResult {
    pub solved: bool,
    pub script: Option<Vec<String>>,
    pub passes: Vec<PassResult>,
    pub budget: SamplingBudget,
}

impl ProveResult {
    pub fn total_generator_calls(&self) -> usize {
        self.passes.iter().map(|p| p.stats.generator_calls).sum()
    }

    pub fn total_expansions(&self) -> usize {
        self.passes.iter().map(|p| p.stats.expansions).sum()
    }

    pub fn timed_out(&self) -> bool {
        self.passes.last().is_some_and(|p| p.outcome == PassOutcome::TimedOut)
    }
}

/// Generator, environment sessions, and optional retrieval wired together.
#[derive(Clone, Copy)]
pub struct Prover<'a> {
    pub generator: &'a dyn TacticGenerator,
    pub environments: &'a dyn EnvironmentFactory,
    pub retriever: Option<&'a dyn PremiseRetriever>,
}

struct PassRun<'p> {
    prover: &'p Prover<'p>,
    task: &'p ProofTask,
    config: &'p PassConfig,
    env: Box<dyn Environment>,
    nodes: Vec<SearchNode>,
    frontier: Frontier,
    stats: PassStats,
}

impl PassRun<'_> {
    fn path_tactics(&self, mut id: NodeId) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(t) = &self.nodes[id].tactic {
            out.push(t.clone());
            id = self.nodes[id].parent.expect("non-root node has a parent");
        }
        out.reverse();
        out
    }

    fn on_path(&self, mut id: NodeId, state: &ProofState) -> bool {
        loop {
            let node = &self.nodes[id];
            if node.state.goals == state.goals {
                return true;
            }
            match node.parent {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    fn context(&self, id: NodeId) -> Result<PromptContext, SearchError> {
        let state = self.nodes[id].state.render();
        let premises = match self.prover.retriever {
            Some(r) if self.config.top_k > 0 => {
                r.retrieve(&state, self.config.top_k)?.into_iter().map(|s| s.premise).collect()
            }
            _ => Vec::new(),
        };
        Ok(PromptContext {
            nl_description: self.task.nl.clone(),
            proof_prefix: proof_prefix(&self.task.statement, self.task.nl.as_deref(), &self.path_tactics(id)),
            state,
            premises,
        })
    }

    /// Expands `id`; returns the id of a complete child if one was produced.
    fn expand(&mut self, id: NodeId, expansion: usize) -> Result<Option<NodeId>, SearchError> {
        let ctx = self.context(id)?;
        let call_seed = splitmix64(self.config.seed ^ splitmix64(self.stats.generator_calls as u64));
        let state = self.nodes[id].state.clone();
        let mut candidates = self.prover.generator.generate(
            &state,
            &ctx,
            self.config.samples_per_step,
            self.config.temperature,
            call_seed,
        )?;
        self.stats.generator_calls += 1;
        self.stats.expansions += 1;
        self.stats.max_candidates_per_call = self.stats.max_candidates_per_call.max(candidates.len());
        candidates.truncate(self.config.samples_per_step);

        self.nodes[id].expanded_at = Some(expansion);
        let mut children = 0;
        let mut complete = None;
        for TacticCandidate { tactic, logprob } in dedupe(candidates) {
            self.stats.tactics_attempted += 1;
            let result = self.env.apply(&state, &tactic)?;
            let child_state = match result {
                ApplyResult::Error { .. } => {
                    self.stats.tactics_invalid += 1;
                    continue;
                }
                ApplyResult::NewState(s) | ApplyResult::Complete(s) => s,
            };
            self.stats.tactics_valid += 1;
            if self.on_path(id, &child_state) {
                self.stats.cycles_dropped += 1;
                continue;
            }
            let parent = &self.nodes[id];
            let depth = parent.depth + 1;
            let cumulative = parent.cumulative + logprob;
            let score = score_node(cumulative, depth, self.config.alpha)?;
            let is_complete = child_state.is_complete();
            let child_id = self.nodes.len();
            self.nodes.push(SearchNode {
                id: child_id,
                parent: Some(id),
                state: child_state,
                tactic: Some(tactic),
                step_logprob: logprob,
                cumulative,
                depth,
                score: Some(score),
                status: if is_complete { NodeStatus::TerminalComplete } else { NodeStatus::Open },
                born: Some(expansion),
                expanded_at: None,
            });
            children += 1;
            if is_complete {
                complete = Some(child_id);
                break;
            }
            self.frontier.push(child_id, score);
        }
        self.stats.max_children_per_expansion = self.stats.max_children_per_expansion.max(children);
        self.nodes[id].status = if children == 0 { NodeStatus::Dead } else { NodeStatus::Expanded };
        Ok(complete)
    }
}

/// Collapses identical tactic strings, keeping the highest log-probability and
/// the position of the first occurrence. Empty candidates are dropped.
fn dedupe(candidates: Vec<TacticCandidate>) -> Vec<TacticCandidate> {
    let mut out: Vec<TacticCandidate> = Vec::with_capacity(candidates.len());
    for mut c in candidates {
        c.tactic = c.tactic.trim().to_string();
        if c.tactic.is_empty() {
            continue;
        }
        c.logprob = c.logprob.min(0.0);
        match out.iter_mut().find(|o| o.tactic == c.tactic) {
            Some(existing) => existing.logprob = existing.logprob.max(c.logprob),
            None => out.push(c),
        }
    }
    out
}

impl<'a> Prover<'a> {
    pub fn new(generator: &'a dyn TacticGenerator, environments: &'a dyn EnvironmentFactory) -> Self {
        Self { generator, environments, retriever: None }
    }

    pub fn with_retriever(mut self, retriever: &'a dyn PremiseRetriever) -> Self {
        self.retriever = Some(retriever);
        self
    }

    /// One best-first pass with its own environment session.
    pub fn run_pass(&self, task: &ProofTask, config: &PassConfig) -> Result<PassResult, SearchError> {
        config.validate()?;
        let started = Instant::now();
        let mut env = self.environments.open()?;
        let root_state = match env.init(&task.statement)? {
            ApplyResult::Error { class, message } => return Err(SearchError::Init { class, message }),
            ApplyResult::NewState(s) | ApplyResult::Complete(s) => s,
        };
        let root_complete = root_state.is_complete();
        let mut run = PassRun {
            prover: self,
            task,
            config,
            env,
            nodes: vec![SearchNode {
                id: 0,
                parent: None,
                state: root_state,
                tactic: None,
                step_logprob: 0.0,
                cumulative: 0.0,
                depth: 0,
                score: None,
                status: if root_complete { NodeStatus::TerminalComplete } else { NodeStatus::Open },
                born: None,
                expanded_at: None,
            }],
            frontier: Frontier::new(),
            stats: PassStats::default(),
        };

        let mut solved = if root_complete { Some(0) } else { run.expand(0, 0)? };
        let mut outcome = PassOutcome::Solved;
        while solved.is_none() {
            if run.stats.expansions >= config.max_expansions {
                outcome = PassOutcome::BudgetExhausted;
                break;
            }
            if config.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
                outcome = PassOutcome::TimedOut;
                break;
            }
            let Some((best, _)) = run.frontier.select_best() else {
                outcome = PassOutcome::FrontierExhausted;
                break;
            };
            let expansion = run.stats.expansions;
            solved = run.expand(best, expansion)?;
        }
        let script = solved.map(|leaf| run.path_tactics(leaf));
        Ok(PassResult { outcome, script, stats: run.stats, nodes: run.nodes, seed: config.seed })
    }

    /// Up to `passes` passes with seeds `master ⊕ i`, stopping at the first proof.
    pub fn run_prove(&self, task: &ProofTask, passes: usize, config: &PassConfig) -> Result<ProveResult, SearchError> {
        self.run_prove_until(task, passes, config, None)
    }

    /// As [`Prover::run_prove`], but no pass runs past `deadline`; a pass cut
    /// short ends the attempt with outcome `TimedOut`.
    pub fn run_prove_until(
        &self,
        task: &ProofTask,
        passes: usize,
        config: &PassConfig,
        deadline: Option<Instant>,
    ) -> Result<ProveResult, SearchError> {
        if passes == 0 {
            return Err(SearchError::Config("at least one pass is required".into()));
        }
        let mut results = Vec::new();
        let mut script = None;
        for i in 0..passes {
            let mut pass_config = PassConfig { seed: pass_seed(config.seed, i), ..config.clone() };
            if let Some(deadline) = deadline {
                let remaining = deadline.saturating_duration_since(Instant::now());
                pass_config.time_limit = Some(config.time_limit.map_or(remaining, |t| t.min(remaining)));
            }
            let result = self.run_pass(task, &pass_config)?;
            let done = result.solved();
            let timed_out = result.outcome == PassOutcome::TimedOut;
            if done {
                script = result.script.clone();
            }
            results.push(result);
            if done || timed_out {
                break;
            }
        }
        Ok(ProveResult {
            solved: script.is_some(),
            script,
            passes: results,
            budget: SamplingBudget { passes, samples_per_step: config.samples_per_step },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::KernelFactory;
    use crate::generator::{GenError, PolicyMode, ToyPolicy};

    /// Returns a fixed candidate list for every state.
    struct Fixed(Vec<(&'static str, f64)>);

    impl TacticGenerator for Fixed {
        fn generate(
            &self,
            _: &ProofState,
            _: &PromptContext,
            _: usize,
            _: f64,
            _: u64,
        ) -> Result<Vec<TacticCandidate>, GenError> {
            Ok(self.0.iter().map(|(t, lp)| TacticCandidate { tactic: t.to_string(), logprob: *lp }).collect())
        }
    }

    struct Failing;

    impl TacticGenerator for Failing {
        fn generate(
            &self,
            _: &ProofState,
            _: &PromptContext,
            _: usize,
            _: f64,
            _: u64,
        ) -> Result<Vec<TacticCandidate>, GenError> {
            Err(GenError::Transport("offline".into()))
        }
    }

    fn cfg(e: usize) -> PassConfig {
        PassConfig { max_expansions: e, ..PassConfig::default() }
    }

    #[test]
    fn invalid_candidates_are_dropped() {
        let gen = Fixed(vec![("intro h", -0.1), ("split", -0.3)]);
        let prover = Prover::new(&gen, &KernelFactory);
        let r = prover.run_pass(&ProofTask::new("t", "A -> A"), &cfg(1)).unwrap();
        assert_eq!(r.nodes.len(), 2);
        assert_eq!(r.nodes[1].tactic.as_deref(), Some("intro h"));
        assert_eq!(r.stats.tactics_invalid, 1);
        assert_eq!(r.nodes[0].status, NodeStatus::Expanded);
    }

    #[test]
    fn empty_candidates_mark_node_dead() {
        let gen = Fixed(vec![]);
        let prover = Prover::new(&gen, &KernelFactory);
        let r = prover.run_pass(&ProofTask::new("t", "A -> A"), &cfg(5)).unwrap();
        assert_eq!(r.nodes.len(), 1);
        assert_eq!(r.nodes[0].status, NodeStatus::Dead);
        assert_eq!(r.outcome, PassOutcome::FrontierExhausted);
    }

    #[test]
    fn duplicates_keep_max_logprob() {
        let gen = Fixed(vec![("intro h", -0.2), ("intro h", -0.1)]);
        let prover = Prover::new(&gen, &KernelFactory);
        let r = prover.run_pass(&ProofTask::new("t", "A -> A"), &cfg(1)).unwrap();
        assert_eq!(r.nodes.len(), 2);
        assert_eq!(r.nodes[1].step_logprob, -0.1);
        assert_eq!(r.stats.tactics_attempted, 1);
    }

    #[test]
    fn solves_identity() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        let r = prover.run_pass(&ProofTask::new("t", "A -> A"), &cfg(10)).unwrap();
        assert!(r.solved());
        assert_eq!(r.script.unwrap(), vec!["intro h", "exact h"]);
    }

    #[test]
    fn falsity_exhausts_frontier() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        let r = prover.run_pass(&ProofTask::new("t", "⊥"), &cfg(50)).unwrap();
        assert!(!r.solved());
        assert_eq!(r.outcome, PassOutcome::FrontierExhausted);
    }

    #[test]
    fn cycles_on_the_path_are_dropped() {
        // apply f / apply g bounce between A and B.
        let gen = Fixed(vec![("intro f", -0.1), ("intro g", -0.1), ("apply f", -0.1), ("apply g", -0.1)]);
        let prover = Prover::new(&gen, &KernelFactory);
        let r = prover.run_pass(&ProofTask::new("t", "(A -> B) -> (B -> A) -> A"), &cfg(20)).unwrap();
        assert!(!r.solved());
        assert!(r.stats.cycles_dropped > 0);
        assert_eq!(r.outcome, PassOutcome::FrontierExhausted);
    }

    #[test]
    fn generator_failure_aborts() {
        let prover = Prover::new(&Failing, &KernelFactory);
        assert!(matches!(prover.run_pass(&ProofTask::new("t", "A -> A"), &cfg(3)), Err(SearchError::Generator(_))));
    }

    #[test]
    fn unparseable_statement_is_init_error() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        assert!(matches!(prover.run_pass(&ProofTask::new("t", "A ->"), &cfg(3)), Err(SearchError::Init { .. })));
    }

    #[test]
    fn run_prove_stops_early() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        let r = prover.run_prove(&ProofTask::new("t", "A -> A"), 3, &cfg(10)).unwrap();
        assert!(r.solved);
        assert_eq!(r.passes.len(), 1);
        let r = prover.run_prove(&ProofTask::new("t", "⊥"), 2, &cfg(10)).unwrap();
        assert!(!r.solved);
        assert_eq!(r.passes.len(), 2);
        assert_eq!(r.passes[1].seed, 1);
    }

    #[test]
    fn pass_seeds_are_xor() {
        assert_eq!(pass_seed(7, 0), 7);
        assert_eq!(pass_seed(7, 3), 4);
    }
}
