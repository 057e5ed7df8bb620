//! Template-weighted policy over the kernel's applicable tactics.
//!
//! Stands in for a fine-tuned model at desk scale: the probability of a
//! candidate is `weight(template) / Σ weight` over the tactics applicable to the
//! first goal. Temperature is ignored.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GenError, PromptContext, TacticCandidate, TacticGenerator};
use crate::kernel::tactic::{template_of, TEMPLATES};
use crate::kernel::{applicable_tactics, ProofState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Every applicable tactic, most probable first.
    Exhaustive,
    /// `n` draws with replacement, deduplicated in draw order.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub weights: BTreeMap<String, f64>,
    pub epsilon: f64,
    pub mode: PolicyMode,
}

impl ToyPolicy {
    pub const DEFAULT_EPSILON: f64 = 0.1;

    pub fn uniform(mode: PolicyMode) -> Self {
        Self { weights: TEMPLATES.iter().map(|t| (t.to_string(), 1.0)).collect(), epsilon: Self::DEFAULT_EPSILON, mode }
    }

    pub fn with_weights(mode: PolicyMode, weights: &[(&str, f64)]) -> Self {
        let mut policy = Self::uniform(mode);
        for (t, w) in weights {
            assert!(*w > 0.0, "template weights must be positive");
            policy.weights.insert(t.to_string(), *w);
        }
        policy
    }

    fn weight(&self, template: &str) -> f64 {
        self.weights.get(template).copied().unwrap_or(self.epsilon)
    }

    /// Applicable tactics with their probabilities, in enumeration order.
    pub fn distribution(&self, state: &ProofState) -> Vec<(String, f64)> {
        let Some(goal) = state.goals.first() else { return Vec::new() };
        let tactics = applicable_tactics(goal);
        let weights: Vec<f64> = tactics.iter().map(|t| self.weight(t.template())).collect();
        let total: f64 = weights.iter().sum();
        tactics.iter().zip(weights).map(|(t, w)| (t.to_string(), w / total)).collect()
    }

    /// Re-estimates weights from harvested tactics: `ε + count(template)`.
    pub fn updated<'a>(&self, tactics: impl IntoIterator<Item = &'a str>) -> ToyPolicy {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tactics {
            if let Some(template) = template_of(t) {
                *counts.entry(template).or_default() += 1;
            }
        }
        let weights = TEMPLATES
            .iter()
            .map(|t| (t.to_string(), self.epsilon + counts.get(t).copied().unwrap_or(0) as f64))
            .collect();
        ToyPolicy { weights, epsilon: self.epsilon, mode: self.mode }
    }
}

impl TacticGenerator for ToyPolicy {
    fn generate(
        &self,
        state: &ProofState,
        _ctx: &PromptContext,
        n: usize,
        _temperature: f64,
        seed: u64,
    ) -> Result<Vec<TacticCandidate>, GenError> {
        let dist = self.distribution(state);
        if dist.is_empty() || n == 0 {
            return Ok(Vec::new());
        }
        let candidate = |(t, p): &(String, f64)| TacticCandidate { tactic: t.clone(), logprob: p.ln() };
        match self.mode {
            PolicyMode::Exhaustive => {
                let mut ranked = dist;
                // Stable: equal probabilities keep enumeration order.
                ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
                Ok(ranked.iter().take(n).map(candidate).collect())
            }
            PolicyMode::Sampled => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picked: Vec<usize> = Vec::new();
                for _ in 0..n {
                    let mut u: f64 = rng.random();
                    let mut choice = dist.len() - 1;
                    for (i, (_, p)) in dist.iter().enumerate() {
                        if u < *p {
                            choice = i;
                            break;
                        }
                        u -= p;
                    }
                    if !picked.contains(&choice) {
                        picked.push(choice);
                    }
                }
                Ok(picked.into_iter().map(|i| candidate(&dist[i])).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{parse_formula, Goal, Hypothesis, StateId};

    fn state(hyps: &[(&str, &str)], target: &str) -> ProofState {
        ProofState {
            id: StateId(0),
            goals: vec![Goal {
                hypotheses: hyps.iter().map(|(n, f)| Hypothesis::new(*n, parse_formula(f).unwrap())).collect(),
                target: parse_formula(target).unwrap(),
            }],
            depth: 0,
        }
    }

    fn gen(p: &ToyPolicy, s: &ProofState, n: usize, seed: u64) -> Vec<TacticCandidate> {
        p.generate(s, &PromptContext::default(), n, 1.5, seed).unwrap()
    }

    #[test]
    fn uniform_over_exact_and_assumption() {
        let c = gen(&ToyPolicy::uniform(PolicyMode::Exhaustive), &state(&[("h", "A")], "A"), 64, 0);
        let names: Vec<&str> = c.iter().map(|c| c.tactic.as_str()).collect();
        assert_eq!(names, vec!["exact h", "assumption"]);
        for cand in &c {
            assert!((cand.logprob - 0.5f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn conjunction_target_shape() {
        let c = gen(&ToyPolicy::uniform(PolicyMode::Exhaustive), &state(&[], "A /\\ B"), 64, 0);
        let names: Vec<&str> = c.iter().map(|c| c.tactic.as_str()).collect();
        assert!(names.contains(&"split"));
        assert!(!names.iter().any(|t| *t == "left" || *t == "right" || t.starts_with("intro")));
    }

    #[test]
    fn single_sample_is_one_of_two_outcomes() {
        let p = ToyPolicy::with_weights(PolicyMode::Sampled, &[("exact", 3.0), ("assumption", 1.0)]);
        let s = state(&[("h", "A")], "A");
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..200 {
            let c = gen(&p, &s, 1, seed);
            assert_eq!(c.len(), 1);
            let lp = c[0].logprob;
            assert!((lp - 0.75f64.ln()).abs() < 1e-12 || (lp - 0.25f64.ln()).abs() < 1e-12);
            seen.insert(c[0].tactic.clone());
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let p = ToyPolicy::uniform(PolicyMode::Sampled);
        let s = state(&[("a", "A \\/ B"), ("c", "C /\\ D"), ("z", "⊥")], "E -> E");
        assert_eq!(gen(&p, &s, 3, 11), gen(&p, &s, 3, 11));
        assert!(gen(&p, &s, 3, 11).len() <= 3);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = ToyPolicy::with_weights(PolicyMode::Exhaustive, &[("intro", 4.0), ("cases", 0.3)]);
        let s = state(&[("a", "A \\/ B"), ("c", "C /\\ D"), ("z", "⊥"), ("f", "A -> (E -> E)")], "E -> E");
        let total: f64 = gen(&p, &s, 64, 0).iter().map(|c| c.logprob.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn update_counts_templates() {
        let base = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let up = base.updated(["intro h", "intro h1", "intro h2", "exact h"]);
        assert!((up.weights["intro"] - 3.1).abs() < 1e-12);
        assert!((up.weights["exact"] - 1.1).abs() < 1e-12);
        assert!((up.weights["split"] - 0.1).abs() < 1e-12);
        let empty = base.updated(std::iter::empty());
        assert!(empty.weights.values().all(|w| (*w - 0.1).abs() < 1e-12));
    }

    #[test]
    fn intro_heavy_update_raises_intro_probability() {
        let base = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let up = base.updated(["intro h"; 5]);
        let s = state(&[("c", "C /\\ D")], "E -> E");
        let p = |pol: &ToyPolicy| pol.distribution(&s).iter().find(|(t, _)| t.starts_with("intro")).unwrap().1;
        assert!(p(&up) > p(&base));
    }
}
