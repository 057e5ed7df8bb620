//! Brute-force provability oracle over the kernel.
//!
//! Iterative deepening over every tactic string the kernel could accept on the
//! first goal: the bare tactics, every named tactic on every hypothesis in
//! scope, and `intro` with the canonical fresh name. Candidates are filtered by
//! running the kernel step, not by the shape rules the generator uses.

use std::collections::HashSet;

use super::formula::Formula;
use super::initial_goals;
use super::tactic::{step, Goal, Tactic};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub provable: bool,
    pub shortest_script: Option<Vec<String>>,
}

fn vocabulary(goal: &Goal) -> Vec<Tactic> {
    let mut out = vec![Tactic::Intro(goal.fresh_name()), Tactic::Split, Tactic::Left, Tactic::Right, Tactic::Trivial];
    for h in &goal.hypotheses {
        let n = h.name.clone();
        out.extend([
            Tactic::Exact(n.clone()),
            Tactic::Apply(n.clone()),
            Tactic::Cases(n.clone()),
            Tactic::Destruct(n.clone()),
            Tactic::Absurd(n),
        ]);
    }
    out.push(Tactic::Assumption);
    out
}

struct Search {
    failed: HashSet<(Vec<Goal>, u32)>,
}

impl Search {
    fn prove(&mut self, goals: &[Goal], budget: u32, script: &mut Vec<String>) -> bool {
        if goals.is_empty() {
            return true;
        }
        if budget == 0 {
            return false;
        }
        let key = (goals.to_vec(), budget);
        if self.failed.contains(&key) {
            return false;
        }
        for tactic in vocabulary(&goals[0]) {
            let Ok(next) = step(goals, &tactic) else { continue };
            script.push(tactic.to_string());
            if self.prove(&next, budget - 1, script) {
                return true;
            }
            script.pop();
        }
        self.failed.insert(key);
        false
    }
}

/// Finds a shortest tactic script of at most `max_depth` steps, if one exists.
pub fn oracle_provable(statement: &Formula, max_depth: u32) -> OracleResult {
    let goals = initial_goals(statement.clone());
    let mut search = Search { failed: HashSet::new() };
    for depth in 0..=max_depth {
        let mut script = Vec::new();
        if search.prove(&goals, depth, &mut script) {
            return OracleResult { provable: true, shortest_script: Some(script) };
        }
    }
    OracleResult { provable: false, shortest_script: None }
}
