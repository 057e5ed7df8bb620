//! Bundled propositional proof kernel.
//!
//! A [`KernelSession`] owns every state it has handed out, keyed by dense
//! integer ids that are never reused. Tactics act on the first goal; the
//! resulting subgoals replace it in order.

pub mod formula;
pub mod oracle;
pub mod tactic;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use formula::{parse_formula, Formula, ParseError};
pub use oracle::{oracle_provable, OracleResult};
pub use tactic::{applicable_tactics, render_goals, step, Goal, Hypothesis, StepError, Tactic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u64);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl FromStr for StateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('s').and_then(|n| n.parse().ok()).map(StateId).ok_or_else(|| format!("malformed state id {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofState {
    pub id: StateId,
    pub goals: Vec<Goal>,
    pub depth: u32,
}

impl ProofState {
    pub fn is_complete(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn render(&self) -> String {
        render_goals(&self.goals)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    ParseError,
    Inapplicable,
    NoProgress,
    UnknownState,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::ParseError => "parse-error",
            ErrorClass::Inapplicable => "inapplicable",
            ErrorClass::NoProgress => "no-progress",
            ErrorClass::UnknownState => "unknown-state",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parse-error" => Ok(ErrorClass::ParseError),
            "inapplicable" => Ok(ErrorClass::Inapplicable),
            "no-progress" => Ok(ErrorClass::NoProgress),
            "unknown-state" => Ok(ErrorClass::UnknownState),
            other => Err(format!("unknown error class {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApplyResult {
    NewState(ProofState),
    Complete(ProofState),
    Error { class: ErrorClass, message: String },
}

impl ApplyResult {
    pub fn error(class: ErrorClass, message: impl Into<String>) -> Self {
        ApplyResult::Error { class, message: message.into() }
    }

    pub fn state(&self) -> Option<&ProofState> {
        match self {
            ApplyResult::NewState(s) | ApplyResult::Complete(s) => Some(s),
            ApplyResult::Error { .. } => None,
        }
    }

    pub fn into_state(self) -> Option<ProofState> {
        match self {
            ApplyResult::NewState(s) | ApplyResult::Complete(s) => Some(s),
            ApplyResult::Error { .. } => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, ApplyResult::Error { .. })
    }

    fn from_state(state: ProofState) -> Self {
        if state.is_complete() {
            ApplyResult::Complete(state)
        } else {
            ApplyResult::NewState(state)
        }
    }
}

/// Goal list of a freshly initialized statement.
pub fn initial_goals(statement: Formula) -> Vec<Goal> {
    vec![Goal::new(statement)]
}

/// One proof session against the bundled kernel.
#[derive(Debug, Default)]
pub struct KernelSession {
    states: HashMap<StateId, ProofState>,
    next_id: u64,
}

impl KernelSession {
    pub fn new() -> Self {
        Self::default()
    }

    fn register(&mut self, goals: Vec<Goal>, depth: u32) -> ProofState {
        let state = ProofState { id: StateId(self.next_id), goals, depth };
        self.next_id += 1;
        self.states.insert(state.id, state.clone());
        state
    }

    pub fn init_state(&mut self, statement: Formula) -> ProofState {
        self.register(initial_goals(statement), 0)
    }

    /// Parses `statement` in the toy grammar and initializes it.
    pub fn init_text(&mut self, statement: &str) -> ApplyResult {
        match parse_formula(statement) {
            Ok(f) => ApplyResult::from_state(self.init_state(f)),
            Err(e) => ApplyResult::error(ErrorClass::ParseError, e.to_string()),
        }
    }

    pub fn get(&self, id: StateId) -> Option<&ProofState> {
        self.states.get(&id)
    }

    pub fn apply_tactic(&mut self, id: StateId, tactic: &str) -> ApplyResult {
        let Some(parent) = self.states.get(&id) else {
            return ApplyResult::error(ErrorClass::UnknownState, format!("unknown state {id}"));
        };
        let parsed = match Tactic::parse(tactic) {
            Ok(t) => t,
            Err(msg) => return ApplyResult::error(ErrorClass::ParseError, msg),
        };
        let depth = parent.depth + 1;
        match step(&parent.goals, &parsed) {
            Ok(goals) => ApplyResult::from_state(self.register(goals, depth)),
            Err(StepError::Inapplicable(msg)) => ApplyResult::error(ErrorClass::Inapplicable, msg),
            Err(StepError::NoProgress) => ApplyResult::error(ErrorClass::NoProgress, "goals unchanged"),
        }
    }
}

/// Replays `script` from a fresh session; `Ok(true)` iff it ends complete.
pub fn replay_script(statement: &Formula, script: &[String]) -> Result<bool, (usize, String)> {
    let mut session = KernelSession::new();
    let mut current = session.init_state(statement.clone());
    for (i, tactic) in script.iter().enumerate() {
        match session.apply_tactic(current.id, tactic) {
            ApplyResult::Error { class, message } => return Err((i, format!("{class}: {message}"))),
            ok => current = ok.into_state().expect("non-error result carries a state"),
        }
    }
    Ok(current.is_complete())
}
