use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use super::protocol::{WireGoal, WireRequest, WireResponse};
use super::{EnvError, Environment, EnvironmentFactory};
use crate::kernel::{parse_formula, ApplyResult, ErrorClass, Goal, Hypothesis, ProofState, StateId};

/// Adapter to a child process speaking the wire protocol on stdio.
///
/// Requests are strictly serialized: one line out, one line back.
pub struct ExternalEnvironment {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    depths: HashMap<StateId, u32>,
}

impl ExternalEnvironment {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, EnvError> {
        let mut child = Command::new(program).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take().ok_or(EnvError::Closed)?;
        let stdout = BufReader::new(child.stdout.take().ok_or(EnvError::Closed)?);
        Ok(Self { child, stdin, stdout, depths: HashMap::new() })
    }

    /// Sends one raw line and returns the raw reply without its newline.
    pub fn exchange_line(&mut self, line: &str) -> Result<String, EnvError> {
        if line.contains('\n') {
            return Err(EnvError::Malformed("request spans several lines".into()));
        }
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        let mut reply = String::new();
        if self.stdout.read_line(&mut reply)? == 0 {
            return Err(EnvError::Closed);
        }
        if reply.ends_with('\n') {
            reply.pop();
        }
        Ok(reply)
    }

    pub fn request(&mut self, request: &WireRequest) -> Result<WireResponse, EnvError> {
        let line = serde_json::to_string(request).map_err(|e| EnvError::Malformed(e.to_string()))?;
        let reply = self.exchange_line(&line)?;
        serde_json::from_str(&reply).map_err(|e| EnvError::Malformed(format!("{e}: {reply}")))
    }

    pub fn shutdown(mut self) -> Result<(), EnvError> {
        let response = self.request(&WireRequest::Shutdown)?;
        if !response.ok {
            return Err(EnvError::Malformed("shutdown was refused".into()));
        }
        self.child.wait()?;
        Ok(())
    }

    fn interpret(&mut self, response: WireResponse, depth: u32) -> Result<ApplyResult, EnvError> {
        if !response.ok {
            let class = response
                .error
                .as_deref()
                .ok_or_else(|| EnvError::Malformed("failure without error class".into()))?
                .parse::<ErrorClass>()
                .map_err(EnvError::Malformed)?;
            return Ok(ApplyResult::Error { class, message: response.message.unwrap_or_default() });
        }
        let id = response
            .state_id
            .as_deref()
            .ok_or_else(|| EnvError::Malformed("success without state_id".into()))?
            .parse::<StateId>()
            .map_err(EnvError::Malformed)?;
        let goals = response.goals.unwrap_or_default().iter().map(decode_goal).collect::<Result<Vec<_>, _>>()?;
        if response.complete != goals.is_empty() {
            return Err(EnvError::Malformed("complete flag disagrees with goal list".into()));
        }
        self.depths.insert(id, depth);
        let state = ProofState { id, goals, depth };
        Ok(if state.is_complete() { ApplyResult::Complete(state) } else { ApplyResult::NewState(state) })
    }
}

fn decode_goal(goal: &WireGoal) -> Result<Goal, EnvError> {
    let parse = |text: &str| parse_formula(text).map_err(|e| EnvError::Malformed(format!("goal {text:?}: {e}")));
    let hypotheses = goal
        .hyps
        .iter()
        .map(|(name, text)| Ok(Hypothesis::new(name.clone(), parse(text)?)))
        .collect::<Result<Vec<_>, EnvError>>()?;
    Ok(Goal { hypotheses, target: parse(&goal.target)? })
}

impl Environment for ExternalEnvironment {
    fn init(&mut self, statement: &str) -> Result<ApplyResult, EnvError> {
        let response = self.request(&WireRequest::Init { statement: statement.to_string() })?;
        self.interpret(response, 0)
    }

    fn apply(&mut self, state: &ProofState, tactic: &str) -> Result<ApplyResult, EnvError> {
        let depth = self.depths.get(&state.id).copied().unwrap_or(state.depth) + 1;
        let response =
            self.request(&WireRequest::Apply { state_id: state.id.to_string(), tactic: tactic.to_string() })?;
        self.interpret(response, depth)
    }
}

impl Drop for ExternalEnvironment {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Spawns one child process per session.
#[derive(Clone, Debug)]
pub struct ExternalFactory {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalFactory {
    /// Splits a command line on whitespace.
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut words = line.split_whitespace().map(str::to_string);
        let program = words.next()?;
        Some(Self { program, args: words.collect() })
    }
}

impl EnvironmentFactory for ExternalFactory {
    fn open(&self) -> Result<Box<dyn Environment>, EnvError> {
        Ok(Box::new(ExternalEnvironment::spawn(&self.program, &self.args)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A shell stub that ignores its input and answers from a fixed script.
    fn replay_stub(replies: &[&str]) -> ExternalEnvironment {
        let mut script = String::new();
        for reply in replies {
            script.push_str(&format!("read line; printf '%s\\n' '{reply}'; "));
        }
        ExternalEnvironment::spawn("sh", &["-c".to_string(), script]).unwrap()
    }

    #[test]
    fn scripted_init_and_apply() {
        let mut env = replay_stub(&[
            r#"{"ok":true,"state_id":"s0","goals":[{"hyps":[],"target":"A -> A"}]}"#,
            r#"{"ok":true,"state_id":"s1","goals":[{"hyps":[["h","A"]],"target":"A"}]}"#,
            r#"{"ok":false,"error":"unknown-state","message":"unknown state s9"}"#,
        ]);
        let root = env.init("A -> A").unwrap().into_state().unwrap();
        assert_eq!(root.id, StateId(0));
        assert_eq!(root.goals.len(), 1);
        let next = env.apply(&root, "intro h").unwrap().into_state().unwrap();
        assert_eq!(next.id, StateId(1));
        assert_eq!(next.depth, 1);
        let ghost = ProofState { id: StateId(9), goals: vec![], depth: 0 };
        assert!(matches!(
            env.apply(&ghost, "exact h").unwrap(),
            ApplyResult::Error { class: ErrorClass::UnknownState, .. }
        ));
    }

    #[test]
    fn malformed_peer_messages() {
        let mut env = replay_stub(&[
            "garbage",
            r#"{"ok":true,"state_id":"s0","goals":[],"complete":false}"#,
            r#"{"ok":false,"error":"on-fire","message":"x"}"#,
        ]);
        assert!(matches!(env.init("A"), Err(EnvError::Malformed(_))));
        assert!(matches!(env.init("A"), Err(EnvError::Malformed(_))));
        assert!(matches!(env.init("A"), Err(EnvError::Malformed(_))));
    }

    #[test]
    fn peer_exit_is_closed() {
        let mut env = replay_stub(&[]);
        assert!(matches!(env.init("A"), Err(EnvError::Closed) | Err(EnvError::Io(_))));
    }

    #[test]
    fn command_line_split() {
        let f = ExternalFactory::from_command_line("stepprove env serve").unwrap();
        assert_eq!(f.program, "stepprove");
        assert_eq!(f.args, vec!["env", "serve"]);
        assert!(ExternalFactory::from_command_line("  ").is_none());
    }
}
