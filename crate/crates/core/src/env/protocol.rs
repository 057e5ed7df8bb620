//! Newline-delimited JSON protocol between a prover and a tactic environment.
//!
//! ```text
//! → {"cmd":"init","statement":"A -> A"}
//! ← {"ok":true,"state_id":"s0","goals":[{"hyps":[],"target":"A -> A"}]}
//! → {"cmd":"apply","state_id":"s0","tactic":"intro h"}
//! ← {"ok":true,"state_id":"s1","goals":[{"hyps":[["h","A"]],"target":"A"}]}
//! → {"cmd":"shutdown"}
//! ← {"ok":true}
//! ```
//!
//! A closing tactic answers with `"complete":true` and an empty goal list;
//! failures answer `{"ok":false,"error":<class>,"message":<text>}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::kernel::{ApplyResult, ErrorClass, Goal, KernelSession, ProofState, StateId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum WireRequest {
    Init { statement: String },
    Apply { state_id: String, tactic: String },
    Shutdown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireGoal {
    pub hyps: Vec<(String, String)>,
    pub target: String,
}

impl From<&Goal> for WireGoal {
    fn from(goal: &Goal) -> Self {
        WireGoal {
            hyps: goal.hypotheses.iter().map(|h| (h.name.clone(), h.formula.to_string())).collect(),
            target: goal.target.to_string(),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goals: Option<Vec<WireGoal>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl WireResponse {
    pub fn acknowledged() -> Self {
        WireResponse { ok: true, ..Default::default() }
    }

    pub fn failure(class: ErrorClass, message: impl Into<String>) -> Self {
        WireResponse {
            ok: false,
            error: Some(class.as_str().to_string()),
            message: Some(message.into()),
            ..Default::default()
        }
    }

    pub fn from_state(state: &ProofState) -> Self {
        WireResponse {
            ok: true,
            state_id: Some(state.id.to_string()),
            goals: Some(state.goals.iter().map(WireGoal::from).collect()),
            complete: state.is_complete(),
            ..Default::default()
        }
    }

    pub fn from_result(result: &ApplyResult) -> Self {
        match result {
            ApplyResult::NewState(s) | ApplyResult::Complete(s) => Self::from_state(s),
            ApplyResult::Error { class, message } => Self::failure(*class, message.clone()),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// Serves the bundled kernel over the wire protocol, one session per server.
#[derive(Debug, Default)]
pub struct ProtocolServer {
    session: KernelSession,
}

impl ProtocolServer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Handles one request line; the flag is true once shutdown was requested.
    pub fn handle_line(&mut self, line: &str) -> (WireResponse, bool) {
        let request: WireRequest = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return (WireResponse::failure(ErrorClass::ParseError, format!("malformed request: {e}")), false),
        };
        match request {
            WireRequest::Init { statement } => (WireResponse::from_result(&self.session.init_text(&statement)), false),
            WireRequest::Apply { state_id, tactic } => {
                let response = match state_id.parse::<StateId>() {
                    Ok(id) => WireResponse::from_result(&self.session.apply_tactic(id, &tactic)),
                    Err(_) => WireResponse::failure(ErrorClass::UnknownState, format!("unknown state {state_id}")),
                };
                (response, false)
            }
            WireRequest::Shutdown => (WireResponse::acknowledged(), true),
        }
    }
}

/// Runs the protocol loop until shutdown or end of input.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W) -> std::io::Result<()> {
    let mut server = ProtocolServer::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (response, stop) = server.handle_line(&line);
        writeln!(output, "{}", response.to_line())?;
        output.flush()?;
        if stop {
            break;
        }
    }
    Ok(())
}
