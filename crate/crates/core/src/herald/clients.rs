//! Model clients for the formalization pipeline: deterministic mocks and an
//! HTTP client sharing the tactic generator's completion contract.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{formal_body, normalize, ClientRole, ModelError};
use crate::generator::CompletionClient;

/// Input handed to a model client. `reference` carries the original informal
/// text for the judge and is `None` for the other roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelRequest {
    pub text: String,
    pub reference: Option<String>,
}

impl ModelRequest {
    pub fn text(text: impl Into<String>) -> Self {
        Self { text: text.into(), reference: None }
    }

    pub fn judged(original: impl Into<String>, back_translation: impl Into<String>) -> Self {
        Self { text: back_translation.into(), reference: Some(original.into()) }
    }
}

pub trait ModelClient: Sync {
    fn role(&self) -> ClientRole;

    /// Up to `n` outputs for one request.
    fn generate(&self, request: &ModelRequest, n: usize) -> Result<Vec<String>, ModelError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MockBehavior {
    /// Returns the input unchanged.
    Identity,
    /// Strips surrounding whitespace.
    Trim,
    /// `example : <text> := by`, repeated n times.
    Wrap,
    /// Like `Wrap` but each output carries a `-- candidate i` suffix.
    DistinctSuffix,
    /// Strips the formal wrapper, recovering the wrapped text.
    Echo,
    Constant(String),
    Failing,
    /// Consistent iff normalized texts are equal.
    ExactMatchJudge,
    /// Echoes, except that the listed formal texts come back altered.
    Corrupting(BTreeSet<String>),
}

#[derive(Clone, Debug)]
pub struct MockClient {
    role: ClientRole,
    pub behavior: MockBehavior,
}

impl MockClient {
    pub fn new(role: ClientRole, behavior: MockBehavior) -> Self {
        Self { role, behavior }
    }
}

pub const CORRUPTION_MARK: &str = "[altered]";

impl ModelClient for MockClient {
    fn role(&self) -> ClientRole {
        self.role
    }

    fn generate(&self, request: &ModelRequest, n: usize) -> Result<Vec<String>, ModelError> {
        let text = request.text.as_str();
        let one = |s: String| vec![s; n];
        Ok(match &self.behavior {
            MockBehavior::Identity => one(text.to_string()),
            MockBehavior::Trim => one(text.trim().to_string()),
            MockBehavior::Wrap => one(format!("example : {text} := by")),
            MockBehavior::DistinctSuffix => {
                (0..n).map(|i| format!("example : {text} := by -- candidate {i}")).collect()
            }
            MockBehavior::Echo => one(formal_body(text).to_string()),
            MockBehavior::Constant(c) => one(c.clone()),
            MockBehavior::Failing => return Err(ModelError::Transport("mock client is offline".into())),
            MockBehavior::ExactMatchJudge => {
                let original = request.reference.as_deref().unwrap_or("");
                let verdict = if normalize(original) == normalize(text) {
                    "consistent\nnormalized texts are equal"
                } else {
                    "inconsistent\nnormalized texts differ"
                };
                one(verdict.to_string())
            }
            MockBehavior::Corrupting(planted) => {
                let body = formal_body(text);
                if planted.contains(text) {
                    one(format!("{body} {CORRUPTION_MARK}"))
                } else {
                    one(body.to_string())
                }
            }
        })
    }
}

/// Token bucket shared between clients; `acquire` blocks until a token is free.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(capacity: u32, per_second: f64) -> Arc<Self> {
        assert!(capacity > 0 && per_second > 0.0, "rate limit must be positive");
        Arc::new(Self {
            capacity: f64::from(capacity),
            per_second,
            state: Mutex::new((f64::from(capacity), Instant::now())),
        })
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("rate limiter lock");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.per_second).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                (1.0 - *tokens) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Prompt templates per role. `{text}` is the request text, `{original}` the
/// judge's reference text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleTemplates(pub BTreeMap<ClientRole, String>);

impl Default for RoleTemplates {
    fn default() -> Self {
        let mut m = BTreeMap::new();
        m.insert(
            ClientRole::Refiner,
            "Rewrite the following mathematical statement as one clear, self-contained sentence.\n\n{text}\n".into(),
        );
        m.insert(
            ClientRole::Formalizer,
            "Translate the statement into a Lean 4 `example` declaration ending in `:= by`.\n\n{text}\n".into(),
        );
        m.insert(
            ClientRole::Informalizer,
            "Translate the Lean 4 statement into plain mathematical English.\n\n{text}\n".into(),
        );
        m.insert(
            ClientRole::Judge,
            "Statement A:\n{original}\n\nStatement B:\n{text}\n\nDo A and B say the same thing? \
             Answer `consistent` or `inconsistent` on the first line, then give a short reason.\n"
                .into(),
        );
        Self(m)
    }
}

impl RoleTemplates {
    pub fn render(&self, role: ClientRole, request: &ModelRequest) -> String {
        let template = self.0.get(&role).map(String::as_str).unwrap_or("{text}");
        template.replace("{original}", request.reference.as_deref().unwrap_or("")).replace("{text}", &request.text)
    }
}

pub struct RemoteModelClient {
    role: ClientRole,
    client: CompletionClient,
    template: RoleTemplates,
    temperature: f64,
    limiter: Option<Arc<RateLimiter>>,
}

impl RemoteModelClient {
    pub fn new(
        role: ClientRole,
        client: CompletionClient,
        template: RoleTemplates,
        temperature: f64,
        limiter: Option<Arc<RateLimiter>>,
    ) -> Self {
        Self { role, client, template, temperature, limiter }
    }
}

impl ModelClient for RemoteModelClient {
    fn role(&self) -> ClientRole {
        self.role
    }

    fn generate(&self, request: &ModelRequest, n: usize) -> Result<Vec<String>, ModelError> {
        if let Some(limiter) = &self.limiter {
            limiter.acquire();
        }
        let prompt = self.template.render(self.role, request);
        let completions =
            self.client.complete(&prompt, n, self.temperature).map_err(|e| ModelError::Transport(e.to_string()))?;
        Ok(completions.into_iter().map(|c| c.text.trim().to_string()).collect())
    }
}
