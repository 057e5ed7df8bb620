//! HTTP client for a text-generation endpoint.
//!
//! Request: `{"prompt": str, "n": int, "temperature": float, "max_tokens": int}`.
//! Response: `{"completions": [{"text": str, "logprob": float}]}` where
//! `logprob` is the summed token log-probability and may be absent.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{assemble_prompt, GenError, PromptContext, TacticCandidate, TacticGenerator};
use crate::kernel::ProofState;

pub const GEN_URL_ENV: &str = "STEPPROVE_GEN_URL";

#[derive(Serialize)]
struct GenerationRequest<'a> {
    prompt: &'a str,
    n: usize,
    temperature: f64,
    max_tokens: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default)]
    pub logprob: Option<f64>,
}

#[derive(Deserialize)]
struct GenerationResponse {
    completions: Vec<Completion>,
}

#[derive(Clone, Debug)]
pub struct CompletionClient {
    url: String,
    max_tokens: usize,
    http: reqwest::blocking::Client,
}

impl CompletionClient {
    pub fn new(url: impl Into<String>, timeout: Duration, max_tokens: usize) -> Result<Self, GenError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GenError::Transport(e.to_string()))?;
        Ok(Self { url: url.into(), max_tokens, http })
    }

    /// Uses `url` if given, else the `STEPPROVE_GEN_URL` environment variable.
    pub fn from_config(url: Option<&str>, timeout: Duration, max_tokens: usize) -> Result<Self, GenError> {
        let url = match url {
            Some(u) => u.to_string(),
            None => std::env::var(GEN_URL_ENV).map_err(|_| GenError::NoEndpoint)?,
        };
        Self::new(url, timeout, max_tokens)
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn complete(&self, prompt: &str, n: usize, temperature: f64) -> Result<Vec<Completion>, GenError> {
        let body = GenerationRequest { prompt, n, temperature, max_tokens: self.max_tokens };
        let response = self.http.post(&self.url).json(&body).send().map_err(|e| GenError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| GenError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GenError::Status { status: status.as_u16(), body: text });
        }
        let parsed: GenerationResponse =
            serde_json::from_str(&text).map_err(|e| GenError::Malformed(format!("{e}: {text}")))?;
        Ok(parsed.completions)
    }
}

/// Keeps only the first line of a completion.
fn first_line(text: &str) -> &str {
    text.split('\n').next().unwrap_or("").trim()
}

/// Turns raw completions into candidates, ranking fallback for missing logprobs.
pub fn to_candidates(completions: Vec<Completion>) -> Vec<TacticCandidate> {
    let mut out = Vec::new();
    for (rank, c) in completions.into_iter().enumerate() {
        let tactic = first_line(&c.text);
        if tactic.is_empty() {
            continue;
        }
        let logprob = match c.logprob {
            Some(lp) if lp.is_finite() => lp.min(0.0),
            _ => {
                log::warn!("completion {rank} has no logprob; using ln(1/{})", rank + 1);
                -((rank + 1) as f64).ln()
            }
        };
        out.push(TacticCandidate { tactic: tactic.to_string(), logprob });
    }
    out
}

#[derive(Clone, Debug)]
pub struct RemoteGenerator {
    pub client: CompletionClient,
}

impl TacticGenerator for RemoteGenerator {
    fn generate(
        &self,
        _state: &ProofState,
        ctx: &PromptContext,
        n: usize,
        temperature: f64,
        _seed: u64,
    ) -> Result<Vec<TacticCandidate>, GenError> {
        let prompt = assemble_prompt(ctx);
        let mut candidates = to_candidates(self.client.complete(&prompt, n, temperature)?);
        candidates.truncate(n);
        Ok(candidates)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::StateId;

    fn state() -> ProofState {
        ProofState { id: StateId(0), goals: vec![], depth: 0 }
    }

    #[test]
    fn posts_prompt_and_parses_completions() {
        let (url, requests) = test_server::spawn(vec![(
            200,
            r#"{"completions":[{"text":"intro h\nexact h","logprob":-0.25},{"text":"split"},{"text":"  "}]}"#.into(),
        )]);
        let gen = RemoteGenerator { client: CompletionClient::new(url, Duration::from_secs(5), 64).unwrap() };
        let ctx = PromptContext { state: "⊢ A -> A".into(), ..Default::default() };
        let out = gen.generate(&state(), &ctx, 4, 1.5, 0).unwrap();
        assert_eq!(
            out,
            vec![
                TacticCandidate { tactic: "intro h".into(), logprob: -0.25 },
                TacticCandidate { tactic: "split".into(), logprob: -(2f64.ln()) },
            ]
        );
        let body: serde_json::Value = serde_json::from_str(&requests.recv().unwrap()).unwrap();
        assert_eq!(body["n"], 4);
        assert_eq!(body["temperature"], 1.5);
        assert_eq!(body["max_tokens"], 64);
        assert!(body["prompt"].as_str().unwrap().contains("⊢ A -> A"));
    }

    #[test]
    fn http_errors_surface() {
        let (url, _rx) = test_server::spawn(vec![(500, "boom".into()), (200, "not json".into())]);
        let client = CompletionClient::new(url, Duration::from_secs(5), 64).unwrap();
        assert!(matches!(client.complete("p", 1, 1.0), Err(GenError::Status { status: 500, .. })));
        assert!(matches!(client.complete("p", 1, 1.0), Err(GenError::Malformed(_))));
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let client = CompletionClient::new("http://127.0.0.1:1/x", Duration::from_secs(2), 8).unwrap();
        assert!(matches!(client.complete("p", 1, 1.0), Err(GenError::Transport(_))));
    }
}
