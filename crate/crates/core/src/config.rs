//! Application configuration: built-in defaults, optionally overridden by a
//! TOML file, then by command-line flags. The digest of the effective
//! configuration is stamped into every artifact.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{digest_of, ArtifactMeta};
use crate::eval::{EvalConfig, DEFAULT_TIMEOUT};
use crate::generator::PolicyMode;
use crate::herald::{HeraldConfig, RoleTemplates, DEFAULT_FAN_OUT, DEFAULT_PATTERNS};
use crate::iteration::IterationConfig;
use crate::retrieval::mining::DEFAULT_WINDOW;
use crate::retrieval::StageConfig;
use crate::search::PassConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub seed: u64,
    pub jobs: usize,
    pub environment: EnvironmentSection,
    pub generator: GeneratorSection,
    pub retrieval: RetrievalSection,
    pub search: SearchSection,
    pub eval: EvalSection,
    pub herald: HeraldSection,
    pub iteration: IterationSection,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            environment: EnvironmentSection::default(),
            generator: GeneratorSection::default(),
            retrieval: RetrievalSection::default(),
            search: SearchSection::default(),
            eval: EvalSection::default(),
            herald: HeraldSection::default(),
            iteration: IterationSection::default(),
        }
    }
}

/// `command` empty means the built-in kernel.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub command: Vec<String>,
}

/// With no `url` the toy policy is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub url: Option<String>,
    pub timeout_secs: f64,
    pub max_tokens: usize,
    pub policy: PolicyMode,
    /// Toy policy snapshot to load instead of the uniform policy.
    pub policy_path: Option<PathBuf>,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self { url: None, timeout_secs: 60.0, max_tokens: 128, policy: PolicyMode::Exhaustive, policy_path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub corpus: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub dim_hash: usize,
    pub dim_out: usize,
    pub stage1: StageConfig,
    pub stage2: StageConfig,
    pub window: (usize, usize),
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self {
            corpus: None,
            checkpoint: None,
            index: None,
            dim_hash: 1024,
            dim_out: 64,
            stage1: StageConfig::stage1(),
            stage2: StageConfig::stage2(),
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub samples_per_step: usize,
    pub max_expansions: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub top_k: usize,
    pub passes: usize,
    pub time_limit_secs: Option<f64>,
}

impl Default for SearchSection {
    fn default() -> Self {
        let p = PassConfig::default();
        Self {
            samples_per_step: p.samples_per_step,
            max_expansions: p.max_expansions,
            alpha: p.alpha,
            temperature: p.temperature,
            top_k: p.top_k,
            passes: 64,
            time_limit_secs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub timeout_secs: Option<f64>,
    pub system: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { timeout_secs: Some(DEFAULT_TIMEOUT.as_secs_f64()), system: "stepprove".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeraldSection {
    pub fan_out: usize,
    pub patterns: Vec<String>,
    pub well_formedness_gate: bool,
    /// Requests per second shared by all remote model clients; 0 disables.
    pub rate_per_sec: f64,
    pub burst: u32,
    pub temperature: f64,
    pub templates: RoleTemplates,
}

impl Default for HeraldSection {
    fn default() -> Self {
        Self {
            fan_out: DEFAULT_FAN_OUT,
            patterns: DEFAULT_PATTERNS.iter().map(|p| p.to_string()).collect(),
            well_formedness_gate: false,
            rate_per_sec: 0.0,
            burst: 1,
            temperature: 0.7,
            templates: RoleTemplates::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationSection {
    pub rounds: usize,
    pub resolve_solved: bool,
}

impl Default for IterationSection {
    fn default() -> Self {
        Self { rounds: 3, resolve_solved: false }
    }
}

impl AppConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Digest of every setting that can change results; `jobs` is excluded.
    pub fn digest(&self) -> String {
        digest_of(&AppConfig { jobs: 1, ..self.clone() })
    }

    pub fn meta(&self) -> ArtifactMeta {
        ArtifactMeta::new(self.digest(), self.seed)
    }

    pub fn pass_config(&self) -> PassConfig {
        let s = &self.search;
        PassConfig {
            samples_per_step: s.samples_per_step,
            max_expansions: s.max_expansions,
            alpha: s.alpha,
            temperature: s.temperature,
            top_k: s.top_k,
            seed: self.seed,
            time_limit: s.time_limit_secs.map(Duration::from_secs_f64),
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            passes: self.search.passes,
            pass: self.pass_config(),
            timeout: self.eval.timeout_secs.map(Duration::from_secs_f64),
            jobs: self.jobs,
            system: self.eval.system.clone(),
            keep_trees: false,
        }
    }

    pub fn herald_config(&self) -> HeraldConfig {
        HeraldConfig {
            fan_out: self.herald.fan_out,
            patterns: self.herald.patterns.clone(),
            jobs: self.jobs,
            well_formedness_gate: self.herald.well_formedness_gate,
        }
    }

    pub fn iteration_config(&self) -> IterationConfig {
        IterationConfig {
            rounds: self.iteration.rounds,
            passes: self.search.passes,
            pass: self.pass_config(),
            resolve_solved: self.iteration.resolve_solved,
            jobs: self.jobs,
        }
    }
}
