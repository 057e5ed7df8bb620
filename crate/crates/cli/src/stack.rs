//! Turns the effective configuration into the runtime pieces a command needs.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use stepprove::config::AppConfig;
use stepprove::env::{EnvironmentFactory, ExternalFactory, KernelFactory};
use stepprove::generator::{CompletionClient, RemoteGenerator, TacticGenerator, ToyPolicy, GEN_URL_ENV};
use stepprove::retrieval::{load_corpus, Index, PremiseRetriever, Retriever, ToyEmbedder};
use stepprove::search::Prover;

use crate::args::{PolicyArg, RetrievalArgs, SearchArgs};

pub fn load_config(path: Option<&Path>, seed: Option<u64>, jobs: Option<usize>) -> Result<AppConfig> {
    let mut config = match path {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(j) = jobs {
        config.jobs = j.max(1);
    }
    Ok(config)
}

pub fn apply_env_cmd(config: &mut AppConfig, env_cmd: Option<&str>) {
    if let Some(cmd) = env_cmd {
        config.environment.command = cmd.split_whitespace().map(str::to_string).collect();
    }
}

/// Flag > config file > `STEPPROVE_GEN_URL`.
pub fn resolve_url(flag: Option<&str>, file: Option<&str>) -> Option<String> {
    flag.or(file).map(str::to_string).or_else(|| std::env::var(GEN_URL_ENV).ok().filter(|u| !u.is_empty()))
}

pub fn apply_retrieval(config: &mut AppConfig, args: &RetrievalArgs) {
    let r = &mut config.retrieval;
    if args.corpus.is_some() {
        r.corpus = args.corpus.clone();
    }
    if args.checkpoint.is_some() {
        r.checkpoint = args.checkpoint.clone();
    }
    if args.index.is_some() {
        r.index = args.index.clone();
    }
}

pub fn apply_search(config: &mut AppConfig, args: &SearchArgs) {
    let s = &mut config.search;
    if let Some(v) = args.passes {
        s.passes = v;
    }
    if let Some(v) = args.samples {
        s.samples_per_step = v;
    }
    if let Some(v) = args.expansions {
        s.max_expansions = v;
    }
    if let Some(v) = args.alpha {
        s.alpha = v;
    }
    if let Some(v) = args.temperature {
        s.temperature = v;
    }
    if let Some(v) = args.top_k {
        s.top_k = v;
    }
    if let Some(v) = args.time_limit {
        s.time_limit_secs = Some(v);
    }
    apply_env_cmd(config, args.env_cmd.as_deref());
    config.generator.url = resolve_url(args.gen_url.as_deref(), config.generator.url.as_deref());
    if let Some(p) = args.policy {
        config.generator.policy = match p {
            PolicyArg::Exhaustive => stepprove::generator::PolicyMode::Exhaustive,
            PolicyArg::Sampled => stepprove::generator::PolicyMode::Sampled,
        };
    }
    if args.policy_file.is_some() {
        config.generator.policy_path = args.policy_file.clone();
    }
    apply_retrieval(config, &args.retrieval);
}

pub fn environments(config: &AppConfig) -> Box<dyn EnvironmentFactory> {
    match config.environment.command.split_first() {
        Some((program, args)) => Box::new(ExternalFactory { program: program.clone(), args: args.to_vec() }),
        None => Box::new(KernelFactory),
    }
}

/// Reads a policy snapshot: either `{"meta", "policy"}` or a bare policy object.
pub fn load_policy(path: &Path) -> Result<ToyPolicy> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let policy = value.get("policy").cloned().unwrap_or(value);
    serde_json::from_value(policy).with_context(|| format!("{} is not a policy snapshot", path.display()))
}

/// The toy policy in the configured mode, from the snapshot if one is set.
pub fn toy_policy(config: &AppConfig) -> Result<ToyPolicy> {
    let mut policy = match &config.generator.policy_path {
        Some(p) => load_policy(p)?,
        None => ToyPolicy::uniform(config.generator.policy),
    };
    policy.mode = config.generator.policy;
    Ok(policy)
}

pub fn generator(config: &AppConfig) -> Result<Box<dyn TacticGenerator>> {
    let g = &config.generator;
    match &g.url {
        Some(url) => {
            let client = CompletionClient::new(url.clone(), Duration::from_secs_f64(g.timeout_secs), g.max_tokens)?;
            Ok(Box::new(RemoteGenerator { client }))
        }
        None => Ok(Box::new(toy_policy(config)?)),
    }
}

pub fn embedder(config: &AppConfig) -> Result<ToyEmbedder> {
    match &config.retrieval.checkpoint {
        Some(p) => ToyEmbedder::load(p).with_context(|| format!("loading checkpoint {}", p.display())),
        None => Ok(ToyEmbedder::new(config.retrieval.dim_hash, config.retrieval.dim_out, config.seed)),
    }
}

/// `None` when no corpus is configured.
pub fn retriever(config: &AppConfig) -> Result<Option<Retriever>> {
    let Some(corpus) = &config.retrieval.corpus else {
        if config.retrieval.index.is_some() {
            bail!("--index needs --corpus");
        }
        return Ok(None);
    };
    let premises = load_corpus(corpus).with_context(|| format!("loading corpus {}", corpus.display()))?;
    let embedder = embedder(config)?;
    let index = match &config.retrieval.index {
        Some(p) => Index::load(p, &premises).with_context(|| format!("loading index {}", p.display()))?,
        None => Index::build(&embedder, &premises)?,
    };
    Ok(Some(Retriever { embedder, index }))
}

/// Everything a search needs, owned in one place.
pub struct Stack {
    pub generator: Box<dyn TacticGenerator>,
    pub environments: Box<dyn EnvironmentFactory>,
    pub retriever: Option<Retriever>,
}

impl Stack {
    pub fn build(config: &AppConfig) -> Result<Self> {
        Ok(Self { generator: generator(config)?, environments: environments(config), retriever: retriever(config)? })
    }

    pub fn retriever(&self) -> Option<&dyn PremiseRetriever> {
        self.retriever.as_ref().map(|r| r as &dyn PremiseRetriever)
    }

    pub fn prover(&self) -> Prover<'_> {
        let prover = Prover::new(self.generator.as_ref(), self.environments.as_ref());
        match &self.retriever {
            Some(r) => prover.with_retriever(r),
            None => prover,
        }
    }
}
