mod args;
mod stack;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;
use stepprove::artifact::read_jsonl;
use stepprove::config::AppConfig;
use stepprove::eval::{self, ReportFormat};
use stepprove::generator::CompletionClient;
use stepprove::herald::fixture::SlotLabel;
use stepprove::herald::{
    self, ClientRole, HeraldClients, MockBehavior, MockClient, ModelClient, RateLimiter, RemoteModelClient,
};
use stepprove::iteration::{self, IterationOutputs};
use stepprove::pool::load_pool;
use stepprove::retrieval::{
    load_corpus, mine_hard_negatives, read_pairs, train_stage1, train_stage2, write_pairs, Index, PairRecord,
    PremiseRetriever, StageConfig, TrainLog,
};
use stepprove::search::snapshot::{write_script, write_snapshot};
use stepprove::search::ProofTask;

use args::*;
use stack::Stack;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = stack::load_config(cli.config.as_deref(), cli.seed, cli.jobs)?;
    match cli.command {
        Command::Prove(a) => prove(config, a),
        Command::Env(EnvCommand::Serve) => {
            stepprove::env::protocol::serve(std::io::stdin().lock(), std::io::stdout().lock())?;
            Ok(())
        }
        Command::Index(IndexCommand::Build(a)) => index_build(config, a),
        Command::Index(IndexCommand::Search(a)) => index_search(config, a),
        Command::Retrain(RetrainCommand::Stage1(a)) => stage1(config, a),
        Command::Retrain(RetrainCommand::Mine(a)) => mine(config, a),
        Command::Retrain(RetrainCommand::Stage2(a)) => stage2(config, a),
        Command::Herald(HeraldCommand::Run(a)) => herald_run(config, a),
        Command::Iterate(a) => iterate(config, a),
        Command::Eval(a) => evaluate(config, a),
        Command::ExtractPairs(a) => extract_pairs(config, a),
    }
}

fn prove(mut config: AppConfig, a: ProveArgs) -> Result<()> {
    stack::apply_search(&mut config, &a.search);
    let meta = config.meta();
    let stack = Stack::build(&config)?;
    let task = ProofTask { id: "statement".into(), statement: a.statement, nl: a.nl };
    let result = stack.prover().run_prove(&task, config.search.passes, &config.pass_config())?;
    if let (Some(path), Some(last)) = (&a.snapshot, result.passes.last()) {
        write_snapshot(path, &meta, last)?;
    }
    let Some(script) = &result.script else {
        bail!(
            "no proof found within {} ({} expansions over {} passes)",
            result.budget,
            result.total_expansions(),
            result.passes.len()
        );
    };
    let mut out = std::io::stdout().lock();
    for line in script {
        writeln!(out, "{line}")?;
    }
    if let Some(path) = &a.script_out {
        write_script(path, &meta, script)?;
    }
    eprintln!(
        "solved in pass {} of {} ({} expansions, {} steps)",
        result.passes.len(),
        config.search.passes,
        result.total_expansions(),
        script.len()
    );
    Ok(())
}

fn index_build(mut config: AppConfig, a: IndexBuildArgs) -> Result<()> {
    stack::apply_retrieval(&mut config, &a.retrieval);
    let Some(corpus) = config.retrieval.corpus.clone() else { bail!("--corpus is required") };
    let premises = load_corpus(&corpus).with_context(|| format!("loading corpus {}", corpus.display()))?;
    let embedder = stack::embedder(&config)?;
    let index = Index::build(&embedder, &premises)?;
    index.save(&a.out, Some(&config.meta()))?;
    eprintln!("indexed {} premises into {}", index.len(), a.out.display());
    Ok(())
}

fn index_search(mut config: AppConfig, a: IndexSearchArgs) -> Result<()> {
    stack::apply_retrieval(&mut config, &a.retrieval);
    let Some(retriever) = stack::retriever(&config)? else { bail!("--corpus is required") };
    let mut out = std::io::stdout().lock();
    for (rank, hit) in retriever.retrieve(&a.query, a.k)?.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{:.6}", rank + 1, hit.premise.id, hit.premise.formal_name, hit.similarity)?;
    }
    Ok(())
}

fn apply_train(stage: &mut StageConfig, a: &TrainArgs) {
    if let Some(v) = a.epochs {
        stage.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        stage.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        stage.batch_size = v;
    }
    if let Some(v) = a.margin {
        stage.margin = v;
    }
}

fn write_train_log(path: &Path, config: &AppConfig, log: &TrainLog) -> Result<()> {
    let body = serde_json::json!({ "meta": config.meta(), "epoch_losses": log.epoch_losses });
    std::fs::write(path, serde_json::to_string_pretty(&body)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
}

fn report_losses(log: &TrainLog) {
    for (i, loss) in log.epoch_losses.iter().enumerate() {
        log::info!("epoch {}: loss {loss:.6}", i + 1);
    }
    if let (Some(first), Some(last)) = (log.first(), log.last()) {
        eprintln!("{} epochs, loss {first:.6} -> {last:.6}", log.epoch_losses.len());
    }
}

fn stage1(mut config: AppConfig, a: Stage1Args) -> Result<()> {
    apply_train(&mut config.retrieval.stage1, &a.train);
    config.retrieval.corpus = Some(a.corpus.clone());
    config.retrieval.checkpoint = a.init.clone();
    let premises = load_corpus(&a.corpus)?;
    let pairs: Vec<_> = read_pairs(&a.pairs)?.iter().map(PairRecord::pair).collect();
    let start = stack::embedder(&config)?;
    let (trained, log) = train_stage1(&start, &pairs, &premises, &config.retrieval.stage1)?;
    trained.save(&a.out, Some(&config.meta()))?;
    if let Some(p) = &a.log {
        write_train_log(p, &config, &log)?;
    }
    report_losses(&log);
    Ok(())
}

fn mine(mut config: AppConfig, a: MineArgs) -> Result<()> {
    if let Some(lo) = a.window_lo {
        config.retrieval.window.0 = lo;
    }
    if let Some(hi) = a.window_hi {
        config.retrieval.window.1 = hi;
    }
    config.retrieval.checkpoint = Some(a.checkpoint.clone());
    let premises = load_corpus(&a.corpus)?;
    let pairs: Vec<_> = read_pairs(&a.pairs)?.iter().map(PairRecord::pair).collect();
    let embedder = stack::embedder(&config)?;
    let triplets = mine_hard_negatives(&embedder, &pairs, &premises, config.retrieval.window, config.seed)?;
    let records: Vec<PairRecord> = triplets.iter().map(PairRecord::from).collect();
    write_pairs(&a.out, Some(&config.meta()), &records)?;
    eprintln!("mined {} triplets", records.len());
    Ok(())
}

fn stage2(mut config: AppConfig, a: Stage2Args) -> Result<()> {
    apply_train(&mut config.retrieval.stage2, &a.train);
    config.retrieval.checkpoint = Some(a.checkpoint.clone());
    let premises = load_corpus(&a.corpus)?;
    let triplets = read_pairs(&a.triplets)?
        .iter()
        .enumerate()
        .map(|(i, r)| r.triplet().with_context(|| format!("{}: record {} has no neg_id", a.triplets.display(), i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let start = stack::embedder(&config)?;
    let (trained, log) = train_stage2(&start, &triplets, &premises, &config.retrieval.stage2)?;
    trained.save(&a.out, Some(&config.meta()))?;
    if let Some(p) = &a.log {
        write_train_log(p, &config, &log)?;
    }
    report_losses(&log);
    Ok(())
}

struct HeraldModels {
    refiner: Option<Box<dyn ModelClient>>,
    formalizer: Box<dyn ModelClient>,
    informalizer: Box<dyn ModelClient>,
    judge: Box<dyn ModelClient>,
}

impl HeraldModels {
    fn clients(&self) -> HeraldClients<'_> {
        HeraldClients {
            refiner: self.refiner.as_deref(),
            formalizer: self.formalizer.as_ref(),
            informalizer: self.informalizer.as_ref(),
            judge: self.judge.as_ref(),
        }
    }
}

fn mock_models(mock: MockArg, labels: Option<&Path>, refine: bool) -> Result<HeraldModels> {
    let (formalizer, informalizer) = match mock {
        MockArg::Echo => (MockBehavior::Wrap, MockBehavior::Echo),
        MockArg::Fixture => {
            let Some(path) = labels else { bail!("--mock fixture needs --labels") };
            let labels: Vec<SlotLabel> = read_jsonl(path, false)?.records;
            let planted: BTreeSet<String> = labels.into_iter().filter(|l| l.corrupted).map(|l| l.formal).collect();
            (MockBehavior::DistinctSuffix, MockBehavior::Corrupting(planted))
        }
    };
    Ok(HeraldModels {
        refiner: refine
            .then(|| Box::new(MockClient::new(ClientRole::Refiner, MockBehavior::Trim)) as Box<dyn ModelClient>),
        formalizer: Box::new(MockClient::new(ClientRole::Formalizer, formalizer)),
        informalizer: Box::new(MockClient::new(ClientRole::Informalizer, informalizer)),
        judge: Box::new(MockClient::new(ClientRole::Judge, MockBehavior::ExactMatchJudge)),
    })
}

fn remote_models(config: &AppConfig, url: &str, refine: bool) -> Result<HeraldModels> {
    let h = &config.herald;
    let client = CompletionClient::new(
        url.to_string(),
        Duration::from_secs_f64(config.generator.timeout_secs),
        config.generator.max_tokens,
    )?;
    let limiter = (h.rate_per_sec > 0.0).then(|| RateLimiter::new(h.burst.max(1), h.rate_per_sec));
    let make = |role| -> Box<dyn ModelClient> {
        Box::new(RemoteModelClient::new(role, client.clone(), h.templates.clone(), h.temperature, limiter.clone()))
    };
    Ok(HeraldModels {
        refiner: refine.then(|| make(ClientRole::Refiner)),
        formalizer: make(ClientRole::Formalizer),
        informalizer: make(ClientRole::Informalizer),
        judge: make(ClientRole::Judge),
    })
}

fn herald_run(mut config: AppConfig, a: HeraldRunArgs) -> Result<()> {
    if let Some(n) = a.fan_out {
        config.herald.fan_out = n;
    }
    if a.gate {
        config.herald.well_formedness_gate = true;
    }
    if let Some(r) = a.rate {
        config.herald.rate_per_sec = r;
    }
    stack::apply_env_cmd(&mut config, a.env_cmd.as_deref());
    let models = match a.mock {
        Some(mock) => mock_models(mock, a.labels.as_deref(), a.refine)?,
        None => {
            config.generator.url = stack::resolve_url(a.model_url.as_deref(), config.generator.url.as_deref());
            let Some(url) = config.generator.url.clone() else {
                bail!("no model endpoint: pass --model-url, set generator.url, or use --mock")
            };
            remote_models(&config, &url, a.refine)?
        }
    };
    let mut documents = Vec::new();
    for input in &a.inputs {
        documents.extend(herald::load_documents(input)?);
    }
    let envs = stack::environments(&config);
    let records = herald::run_pipeline(&documents, &config.herald_config(), &models.clients(), Some(envs.as_ref()))?;
    herald::write_outputs(&a.records, &a.pool, &config.meta(), &records)?;
    let accepted: usize = records.iter().map(|r| r.accepted.len()).sum();
    eprintln!(
        "{} statements, {} candidates accepted, {} pool entries",
        records.len(),
        accepted,
        herald::statement_pool(&records).len()
    );
    Ok(())
}

fn iterate(mut config: AppConfig, a: IterateArgs) -> Result<()> {
    stack::apply_search(&mut config, &a.search);
    if let Some(r) = a.rounds {
        config.iteration.rounds = r;
    }
    if a.resolve_solved {
        config.iteration.resolve_solved = true;
    }
    if config.generator.url.is_some() {
        bail!("iterate updates the built-in policy; unset the generation endpoint");
    }
    let pool = load_pool(&a.pool)?;
    let policy = stack::toy_policy(&config)?;
    let envs = stack::environments(&config);
    let retriever = stack::retriever(&config)?;
    let outputs = IterationOutputs { dir: a.out_dir.clone(), meta: config.meta() };
    let outcome = iteration::run_iteration(
        &pool,
        &config.iteration_config(),
        &policy,
        envs.as_ref(),
        retriever.as_ref().map(|r| r as &dyn PremiseRetriever),
        Some(&outputs),
    )?;
    for r in &outcome.rounds {
        eprintln!(
            "round {}: solved {} new, {} cumulative of {}, dataset {} pairs",
            r.round,
            r.solved_ids.len(),
            r.cumulative_solved,
            pool.len(),
            r.dataset_size
        );
    }
    Ok(())
}

fn evaluate(mut config: AppConfig, a: EvalArgs) -> Result<()> {
    stack::apply_search(&mut config, &a.search);
    if let Some(t) = a.timeout {
        config.eval.timeout_secs = (t > 0.0).then_some(t);
    }
    if let Some(s) = &a.system {
        config.eval.system = s.clone();
    }
    let pool = load_pool(&a.pool)?;
    let stack = Stack::build(&config)?;
    let mut eval_config = config.eval_config();
    eval_config.keep_trees = a.snapshots.is_some();
    let report = eval::evaluate(&pool, &eval_config, &stack.prover(), &config.digest())?;
    let format = match a.format {
        FormatArg::Markdown => ReportFormat::Markdown,
        FormatArg::Csv => ReportFormat::Csv,
    };
    eval::write_report(&a.report, &report, format)?;
    if let Some(p) = &a.results {
        eval::write_results(p, &report)?;
    }
    if let Some(dir) = &a.snapshots {
        eval::write_trees(dir, &report)?;
    }
    println!("{}\t{}\t{}", report.system, report.budget, report.rate_string());
    Ok(())
}

fn extract_pairs(mut config: AppConfig, a: ExtractPairsArgs) -> Result<()> {
    stack::apply_search(&mut config, &a.search);
    let pool = load_pool(&a.pool)?;
    let stack = Stack::build(&config)?;
    let prover = stack.prover();
    let pass = config.pass_config();
    let mut harvested = Vec::new();
    let mut solved = 0;
    for task in &pool {
        let result = prover.run_prove(task, config.search.passes, &pass)?;
        let Some(last) = result.passes.last().filter(|p| p.solved()) else { continue };
        solved += 1;
        harvested.extend(iteration::extract_pairs(
            last,
            task,
            stack.environments.as_ref(),
            stack.retriever(),
            pass.top_k,
            a.round,
        )?);
    }
    let (merged, stats) = iteration::merge_dataset(&a.out, harvested, &config.meta(), a.permissive)?;
    for (line, message) in &stats.skipped {
        log::warn!("{}:{line}: skipped: {message}", a.out.display());
    }
    eprintln!(
        "solved {solved} of {}; {} new pairs, {} duplicates, dataset now {}",
        pool.len(),
        stats.added,
        stats.duplicates,
        merged.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::Cli;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_argument_is_documented() {
        fn walk(cmd: &clap::Command, path: &str, missing: &mut Vec<String>) {
            if cmd.get_about().is_none() && !path.is_empty() {
                missing.push(format!("{path} (command)"));
            }
            for arg in cmd.get_arguments() {
                let id = arg.get_id().as_str();
                if id == "help" || id == "version" {
                    continue;
                }
                if arg.get_help().is_none() {
                    missing.push(format!("{path} --{id}"));
                }
            }
            for sub in cmd.get_subcommands() {
                walk(sub, &format!("{path} {}", sub.get_name()), missing);
            }
        }
        let mut missing = Vec::new();
        walk(&Cli::command(), "", &mut missing);
        assert!(missing.is_empty(), "undocumented: {missing:?}");
    }
}
