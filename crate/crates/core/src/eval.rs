//! Pass@K evaluation over a statement pool and report files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{write_jsonl, ArtifactError, ArtifactMeta};
use crate::search::snapshot::write_snapshot;
use crate::search::{PassConfig, PassResult, ProofTask, Prover, SamplingBudget, SearchError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("statement pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Passes per statement (K).
    pub passes: usize,
    pub pass: PassConfig,
    #[serde(default, with = "secs")]
    pub timeout: Option<Duration>,
    pub jobs: usize,
    pub system: String,
    /// Keep every pass's search tree in the report for snapshot files.
    #[serde(default)]
    pub keep_trees: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            passes: 64,
            pass: PassConfig::default(),
            timeout: Some(DEFAULT_TIMEOUT),
            jobs: 1,
            system: "stepprove".into(),
            keep_trees: false,
        }
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatementOutcome {
    Solved,
    Unsolved,
    Timeout,
    Error,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatementResult {
    pub id: String,
    pub outcome: StatementOutcome,
    pub passes_used: usize,
    pub expansions: usize,
    pub generator_calls: usize,
    /// Most generator calls spent in any one pass.
    pub max_calls_per_pass: usize,
    pub max_candidates_per_call: usize,
    pub script: Option<Vec<String>>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub trees: Vec<PassResult>,
}

impl StatementResult {
    pub fn solved(&self) -> bool {
        self.outcome == StatementOutcome::Solved
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub budget: SamplingBudget,
    pub config_digest: String,
    pub seed: u64,
    pub statements: Vec<StatementResult>,
}

impl EvalReport {
    pub fn solved_count(&self) -> usize {
        self.statements.iter().filter(|s| s.solved()).count()
    }

    /// Percentage of the pool solved.
    pub fn success_rate(&self) -> f64 {
        100.0 * self.solved_count() as f64 / self.statements.len() as f64
    }

    pub fn rate_string(&self) -> String {
        format!("{:.1} %", self.success_rate())
    }

    pub fn meta(&self) -> ArtifactMeta {
        ArtifactMeta::new(self.config_digest.clone(), self.seed)
    }
}

fn attempt(prover: &Prover<'_>, task: &ProofTask, config: &EvalConfig) -> StatementResult {
    let started = Instant::now();
    let deadline = config.timeout.map(|t| started + t);
    let mut result = StatementResult {
        id: task.id.clone(),
        outcome: StatementOutcome::Unsolved,
        passes_used: 0,
        expansions: 0,
        generator_calls: 0,
        max_calls_per_pass: 0,
        max_candidates_per_call: 0,
        script: None,
        error: None,
        wall_time: Duration::ZERO,
        trees: Vec::new(),
    };
    match prover.run_prove_until(task, config.passes, &config.pass, deadline) {
        Ok(r) => {
            result.outcome = if r.solved {
                StatementOutcome::Solved
            } else if r.timed_out() {
                StatementOutcome::Timeout
            } else {
                StatementOutcome::Unsolved
            };
            result.passes_used = r.passes.len();
            result.expansions = r.total_expansions();
            result.generator_calls = r.total_generator_calls();
            result.max_calls_per_pass = r.passes.iter().map(|p| p.stats.generator_calls).max().unwrap_or(0);
            result.max_candidates_per_call =
                r.passes.iter().map(|p| p.stats.max_candidates_per_call).max().unwrap_or(0);
            result.script = r.script;
            if config.keep_trees {
                result.trees = r.passes;
            }
        }
        Err(e) => {
            result.outcome = StatementOutcome::Error;
            result.error = Some(e.to_string());
        }
    }
    result.wall_time = started.elapsed();
    result
}

/// Pass@K over `pool`. Per-statement failures are recorded, never fatal.
pub fn evaluate(
    pool: &[ProofTask],
    config: &EvalConfig,
    prover: &Prover<'_>,
    config_digest: &str,
) -> Result<EvalReport, EvalError> {
    if pool.is_empty() {
        return Err(EvalError::EmptyPool);
    }
    config.pass.validate()?;
    if config.passes == 0 {
        return Err(SearchError::Config("at least one pass is required".into()).into());
    }
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let statements = threads.install(|| pool.par_iter().map(|t| attempt(prover, t, config)).collect());
    Ok(EvalReport {
        system: config.system.clone(),
        budget: SamplingBudget { passes: config.passes, samples_per_step: config.pass.samples_per_step },
        config_digest: config_digest.to_string(),
        seed: config.pass.seed,
        statements,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format {other:?} (expected markdown or csv)")),
        }
    }
}

fn outcome_str(o: StatementOutcome) -> &'static str {
    match o {
        StatementOutcome::Solved => "solved",
        StatementOutcome::Unsolved => "unsolved",
        StatementOutcome::Timeout => "timeout",
        StatementOutcome::Error => "error",
    }
}

pub fn emit_report(report: &EvalReport, format: ReportFormat) -> String {
    let meta = report.meta();
    match format {
        ReportFormat::Markdown => {
            let mut out = format!("<!-- config_digest={} seed={} -->\n", meta.config_digest, meta.seed);
            out.push_str("| System | Budget | Success rate |\n| --- | --- | --- |\n");
            let _ = writeln!(out, "| {} | {} | {} |", report.system, report.budget, report.rate_string());
            out.push_str("\n| Statement | Result | Passes | Expansions |\n| --- | --- | --- | --- |\n");
            for s in &report.statements {
                let _ =
                    writeln!(out, "| {} | {} | {} | {} |", s.id, outcome_str(s.outcome), s.passes_used, s.expansions);
            }
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(
                format!("# config_digest={} seed={}\n", meta.config_digest, meta.seed).into_bytes(),
            );
            w.write_record(["system", "budget", "success_rate"]).expect("in-memory csv");
            w.write_record([report.system.clone(), report.budget.to_string(), report.rate_string()])
                .expect("in-memory csv");
            String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
        }
    }
}

pub fn write_report(path: &Path, report: &EvalReport, format: ReportFormat) -> Result<(), EvalError> {
    std::fs::write(path, emit_report(report, format))
        .map_err(|e| ArtifactError::Io { path: path.display().to_string(), source: e })?;
    Ok(())
}

/// Per-statement results as JSONL.
pub fn write_results(path: &Path, report: &EvalReport) -> Result<(), EvalError> {
    write_jsonl(path, Some(&report.meta()), &report.statements)?;
    Ok(())
}

/// One snapshot per pass, named `<id>.pass<i>.jsonl`. Needs `keep_trees`.
pub fn write_trees(dir: &Path, report: &EvalReport) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir).map_err(|e| ArtifactError::Io { path: dir.display().to_string(), source: e })?;
    for s in &report.statements {
        for (i, tree) in s.trees.iter().enumerate() {
            write_snapshot(&dir.join(format!("{}.pass{i}.jsonl", s.id)), &report.meta(), tree)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::KernelFactory;
    use crate::generator::{PolicyMode, ToyPolicy};

    fn pool(statements: &[&str]) -> Vec<ProofTask> {
        statements.iter().enumerate().map(|(i, s)| ProofTask::new(format!("t{}", i + 1), *s)).collect()
    }

    fn config(passes: usize) -> EvalConfig {
        EvalConfig { passes, pass: PassConfig { max_expansions: 50, ..PassConfig::default() }, ..EvalConfig::default() }
    }

    #[test]
    fn two_of_three() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        let report = evaluate(&pool(&["A -> A", "⊥", "A /\\ B -> A"]), &config(1), &prover, "abc").unwrap();
        assert_eq!(report.solved_count(), 2);
        assert_eq!(report.rate_string(), "66.7 %");
        assert_eq!(report.statements[1].outcome, StatementOutcome::Unsolved);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        assert!(matches!(evaluate(&[], &config(1), &prover, "abc"), Err(EvalError::EmptyPool)));
    }

    #[test]
    fn bad_statement_is_recorded() {
        let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
        let prover = Prover::new(&policy, &KernelFactory);
        let report = evaluate(&pool(&["A ->", "A -> A"]), &config(1), &prover, "abc").unwrap();
        assert_eq!(report.statements[0].outcome, StatementOutcome::Error);
        assert!(report.statements[0].error.is_some());
        assert!(report.statements[1].solved());
    }

    fn fake_report(solved: usize, total: usize) -> EvalReport {
        let statements = (0..total)
            .map(|i| StatementResult {
                id: format!("t{i}"),
                outcome: if i < solved { StatementOutcome::Solved } else { StatementOutcome::Unsolved },
                passes_used: 1,
                expansions: 1,
                generator_calls: 1,
                max_calls_per_pass: 1,
                max_candidates_per_call: 1,
                script: None,
                error: None,
                wall_time: Duration::from_millis(i as u64),
                trees: vec![],
            })
            .collect();
        EvalReport {
            system: "stepprove".into(),
            budget: SamplingBudget { passes: 64, samples_per_step: 64 },
            config_digest: "0011223344556677".into(),
            seed: 0,
            statements,
        }
    }

    #[test]
    fn markdown_row_format() {
        let md = emit_report(&fake_report(17, 30), ReportFormat::Markdown);
        assert!(md.contains("| stepprove | 64 × 64 | 56.7 % |\n"));
        assert_eq!(md, emit_report(&fake_report(17, 30), ReportFormat::Markdown));
    }

    #[test]
    fn csv_round_trips() {
        let text = emit_report(&fake_report(17, 30), ReportFormat::Csv);
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap(), vec!["system", "budget", "success_rate"]);
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(&rows[0], vec!["stepprove", "64 × 64", "56.7 %"]);
    }

    #[test]
    fn format_names() {
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("html".parse::<ReportFormat>().is_err());
    }
}
