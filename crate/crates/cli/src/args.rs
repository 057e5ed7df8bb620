use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Best-first tactic search with premise retrieval, statement formalization,
/// expert iteration, and pass@K evaluation.
#[derive(Debug, Parser)]
#[command(name = "stepprove", version)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for statement-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a proof of one statement and print the tactic script.
    Prove(ProveArgs),
    /// Tactic environment commands.
    #[command(subcommand)]
    Env(EnvCommand),
    /// Build or query a premise index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Train the premise embedder.
    #[command(subcommand)]
    Retrain(RetrainCommand),
    /// Statement formalization with round-trip filtering.
    #[command(subcommand)]
    Herald(HeraldCommand),
    /// Run expert-iteration rounds over a statement pool.
    Iterate(IterateArgs),
    /// Pass@K evaluation over a statement pool.
    Eval(EvalArgs),
    /// Prove a pool and merge the harvested state-tactic pairs into a dataset.
    ExtractPairs(ExtractPairsArgs),
}

#[derive(Debug, Subcommand)]
pub enum EnvCommand {
    /// Serve the built-in kernel over stdin/stdout, one JSON message per line.
    Serve,
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Embed a premise corpus and save the index.
    Build(IndexBuildArgs),
    /// Print the top-k premises for a query.
    Search(IndexSearchArgs),
}

#[derive(Debug, Subcommand)]
pub enum RetrainCommand {
    /// Contrastive training with in-batch negatives.
    Stage1(Stage1Args),
    /// Mine one hard negative per training pair.
    Mine(MineArgs),
    /// Triplet training against mined negatives.
    Stage2(Stage2Args),
}

#[derive(Debug, Subcommand)]
pub enum HeraldCommand {
    /// Extract, formalize, back-translate, judge, and keep consistent statements.
    Run(HeraldRunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MockArg {
    /// Wrapping formalizer, echoing informalizer, exact-match judge.
    Echo,
    /// Distinct-suffix formalizer and an informalizer that alters the
    /// candidates marked corrupted in `--labels`.
    Fixture,
}

/// Where the retriever's corpus, weights, and index come from.
#[derive(Debug, Args, Default)]
pub struct RetrievalArgs {
    /// Premise corpus (JSONL); enables retrieval.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,

    /// Embedder checkpoint; a freshly seeded embedder is used otherwise.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,

    /// Saved index for the corpus; rebuilt from the embedder when absent.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SearchArgs {
    /// Independent search passes per statement (K).
    #[arg(long)]
    pub passes: Option<usize>,

    /// Tactic candidates requested per expansion (N).
    #[arg(long)]
    pub samples: Option<usize>,

    /// Expansions allowed per pass, root included (E).
    #[arg(long)]
    pub expansions: Option<usize>,

    /// Length-normalization exponent in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Sampling temperature passed to the generator.
    #[arg(long)]
    pub temperature: Option<f64>,

    /// Premises retrieved into each prompt.
    #[arg(long)]
    pub top_k: Option<usize>,

    /// Wall-clock limit per pass, in seconds.
    #[arg(long, value_name = "SECS")]
    pub time_limit: Option<f64>,

    /// External environment command line; the built-in kernel otherwise.
    #[arg(long, value_name = "CMD")]
    pub env_cmd: Option<String>,

    /// Completion endpoint for tactic generation (falls back to STEPPROVE_GEN_URL).
    #[arg(long, value_name = "URL")]
    pub gen_url: Option<String>,

    /// Toy policy mode used when no endpoint is configured.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,

    /// Toy policy snapshot written by `iterate`.
    #[arg(long, value_name = "FILE")]
    pub policy_file: Option<PathBuf>,

    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    /// Statement to prove.
    #[arg(long)]
    pub statement: String,

    /// Natural-language description shown to the generator.
    #[arg(long)]
    pub nl: Option<String>,

    /// Write the search tree of the last pass as JSONL.
    #[arg(long, value_name = "FILE")]
    pub snapshot: Option<PathBuf>,

    /// Write the proof script to a file as well as stdout.
    #[arg(long, value_name = "FILE")]
    pub script_out: Option<PathBuf>,

    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct IndexBuildArgs {
    #[command(flatten)]
    pub retrieval: RetrievalArgs,

    /// Output index file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexSearchArgs {
    #[command(flatten)]
    pub retrieval: RetrievalArgs,

    /// Query text, typically a rendered proof state.
    #[arg(long)]
    pub query: String,

    /// Number of premises to return.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Passes over the training data.
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Gradient step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,

    /// Pairs or triplets per minibatch.
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Loss margin.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Stage1Args {
    /// Premise corpus (JSONL).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    /// Training pairs (JSONL `{"state","pos_id"}`).
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,

    /// Starting checkpoint; a freshly seeded embedder otherwise.
    #[arg(long, value_name = "FILE")]
    pub init: Option<PathBuf>,

    /// Output checkpoint.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Write per-epoch losses as JSON.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,

    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Premise corpus (JSONL).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    /// Training pairs (JSONL `{"state","pos_id"}`).
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,

    /// Embedder checkpoint used to rank negatives.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,

    /// Output triplets (JSONL `{"state","pos_id","neg_id"}`).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// First rank (1-based, among non-positives) eligible as a negative.
    #[arg(long)]
    pub window_lo: Option<usize>,

    /// Last eligible rank.
    #[arg(long)]
    pub window_hi: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Stage2Args {
    /// Premise corpus (JSONL).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    /// Mined triplets.
    #[arg(long, value_name = "FILE")]
    pub triplets: PathBuf,

    /// Stage-one checkpoint to continue from.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,

    /// Output checkpoint.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Write per-epoch losses as JSON.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,

    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct HeraldRunArgs {
    /// Input documents: plain text, or JSONL `{"id","text"}`.
    #[arg(long = "input", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,

    /// Output formalization records (JSONL).
    #[arg(long, value_name = "FILE")]
    pub records: PathBuf,

    /// Output statement pool, one accepted statement per line.
    #[arg(long, value_name = "FILE")]
    pub pool: PathBuf,

    /// Formal candidates per statement.
    #[arg(long)]
    pub fan_out: Option<usize>,

    /// Reject accepted statements the environment cannot start a proof of.
    #[arg(long)]
    pub gate: bool,

    /// External environment command line for the gate.
    #[arg(long, value_name = "CMD")]
    pub env_cmd: Option<String>,

    /// Offline model clients instead of an endpoint.
    #[arg(long, value_enum)]
    pub mock: Option<MockArg>,

    /// Slot labels (JSONL `{"formal","corrupted"}`) for `--mock fixture`.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,

    /// Completion endpoint shared by all roles (falls back to STEPPROVE_GEN_URL).
    #[arg(long, value_name = "URL")]
    pub model_url: Option<String>,

    /// Rewrite extracted blocks with a refiner before formalizing.
    #[arg(long)]
    pub refine: bool,

    /// Requests per second across all remote clients; 0 disables the limit.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    /// Statement pool: one statement per line, or JSONL `{"id","statement","nl"}`.
    #[arg(long, value_name = "FILE")]
    pub pool: PathBuf,

    /// Directory for the pair dataset, round ledger, and policy snapshots.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Number of rounds.
    #[arg(long)]
    pub rounds: Option<usize>,

    /// Attempt statements again after they have been solved.
    #[arg(long)]
    pub resolve_solved: bool,

    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Statement pool: one statement per line, or JSONL `{"id","statement","nl"}`.
    #[arg(long, value_name = "FILE")]
    pub pool: PathBuf,

    /// Output report file.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,

    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    pub format: FormatArg,

    /// Write per-statement results as JSONL.
    #[arg(long, value_name = "FILE")]
    pub results: Option<PathBuf>,

    /// Write every pass's search tree into this directory.
    #[arg(long, value_name = "DIR")]
    pub snapshots: Option<PathBuf>,

    /// Per-statement wall-clock limit in seconds; 0 disables it.
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<f64>,

    /// System name in the report.
    #[arg(long)]
    pub system: Option<String>,

    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct ExtractPairsArgs {
    /// Statement pool: one statement per line, or JSONL `{"id","statement","nl"}`.
    #[arg(long, value_name = "FILE")]
    pub pool: PathBuf,

    /// Pair dataset to merge into; created if missing.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Skip malformed lines in the existing dataset instead of failing.
    #[arg(long)]
    pub permissive: bool,

    /// Round number recorded on the new pairs.
    #[arg(long, default_value_t = 0)]
    pub round: usize,

    #[command(flatten)]
    pub search: SearchArgs,
}
