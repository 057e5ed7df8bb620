//! Data files shipped with the crate, and the demo scenarios built on them.

use crate::artifact::parse_jsonl;
use crate::generator::{PolicyMode, ToyPolicy};
use crate::herald::fixture::{CorruptedFixture, SlotLabel};
use crate::herald::Document;
use crate::iteration::IterationConfig;
use crate::pool::parse_pool;
use crate::retrieval::{PairRecord, Premise, TrainPair};
use crate::search::{PassConfig, ProofTask};

/// Fifty propositional statements, provable and unprovable.
pub const TOY_CORPUS: &str = include_str!("../data/toy_corpus.txt");
pub const DEMO_PREMISES: &str = include_str!("../data/demo_premises.jsonl");
pub const SYNTHETIC_PREMISES: &str = include_str!("../data/synthetic/premises.jsonl");
pub const SYNTHETIC_PAIRS: &str = include_str!("../data/synthetic/pairs.jsonl");
pub const CORRUPTED_CORPUS: &str = include_str!("../data/herald/corrupted_corpus.txt");
pub const CORRUPTED_LABELS: &str = include_str!("../data/herald/corrupted_labels.jsonl");
pub const ITERATION_DEMO_POOL: &str = include_str!("../data/iteration_demo/pool.txt");

/// Fan-out the corrupted corpus was generated with.
pub const CORRUPTED_FAN_OUT: usize = 4;

fn records<T: serde::de::DeserializeOwned>(text: &str, name: &str) -> Vec<T> {
    parse_jsonl(text.as_bytes(), name, false).expect("bundled file parses").records
}

pub fn toy_corpus() -> Vec<ProofTask> {
    parse_pool(TOY_CORPUS, "toy_corpus.txt").expect("bundled corpus parses")
}

pub fn demo_premises() -> Vec<Premise> {
    records(DEMO_PREMISES, "demo_premises.jsonl")
}

pub fn synthetic_premises() -> Vec<Premise> {
    records(SYNTHETIC_PREMISES, "synthetic/premises.jsonl")
}

pub fn synthetic_pairs() -> Vec<TrainPair> {
    records::<PairRecord>(SYNTHETIC_PAIRS, "synthetic/pairs.jsonl").iter().map(PairRecord::pair).collect()
}

pub fn corrupted_fixture() -> CorruptedFixture {
    CorruptedFixture {
        document: Document { id: "corrupted".into(), text: CORRUPTED_CORPUS.into() },
        fan_out: CORRUPTED_FAN_OUT,
        labels: records::<SlotLabel>(CORRUPTED_LABELS, "herald/corrupted_labels.jsonl"),
    }
}

/// Three rounds over an intro-heavy pool with a small expansion budget.
#[derive(Clone, Debug)]
pub struct IterationDemo {
    pub pool: Vec<ProofTask>,
    pub config: IterationConfig,
    pub policy: ToyPolicy,
}

pub fn iteration_demo() -> IterationDemo {
    IterationDemo {
        pool: parse_pool(ITERATION_DEMO_POOL, "iteration_demo/pool.txt").expect("bundled pool parses"),
        config: IterationConfig {
            rounds: 3,
            passes: 1,
            pass: PassConfig { samples_per_step: 8, max_expansions: 6, seed: 7, ..PassConfig::default() },
            resolve_solved: false,
            jobs: 1,
        },
        policy: ToyPolicy::uniform(PolicyMode::Sampled),
    }
}
