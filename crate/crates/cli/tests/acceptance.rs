//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Every tolerance is pinned below.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stepprove::bundled;
use stepprove::env::{ExternalEnvironment, KernelFactory};
use stepprove::eval::{evaluate, EvalConfig};
use stepprove::generator::{PolicyMode, ToyPolicy};
use stepprove::herald::{self, ClientRole, HeraldClients, HeraldConfig, MockBehavior, MockClient};
use stepprove::iteration::{pair_replays, run_iteration};
use stepprove::kernel::{oracle_provable, parse_formula};
use stepprove::retrieval::embedder::{Role, ToyEmbedder};
use stepprove::retrieval::mining::{clip_window, rank_negatives, DEFAULT_WINDOW};
use stepprove::retrieval::train::{contrastive_objective, triplet_objective};
use stepprove::retrieval::{
    gradient_check, mine_hard_negatives, recall_at_k, train_stage1, train_stage2, Embedding, Index, Premise, Retriever,
    StageConfig,
};
use stepprove::search::{score_node, PassConfig, Prover};

const SCORE_REL_TOL: f64 = 1e-12;
const SCORE_TRIPLES: usize = 1000;
const SCORE_TIME_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_DEPTH: u32 = 8;
const TOY_EXPANSIONS: usize = 200;
const MIN_LOSS_DROP: f64 = 0.5;
const GRAD_REL_TOL: f64 = 1e-5;
const GRAD_STEP: f64 = 1e-6;
const GRAD_SAMPLES: usize = 40;
const MIN_RECALL_AT_10: f64 = 0.9;
const TOPK_CORPORA: usize = 100;
const PASS_AT_1_SOLVED: usize = 24;
const PASS_AT_4_SOLVED: usize = 26;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(fail.into())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn c1_scoring() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..SCORE_TRIPLES {
        let cumulative = -rng.random_range(0.0..50.0);
        let length: u32 = rng.random_range(1..40);
        let alpha = rng.random_range(0.0..=1.0);
        let got = score_node(cumulative, length, alpha).map_err(|e| e.to_string())?;
        let want = cumulative / (length as f64).powf(alpha);
        worst = worst.max(rel_err(got, want));
    }
    let elapsed = started.elapsed();
    check(
        worst <= SCORE_REL_TOL && elapsed < SCORE_TIME_LIMIT,
        format!("{SCORE_TRIPLES} triples, max rel err {worst:.1e}, {elapsed:?}"),
        format!("max rel err {worst:.1e} (tol {SCORE_REL_TOL:.0e}), {elapsed:?}"),
    )
}

fn c2_toy_corpus() -> Outcome {
    let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
    let prover = Prover::new(&policy, &KernelFactory);
    let config = PassConfig { max_expansions: TOY_EXPANSIONS, ..PassConfig::default() };
    let corpus = bundled::toy_corpus();
    let mut mismatches = Vec::new();
    let mut provable = 0;
    for task in &corpus {
        let formula = parse_formula(&task.statement).map_err(|e| e.to_string())?;
        let oracle = oracle_provable(&formula, ORACLE_DEPTH).provable;
        provable += usize::from(oracle);
        let solved = prover.run_pass(task, &config).map_err(|e| e.to_string())?.solved();
        if oracle != solved {
            mismatches.push(task.id.clone());
        }
    }
    check(
        mismatches.is_empty(),
        format!("{} statements agree with the oracle ({provable} provable)", corpus.len()),
        format!("disagreements: {mismatches:?}"),
    )
}

fn run_eval(dir: &Path, jobs: &str) -> Result<(), String> {
    let corpus = dir.join("corpus.txt");
    std::fs::write(&corpus, bundled::TOY_CORPUS).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_stepprove"))
        .current_dir(dir)
        .args(["--seed", "11", "--jobs", jobs, "eval", "--pool", "corpus.txt", "--report", "report.md"])
        .args(["--results", "results.jsonl", "--snapshots", "trees", "--passes", "2", "--expansions", "40"])
        .args(["--policy", "sampled", "--samples", "6"])
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok(())
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("under dir").display().to_string();
                out.push((rel, std::fs::read(&path).expect("readable file")));
            }
        }
    }
    out.sort();
    out
}

fn c3_reproducible_sweeps() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_eval(a.path(), "1")?;
    run_eval(b.path(), "4")?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<&String> = fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| &x.0).collect();
    check(
        fa.len() == fb.len() && differing.is_empty() && fa.len() > 3,
        format!("{} files byte-identical across two sweeps (1 and 4 workers)", fa.len()),
        format!("{} vs {} files; differing: {differing:?}", fa.len(), fb.len()),
    )
}

fn c4_budget_accounting() -> Outcome {
    let policy = ToyPolicy::uniform(PolicyMode::Exhaustive);
    let prover = Prover::new(&policy, &KernelFactory);
    let (n, e, k) = (3, 12, 4);
    let config = EvalConfig {
        passes: k,
        pass: PassConfig { samples_per_step: n, max_expansions: e, ..PassConfig::default() },
        ..EvalConfig::default()
    };
    let report = evaluate(&bundled::toy_corpus(), &config, &prover, "budget").map_err(|e| e.to_string())?;
    let over: Vec<&str> = report
        .statements
        .iter()
        .filter(|s| s.max_calls_per_pass > e || s.max_candidates_per_call > n || s.passes_used > k)
        .map(|s| s.id.as_str())
        .collect();
    let budget = report.budget.to_string();
    check(
        over.is_empty() && budget == "4 × 3",
        format!("calls <= {e}, candidates <= {n}, passes <= {k} for every statement; budget {budget:?}"),
        format!("over budget: {over:?}; budget string {budget:?}"),
    )
}

fn c5_retrieval_training() -> Outcome {
    let premises = bundled::synthetic_premises();
    let pairs = bundled::synthetic_pairs();
    let start = ToyEmbedder::with_defaults(0);
    let (s1, log1) = train_stage1(&start, &pairs, &premises, &StageConfig::stage1()).map_err(|e| e.to_string())?;
    let (first, last) = (log1.first().unwrap_or(0.0), log1.last().unwrap_or(f64::INFINITY));
    let drop = 1.0 - last / first;

    let batch: Vec<(&str, &Premise)> =
        pairs[..8].iter().map(|p| (p.state.as_str(), &premises[p.positive as usize])).collect();
    let g1 = gradient_check(&start, GRAD_SAMPLES, GRAD_STEP, |emb| contrastive_objective(emb, &batch, 1.0))
        .map_err(|e| e.to_string())?;
    let window = clip_window(DEFAULT_WINDOW, premises.len());
    let triplets = mine_hard_negatives(&s1, &pairs, &premises, DEFAULT_WINDOW, 3).map_err(|e| e.to_string())?;
    let tbatch: Vec<(&str, &Premise, &Premise)> = triplets[..8]
        .iter()
        .map(|t| (t.state.as_str(), &premises[t.positive as usize], &premises[t.negative as usize]))
        .collect();
    let g2 = gradient_check(&start, GRAD_SAMPLES, GRAD_STEP, |emb| triplet_objective(emb, &tbatch, 2.0))
        .map_err(|e| e.to_string())?;

    let passages: Vec<(u32, Embedding)> =
        premises.iter().map(|p| (p.id, s1.embed(&p.passage_text(), Role::Passage).expect("embeds"))).collect();
    let mut outside = 0;
    for t in &triplets {
        let q = s1.embed(&t.state, Role::Query).map_err(|e| e.to_string())?;
        let rank = rank_negatives(&q, &passages, t.positive).iter().position(|(id, _)| *id == t.negative);
        if t.negative == t.positive || !rank.is_some_and(|r| (window.0..=window.1).contains(&(r + 1))) {
            outside += 1;
        }
    }

    let (s2, _) = train_stage2(&s1, &triplets, &premises, &StageConfig::stage2()).map_err(|e| e.to_string())?;
    let r1 = recall_at_k(&Retriever::new(s1, &premises).map_err(|e| e.to_string())?, &pairs, 10)
        .map_err(|e| e.to_string())?;
    let r2 = recall_at_k(&Retriever::new(s2, &premises).map_err(|e| e.to_string())?, &pairs, 10)
        .map_err(|e| e.to_string())?;
    let summary = format!(
        "loss {first:.3} -> {last:.3} ({:.0}% drop), grad err {g1:.1e}/{g2:.1e}, recall@10 {r1:.3}/{r2:.3}, {outside} negatives outside [{}, {}]",
        100.0 * drop,
        window.0,
        window.1
    );
    let ok = drop >= MIN_LOSS_DROP
        && g1 <= GRAD_REL_TOL
        && g2 <= GRAD_REL_TOL
        && r1 >= MIN_RECALL_AT_10
        && r2 >= MIN_RECALL_AT_10
        && outside == 0;
    check(ok, summary.clone(), summary)
}

fn c6_cosine_equals_euclidean() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut disagreements = 0;
    for _ in 0..TOPK_CORPORA {
        let size = rng.random_range(5..60);
        let dim = rng.random_range(2..24);
        let k = rng.random_range(1..=size);
        let premises: Vec<Premise> = (0..size as u32)
            .map(|id| Premise {
                id,
                formal_name: format!("p{id}"),
                informal_name: String::new(),
                formal_statement: String::new(),
            })
            .collect();
        let vectors: Vec<Vec<f64>> =
            (0..size).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let index = Index::from_vectors(premises, vectors).map_err(|e| e.to_string())?;
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let query = Embedding(raw.iter().map(|x| x / norm).collect());
        let by_cosine: Vec<u32> = index.search_top_k(&query, k).iter().map(|h| h.premise.id).collect();
        let mut by_distance: Vec<(u32, f64)> =
            index.premises().iter().zip(index.vectors()).map(|(p, v)| (p.id, -query.distance(v))).collect();
        by_distance.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let by_distance: Vec<u32> = by_distance.into_iter().take(k).map(|(id, _)| id).collect();
        disagreements += usize::from(by_cosine != by_distance);
    }
    check(
        disagreements == 0,
        format!("{TOPK_CORPORA} random corpora, identical top-k"),
        format!("{disagreements} corpora disagree"),
    )
}

fn c7_round_trip_filter() -> Outcome {
    let fixture = bundled::corrupted_fixture();
    let formalizer = MockClient::new(ClientRole::Formalizer, MockBehavior::DistinctSuffix);
    let informalizer = MockClient::new(ClientRole::Informalizer, MockBehavior::Corrupting(fixture.planted()));
    let judge = MockClient::new(ClientRole::Judge, MockBehavior::ExactMatchJudge);
    let clients = HeraldClients { refiner: None, formalizer: &formalizer, informalizer: &informalizer, judge: &judge };
    let config = HeraldConfig { fan_out: fixture.fan_out, ..HeraldConfig::default() };
    let records = herald::run_pipeline(std::slice::from_ref(&fixture.document), &config, &clients, None)
        .map_err(|e| e.to_string())?;
    let accepted: BTreeSet<String> = records.iter().flat_map(|r| r.accepted.iter().cloned()).collect();
    let clean = fixture.clean();
    let total = fixture.labels.len();
    check(
        accepted == clean && clean.len() * 2 == total,
        format!("accepted exactly the {} clean of {total} candidates", clean.len()),
        format!("accepted {} (clean {}, planted {})", accepted.len(), clean.len(), fixture.planted().len()),
    )
}

fn c8_expert_iteration() -> Outcome {
    let demo = bundled::iteration_demo();
    let outcome =
        run_iteration(&demo.pool, &demo.config, &demo.policy, &KernelFactory, None, None).map_err(|e| e.to_string())?;
    let cumulative = outcome.cumulative_solved();
    let monotone = cumulative.windows(2).all(|w| w[0] <= w[1]);
    let improves = cumulative.len() >= 2 && cumulative[1] > cumulative[0];
    let replayed = outcome
        .dataset
        .iter()
        .filter(|pair| {
            demo.pool.iter().find(|t| t.id == pair.statement_id).is_some_and(|t| pair_replays(pair, t, &KernelFactory))
        })
        .count();
    check(
        monotone && improves && replayed == outcome.dataset.len() && !outcome.dataset.is_empty(),
        format!("cumulative solved {cumulative:?}, {replayed}/{} pairs replay", outcome.dataset.len()),
        format!("cumulative solved {cumulative:?}, {replayed}/{} pairs replay", outcome.dataset.len()),
    )
}

fn c9_protocol_transcript() -> Outcome {
    let transcript = include_str!("fixtures/env_transcript.txt");
    let mut env = ExternalEnvironment::spawn(env!("CARGO_BIN_EXE_stepprove"), &["env".into(), "serve".into()])
        .map_err(|e| e.to_string())?;
    let lines: Vec<&str> = transcript.lines().collect();
    let mut exchanges = 0;
    for (i, pair) in lines.chunks(2).enumerate() {
        let (Some(request), Some(expected)) =
            (pair[0].strip_prefix("> "), pair.get(1).and_then(|l| l.strip_prefix("< ")))
        else {
            return Err(format!("malformed fixture at exchange {}", i + 1));
        };
        let reply = env.exchange_line(request).map_err(|e| e.to_string())?;
        if reply != expected {
            return Err(format!("exchange {}: expected {expected}, got {reply}", i + 1));
        }
        exchanges += 1;
    }
    let covered =
        ["\"error\":\"unknown-state\"", "\"error\":\"parse-error\"", "\"error\":\"inapplicable\"", "\"complete\":true"]
            .iter()
            .all(|needle| transcript.contains(needle));
    check(
        lines.len() == 200 && covered,
        format!("{} messages ({exchanges} exchanges) replayed byte-exactly", lines.len()),
        format!("{} messages; error paths covered: {covered}", lines.len()),
    )
}

fn c10_pass_at_k() -> Outcome {
    let policy = ToyPolicy::uniform(PolicyMode::Sampled);
    let prover = Prover::new(&policy, &KernelFactory);
    let corpus = bundled::toy_corpus();
    let solved = |passes| -> Result<BTreeSet<String>, String> {
        let config = EvalConfig {
            passes,
            pass: PassConfig { samples_per_step: 2, max_expansions: 6, seed: 5, ..PassConfig::default() },
            ..EvalConfig::default()
        };
        let report = evaluate(&corpus, &config, &prover, "pass-at-k").map_err(|e| e.to_string())?;
        Ok(report.statements.iter().filter(|s| s.solved()).map(|s| s.id.clone()).collect())
    };
    let (at1, at4) = (solved(1)?, solved(4)?);
    let summary = format!("pass@1 {} / pass@4 {} of {}", at1.len(), at4.len(), corpus.len());
    check(
        at1.is_subset(&at4) && at1.len() == PASS_AT_1_SOLVED && at4.len() == PASS_AT_4_SOLVED,
        summary.clone(),
        format!(
            "{summary} (expected {PASS_AT_1_SOLVED} / {PASS_AT_4_SOLVED}, pass@1 subset of pass@4: {})",
            at1.is_subset(&at4)
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("score formula", c1_scoring),
        ("toy corpus vs oracle", c2_toy_corpus),
        ("reproducible sweeps", c3_reproducible_sweeps),
        ("budget accounting", c4_budget_accounting),
        ("retrieval training", c5_retrieval_training),
        ("cosine vs euclidean top-k", c6_cosine_equals_euclidean),
        ("round-trip filter", c7_round_trip_filter),
        ("expert iteration", c8_expert_iteration),
        ("protocol transcript", c9_protocol_transcript),
        ("pass@k monotone", c10_pass_at_k),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
