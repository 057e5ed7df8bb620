//! Statement formalization with round-trip filtering.
//!
//! Theorem-like blocks are pulled out of informal documents, optionally
//! rewritten by a refiner, turned into several formal candidates, translated
//! back to natural language, and kept only when a judge finds the
//! back-translation consistent with the original.

pub mod clients;
pub mod fixture;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{read_jsonl, write_jsonl, write_text_lines, ArtifactError, ArtifactMeta};
use crate::env::EnvironmentFactory;
use crate::kernel::ApplyResult;

pub use clients::{MockBehavior, MockClient, ModelClient, ModelRequest, RateLimiter, RemoteModelClient, RoleTemplates};

pub const DEFAULT_FAN_OUT: usize = 4;

pub const DEFAULT_PATTERNS: &[&str] =
    &[r"(?m)^(?:Theorem|Exercise|Proposition)\b[^\n.:]*[.:][ \t]*(?P<body>[^\n]+(?:\n[^\n]+)*)"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientRole {
    Formalizer,
    Informalizer,
    Judge,
    Refiner,
}

impl fmt::Display for ClientRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClientRole::Formalizer => "formalizer",
            ClientRole::Informalizer => "informalizer",
            ClientRole::Judge => "judge",
            ClientRole::Refiner => "refiner",
        })
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("empty output")]
    Empty,
}

#[derive(Debug, Error)]
pub enum HeraldError {
    #[error("invalid block pattern {pattern:?}: {message}")]
    Pattern { pattern: String, message: String },
    #[error("expected a {expected} client, got a {actual} client")]
    WrongRole { expected: ClientRole, actual: ClientRole },
    #[error("fan-out must be at least 1")]
    ZeroFanOut,
    #[error("{id}: {source}")]
    Client { id: String, source: ModelError },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Byte span of a block inside its document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub document: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBlock {
    pub id: String,
    pub source: SourceRef,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformalStatement {
    pub id: String,
    pub source: SourceRef,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgement {
    pub verdict: Verdict,
    pub rationale: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub formal: Option<String>,
    pub back_translation: Option<String>,
    pub verdict: Verdict,
    pub rationale: String,
}

impl Candidate {
    fn failed(formal: Option<String>, rationale: impl Into<String>) -> Self {
        Self { formal, back_translation: None, verdict: Verdict::Error, rationale: rationale.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalizationRecord {
    pub informal: InformalStatement,
    pub candidates: Vec<Candidate>,
    pub accepted: Vec<String>,
}

impl FormalizationRecord {
    fn finish(informal: InformalStatement, candidates: Vec<Candidate>) -> Self {
        let accepted =
            candidates.iter().filter(|c| c.verdict == Verdict::Consistent).filter_map(|c| c.formal.clone()).collect();
        Self { informal, candidates, accepted }
    }
}

/// Lowercase with runs of whitespace collapsed to one space.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// The statement inside `example : S := by`, `theorem name : S := by ...`.
/// Text without such a wrapper is returned trimmed.
pub fn formal_body(text: &str) -> &str {
    let t = text.trim();
    let t = t.rfind(":=").map_or(t, |i| t[..i].trim_end());
    if let Some(rest) = t.strip_prefix("example") {
        if let Some(s) = rest.trim_start().strip_prefix(':') {
            return s.trim();
        }
    }
    for keyword in ["theorem", "lemma"] {
        if let Some(rest) = t.strip_prefix(keyword).filter(|r| r.starts_with(char::is_whitespace)) {
            let rest = rest.trim_start();
            let after_name = rest.find(char::is_whitespace).map_or("", |i| &rest[i..]);
            if let Some(s) = after_name.trim_start().strip_prefix(':') {
                return s.trim();
            }
        }
    }
    t
}

fn check_role(client: &dyn ModelClient, expected: ClientRole) -> Result<(), HeraldError> {
    match client.role() {
        actual if actual == expected => Ok(()),
        actual => Err(HeraldError::WrongRole { expected, actual }),
    }
}

pub fn compile_patterns(patterns: &[String]) -> Result<Vec<Regex>, HeraldError> {
    patterns
        .iter()
        .map(|p| Regex::new(p).map_err(|e| HeraldError::Pattern { pattern: p.clone(), message: e.to_string() }))
        .collect()
}

/// Non-overlapping matches of any pattern, in document order. A `body` capture
/// group, when present, supplies the block text.
pub fn extract_blocks(document: &Document, patterns: &[Regex]) -> Vec<RawBlock> {
    let mut found: Vec<(usize, usize, String)> = Vec::new();
    for re in patterns {
        for caps in re.captures_iter(&document.text) {
            let whole = caps.get(0).expect("group 0");
            let text = caps.name("body").unwrap_or(whole).as_str().trim().to_string();
            if !text.is_empty() {
                found.push((whole.start(), whole.end(), text));
            }
        }
    }
    found.sort_by_key(|(s, e, _)| (*s, std::cmp::Reverse(*e)));
    let mut blocks = Vec::new();
    let mut covered = 0;
    for (start, end, text) in found {
        if start < covered {
            continue;
        }
        covered = end;
        blocks.push(RawBlock {
            id: format!("{}#{}", document.id, blocks.len() + 1),
            source: SourceRef { document: document.id.clone(), start, end },
            text,
        });
    }
    blocks
}

pub fn refine_statement(block: &RawBlock, refiner: &dyn ModelClient) -> Result<InformalStatement, HeraldError> {
    check_role(refiner, ClientRole::Refiner)?;
    let client_err = |source| HeraldError::Client { id: block.id.clone(), source };
    let out = refiner.generate(&ModelRequest::text(&block.text), 1).map_err(client_err)?;
    let text = out.into_iter().next().unwrap_or_default();
    if text.trim().is_empty() {
        return Err(client_err(ModelError::Empty));
    }
    Ok(InformalStatement { id: block.id.clone(), source: block.source.clone(), text })
}

fn unrefined(block: &RawBlock) -> InformalStatement {
    InformalStatement { id: block.id.clone(), source: block.source.clone(), text: block.text.clone() }
}

/// Exactly `n` slots; `None` marks a slot the formalizer did not fill.
pub fn autoformalize(
    informal: &InformalStatement,
    n: usize,
    formalizer: &dyn ModelClient,
) -> Result<Vec<Option<String>>, HeraldError> {
    check_role(formalizer, ClientRole::Formalizer)?;
    if n == 0 {
        return Err(HeraldError::ZeroFanOut);
    }
    let out = formalizer
        .generate(&ModelRequest::text(&informal.text), n)
        .map_err(|source| HeraldError::Client { id: informal.id.clone(), source })?;
    let mut slots: Vec<Option<String>> =
        out.into_iter().take(n).map(|s| Some(s.trim().to_string()).filter(|s| !s.is_empty())).collect();
    slots.resize(n, None);
    Ok(slots)
}

pub fn informalize(formal: &str, informalizer: &dyn ModelClient) -> Result<String, ModelError> {
    let out = informalizer.generate(&ModelRequest::text(formal), 1)?;
    match out.into_iter().next() {
        Some(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        _ => Err(ModelError::Empty),
    }
}

pub fn judge_consistency(original: &str, back_translation: &str, judge: &dyn ModelClient) -> Judgement {
    let error = |rationale: String| Judgement { verdict: Verdict::Error, rationale };
    let out = match judge.generate(&ModelRequest::judged(original, back_translation), 1) {
        Ok(out) => out.into_iter().next().unwrap_or_default(),
        Err(e) => return error(e.to_string()),
    };
    let mut lines = out.trim().lines();
    let head = lines.next().unwrap_or("").trim().to_lowercase();
    let rationale = lines.collect::<Vec<_>>().join("\n").trim().to_string();
    let word = head.trim_matches(|c: char| !c.is_alphanumeric());
    let word = word.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("");
    match word {
        "consistent" => Judgement { verdict: Verdict::Consistent, rationale },
        "inconsistent" => Judgement { verdict: Verdict::Inconsistent, rationale },
        _ => error(format!("unrecognized judge output: {head:?}")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeraldConfig {
    pub fan_out: usize,
    pub patterns: Vec<String>,
    pub jobs: usize,
    /// Demote consistent candidates the environment cannot `init`.
    pub well_formedness_gate: bool,
}

impl Default for HeraldConfig {
    fn default() -> Self {
        Self {
            fan_out: DEFAULT_FAN_OUT,
            patterns: DEFAULT_PATTERNS.iter().map(|p| p.to_string()).collect(),
            jobs: 1,
            well_formedness_gate: false,
        }
    }
}

#[derive(Clone, Copy)]
pub struct HeraldClients<'a> {
    pub refiner: Option<&'a dyn ModelClient>,
    pub formalizer: &'a dyn ModelClient,
    pub informalizer: &'a dyn ModelClient,
    pub judge: &'a dyn ModelClient,
}

impl HeraldClients<'_> {
    fn validate(&self) -> Result<(), HeraldError> {
        if let Some(r) = self.refiner {
            check_role(r, ClientRole::Refiner)?;
        }
        check_role(self.formalizer, ClientRole::Formalizer)?;
        check_role(self.informalizer, ClientRole::Informalizer)?;
        check_role(self.judge, ClientRole::Judge)
    }
}

fn gate(formal: &str, envs: &dyn EnvironmentFactory) -> Option<Judgement> {
    let result = envs.open().and_then(|mut env| env.init(formal_body(formal)));
    match result {
        Ok(ApplyResult::Error { class, message }) => Some(Judgement {
            verdict: Verdict::Inconsistent,
            rationale: format!("environment rejected the statement ({class}): {message}"),
        }),
        Ok(_) => None,
        Err(e) => Some(Judgement { verdict: Verdict::Error, rationale: format!("environment unavailable: {e}") }),
    }
}

pub fn process_block(
    block: &RawBlock,
    fan_out: usize,
    clients: &HeraldClients<'_>,
    envs: Option<&dyn EnvironmentFactory>,
) -> FormalizationRecord {
    let informal = match clients.refiner.map(|r| refine_statement(block, r)) {
        None => unrefined(block),
        Some(Ok(s)) => s,
        Some(Err(e)) => {
            let candidates = (0..fan_out).map(|_| Candidate::failed(None, format!("refiner: {e}"))).collect();
            return FormalizationRecord::finish(unrefined(block), candidates);
        }
    };
    let slots = match autoformalize(&informal, fan_out, clients.formalizer) {
        Ok(slots) => slots,
        Err(e) => {
            let candidates = (0..fan_out).map(|_| Candidate::failed(None, format!("formalizer: {e}"))).collect();
            return FormalizationRecord::finish(informal, candidates);
        }
    };
    let candidates = slots
        .into_iter()
        .map(|slot| {
            let Some(formal) = slot else {
                return Candidate::failed(None, "formalizer returned no output for this slot");
            };
            let back = match informalize(&formal, clients.informalizer) {
                Ok(b) => b,
                Err(e) => return Candidate::failed(Some(formal), format!("informalizer: {e}")),
            };
            let mut judgement = judge_consistency(&informal.text, &back, clients.judge);
            if judgement.verdict == Verdict::Consistent {
                if let Some(demoted) = envs.and_then(|envs| gate(&formal, envs)) {
                    judgement = demoted;
                }
            }
            Candidate {
                formal: Some(formal),
                back_translation: Some(back),
                verdict: judgement.verdict,
                rationale: judgement.rationale,
            }
        })
        .collect();
    FormalizationRecord::finish(informal, candidates)
}

/// Records in input order. Per-record failures become error verdicts.
pub fn run_pipeline(
    documents: &[Document],
    config: &HeraldConfig,
    clients: &HeraldClients<'_>,
    envs: Option<&dyn EnvironmentFactory>,
) -> Result<Vec<FormalizationRecord>, HeraldError> {
    if config.fan_out == 0 {
        return Err(HeraldError::ZeroFanOut);
    }
    clients.validate()?;
    let patterns = compile_patterns(&config.patterns)?;
    let blocks: Vec<RawBlock> = documents.iter().flat_map(|d| extract_blocks(d, &patterns)).collect();
    let envs = envs.filter(|_| config.well_formedness_gate);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| HeraldError::Pool(e.to_string()))?;
    Ok(pool.install(|| blocks.par_iter().map(|b| process_block(b, config.fan_out, clients, envs)).collect()))
}

/// Accepted statements, unwrapped, first occurrence only.
pub fn statement_pool(records: &[FormalizationRecord]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .flat_map(|r| &r.accepted)
        .map(|f| formal_body(f).to_string())
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

/// A `.jsonl` file holds `{"id","text"}` documents; anything else is one
/// document named after the file stem.
pub fn load_documents(path: &Path) -> Result<Vec<Document>, HeraldError> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return Ok(read_jsonl(path, false)?.records);
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| ArtifactError::Io { path: path.display().to_string(), source: e })?;
    let id = path.file_stem().map_or_else(|| "doc".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(vec![Document { id, text }])
}

pub fn write_outputs(
    records_path: &Path,
    pool_path: &Path,
    meta: &ArtifactMeta,
    records: &[FormalizationRecord],
) -> Result<(), HeraldError> {
    write_jsonl(records_path, Some(meta), records)?;
    write_text_lines(pool_path, Some(meta), &statement_pool(records))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::KernelFactory;

    fn doc(text: &str) -> Document {
        Document { id: "d".into(), text: text.into() }
    }

    fn default_patterns() -> Vec<Regex> {
        compile_patterns(&HeraldConfig::default().patterns).unwrap()
    }

    fn mock(role: ClientRole, b: MockBehavior) -> MockClient {
        MockClient::new(role, b)
    }

    #[test]
    fn extracts_single_block() {
        let blocks = extract_blocks(&doc("Theorem 1. Groups are monoids.\n\n"), &default_patterns());
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].text, "Groups are monoids.");
        assert_eq!(blocks[0].source, SourceRef { document: "d".into(), start: 0, end: 30 });
    }

    #[test]
    fn extracts_in_order_and_handles_no_match() {
        let text = "Intro prose.\n\nExercise 2: Show that 0 is even.\n\nProposition 3. Sums\nof evens are even.\n\nTheorem 4. Last";
        let blocks = extract_blocks(&doc(text), &default_patterns());
        let bodies: Vec<&str> = blocks.iter().map(|b| b.text.as_str()).collect();
        assert_eq!(bodies, vec!["Show that 0 is even.", "Sums\nof evens are even.", "Last"]);
        assert_eq!(blocks[1].id, "d#2");
        assert!(extract_blocks(&doc("nothing here\n"), &default_patterns()).is_empty());
    }

    #[test]
    fn bad_pattern_is_rejected() {
        assert!(matches!(compile_patterns(&["(".into()]), Err(HeraldError::Pattern { .. })));
    }

    #[test]
    fn refine_mocks() {
        let block = RawBlock {
            id: "d#1".into(),
            source: SourceRef { document: "d".into(), start: 0, end: 1 },
            text: "  Groups are monoids. ".into(),
        };
        let id = refine_statement(&block, &mock(ClientRole::Refiner, MockBehavior::Identity)).unwrap();
        assert_eq!(id.text, block.text);
        let trimmed = refine_statement(&block, &mock(ClientRole::Refiner, MockBehavior::Trim)).unwrap();
        assert_eq!(trimmed.text, "Groups are monoids.");
        let err = refine_statement(&block, &mock(ClientRole::Refiner, MockBehavior::Failing)).unwrap_err();
        assert!(err.to_string().starts_with("d#1"));
        assert!(matches!(
            refine_statement(&block, &mock(ClientRole::Judge, MockBehavior::Identity)),
            Err(HeraldError::WrongRole { .. })
        ));
    }

    fn informal(text: &str) -> InformalStatement {
        InformalStatement {
            id: "x".into(),
            source: SourceRef { document: "d".into(), start: 0, end: 0 },
            text: text.into(),
        }
    }

    #[test]
    fn autoformalize_mocks() {
        let wrap = autoformalize(&informal("A"), 4, &mock(ClientRole::Formalizer, MockBehavior::Wrap)).unwrap();
        assert_eq!(wrap, vec![Some("example : A := by".to_string()); 4]);
        let distinct =
            autoformalize(&informal("A"), 3, &mock(ClientRole::Formalizer, MockBehavior::DistinctSuffix)).unwrap();
        assert_eq!(distinct.iter().collect::<BTreeSet<_>>().len(), 3);
        assert!(autoformalize(&informal("A"), 3, &mock(ClientRole::Formalizer, MockBehavior::Failing)).is_err());
        assert!(matches!(
            autoformalize(&informal("A"), 0, &mock(ClientRole::Formalizer, MockBehavior::Wrap)),
            Err(HeraldError::ZeroFanOut)
        ));
    }

    #[test]
    fn informalize_mocks() {
        let echo = mock(ClientRole::Informalizer, MockBehavior::Echo);
        assert_eq!(
            informalize("example : Groups are monoids. := by -- candidate 2", &echo).unwrap(),
            "Groups are monoids."
        );
        let c = mock(ClientRole::Informalizer, MockBehavior::Constant("fixed".into()));
        assert_eq!(informalize("example : A := by", &c).unwrap(), "fixed");
        assert!(informalize("x", &mock(ClientRole::Informalizer, MockBehavior::Failing)).is_err());
    }

    #[test]
    fn judge_examples() {
        let judge = mock(ClientRole::Judge, MockBehavior::ExactMatchJudge);
        assert_eq!(
            judge_consistency("Groups are monoids.", "groups  are monoids.", &judge).verdict,
            Verdict::Consistent
        );
        assert_eq!(
            judge_consistency("Groups are monoids.", "Rings are monoids.", &judge).verdict,
            Verdict::Inconsistent
        );
        let failing = mock(ClientRole::Judge, MockBehavior::Failing);
        assert_eq!(judge_consistency("a", "a", &failing).verdict, Verdict::Error);
        let odd = mock(ClientRole::Judge, MockBehavior::Constant("maybe".into()));
        assert_eq!(judge_consistency("a", "a", &odd).verdict, Verdict::Error);
    }

    #[test]
    fn formal_body_unwraps() {
        assert_eq!(formal_body("example : A -> A := by"), "A -> A");
        assert_eq!(formal_body("theorem foo : A /\\ B := by\n  sorry"), "A /\\ B");
        assert_eq!(formal_body("  A -> B "), "A -> B");
    }

    struct Fixture {
        formalizer: MockClient,
        informalizer: MockClient,
        judge: MockClient,
    }

    impl Fixture {
        fn new(informalizer: MockBehavior) -> Self {
            Self {
                formalizer: mock(ClientRole::Formalizer, MockBehavior::Wrap),
                informalizer: mock(ClientRole::Informalizer, informalizer),
                judge: mock(ClientRole::Judge, MockBehavior::ExactMatchJudge),
            }
        }

        fn clients(&self) -> HeraldClients<'_> {
            HeraldClients {
                refiner: None,
                formalizer: &self.formalizer,
                informalizer: &self.informalizer,
                judge: &self.judge,
            }
        }
    }

    const CORPUS: &str = "Theorem 1. A -> A\n\nTheorem 2. A /\\ B -> A\n\nExercise 3. A ->\n";

    #[test]
    fn echo_loop_accepts_everything() {
        let f = Fixture::new(MockBehavior::Echo);
        let records = run_pipeline(&[doc(CORPUS)], &HeraldConfig::default(), &f.clients(), None).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.candidates.len(), DEFAULT_FAN_OUT);
            assert_eq!(r.accepted.len(), DEFAULT_FAN_OUT);
        }
        assert_eq!(statement_pool(&records), vec!["A -> A", "A /\\ B -> A", "A ->"]);
    }

    #[test]
    fn gate_demotes_unparseable_statements() {
        let f = Fixture::new(MockBehavior::Echo);
        let config = HeraldConfig { well_formedness_gate: true, ..HeraldConfig::default() };
        let records = run_pipeline(&[doc(CORPUS)], &config, &f.clients(), Some(&KernelFactory)).unwrap();
        assert!(records[2].accepted.is_empty());
        assert_eq!(records[2].candidates[0].verdict, Verdict::Inconsistent);
        assert_eq!(records[0].accepted.len(), DEFAULT_FAN_OUT);
    }

    #[test]
    fn failures_stay_within_their_record() {
        struct FlakyFormalizer;
        impl ModelClient for FlakyFormalizer {
            fn role(&self) -> ClientRole {
                ClientRole::Formalizer
            }
            fn generate(&self, r: &ModelRequest, n: usize) -> Result<Vec<String>, ModelError> {
                if r.text.contains('/') {
                    Err(ModelError::Transport("down".into()))
                } else {
                    Ok(vec![format!("example : {} := by", r.text); n])
                }
            }
        }
        let f = Fixture::new(MockBehavior::Echo);
        let clients = HeraldClients { formalizer: &FlakyFormalizer, ..f.clients() };
        let records = run_pipeline(&[doc(CORPUS)], &HeraldConfig::default(), &clients, None).unwrap();
        let healthy = run_pipeline(&[doc(CORPUS)], &HeraldConfig::default(), &f.clients(), None).unwrap();
        assert!(records[1].candidates.iter().all(|c| c.verdict == Verdict::Error));
        assert_eq!(records[1].candidates.len(), DEFAULT_FAN_OUT);
        assert_eq!(records[0], healthy[0]);
        assert_eq!(records[2], healthy[2]);
    }

    #[test]
    fn accepted_is_subset_of_consistent() {
        let f = Fixture::new(MockBehavior::Constant("A -> A".into()));
        let records = run_pipeline(&[doc(CORPUS)], &HeraldConfig::default(), &f.clients(), None).unwrap();
        assert_eq!(records[0].accepted.len(), 4);
        assert!(records[1].accepted.is_empty());
        for r in &records {
            let consistent: Vec<_> = r
                .candidates
                .iter()
                .filter(|c| c.verdict == Verdict::Consistent)
                .filter_map(|c| c.formal.clone())
                .collect();
            assert_eq!(r.accepted, consistent);
        }
    }

    #[test]
    fn empty_corpus_and_parallel_order() {
        let f = Fixture::new(MockBehavior::Echo);
        assert!(run_pipeline(&[], &HeraldConfig::default(), &f.clients(), None).unwrap().is_empty());
        let serial = run_pipeline(&[doc(CORPUS)], &HeraldConfig::default(), &f.clients(), None).unwrap();
        let parallel =
            run_pipeline(&[doc(CORPUS)], &HeraldConfig { jobs: 4, ..HeraldConfig::default() }, &f.clients(), None)
                .unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn outputs_are_byte_identical_across_runs() {
        let f = Fixture::new(MockBehavior::Echo);
        let dir = tempfile::tempdir().unwrap();
        let meta = ArtifactMeta::new("00000000deadbeef", 3);
        let mut bytes = Vec::new();
        for i in 0..2 {
            let records = run_pipeline(&[doc(CORPUS)], &HeraldConfig::default(), &f.clients(), None).unwrap();
            let (rp, pp) = (dir.path().join(format!("r{i}.jsonl")), dir.path().join(format!("p{i}.txt")));
            write_outputs(&rp, &pp, &meta, &records).unwrap();
            bytes.push((std::fs::read(rp).unwrap(), std::fs::read(pp).unwrap()));
        }
        assert_eq!(bytes[0], bytes[1]);
        assert!(String::from_utf8(bytes[0].1.clone())
            .unwrap()
            .starts_with("-- config_digest=00000000deadbeef seed=3\n"));
    }
}
