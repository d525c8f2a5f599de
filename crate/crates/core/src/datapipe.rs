//! Seed ingestion, consistency filtering and SFT instance emission.
//!
//! A [`ChainGenerator`] proposes one chain per seed. Candidates whose verdict
//! disagrees with the gold label are discarded, and in strict mode so are
//! candidates that fail the structural validity gate. Survivors are assembled
//! into [`StructRecord`]s and can be rendered as supervised instances.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{parse_chain, render_template, ChainDocument, Format, FormatError};
use crate::reward::{match_answers, MatchMode};
use crate::rng::{stream_rng, Stream};
use crate::scm::{assemble_steps, check_structural_validity, Label, ReasoningStep, ScmError};
use crate::synth::{random_chain, ChainParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("IoError: {0}")]
    Io(String),
    #[error("SchemaError: line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("MissingFixture: no chain for seed {0:?}")]
    MissingFixture(String),
    #[error("BadTemplate: {0}")]
    BadTemplate(String),
    #[error("ZeroProbability: token {position} has probability 0")]
    ZeroProbability { position: usize },
    #[error("InvalidProbability: token {position} has probability {value}")]
    InvalidProbability { position: usize, value: f64 },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

impl DataError {
    pub fn name(&self) -> &'static str {
        match self {
            DataError::Io(_) => "IoError",
            DataError::Schema { .. } => "SchemaError",
            DataError::MissingFixture(_) => "MissingFixture",
            DataError::BadTemplate(_) => "BadTemplate",
            DataError::ZeroProbability { .. } => "ZeroProbability",
            DataError::InvalidProbability { .. } => "InvalidProbability",
            DataError::Format(e) => e.name(),
            DataError::Scm(e) => e.name(),
        }
    }
}

impl From<std::io::Error> for DataError {
    fn from(e: std::io::Error) -> Self {
        DataError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRecord {
    pub id: String,
    pub query: String,
    pub gold_label: Label,
}

/// Streams seed records from JSONL. Blank lines are skipped. A malformed
/// line or a repeated id yields a `SchemaError` carrying its 1-based line
/// number; in lenient mode reading continues past it, otherwise the stream
/// ends after the first error.
pub fn read_seeds<R: BufRead>(reader: R, lenient: bool) -> SeedReader<R> {
    SeedReader { lines: reader.lines(), line_no: 0, lenient, seen: HashSet::new(), done: false }
}

pub fn load_seed(path: &Path, lenient: bool) -> Result<SeedReader<BufReader<File>>, DataError> {
    let file = File::open(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    Ok(read_seeds(BufReader::new(file), lenient))
}

pub struct SeedReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    lenient: bool,
    seen: HashSet<String>,
    done: bool,
}

impl<R: BufRead> Iterator for SeedReader<R> {
    type Item = Result<SeedRecord, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let item = match serde_json::from_str::<SeedRecord>(&line) {
                Ok(rec) if !self.seen.insert(rec.id.clone()) => Err(DataError::Schema {
                    line: self.line_no,
                    message: format!("duplicate seed id {:?}", rec.id),
                }),
                Ok(rec) => Ok(rec),
                Err(e) => Err(DataError::Schema { line: self.line_no, message: e.to_string() }),
            };
            if item.is_err() && !self.lenient {
                self.done = true;
            }
            return Some(item);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Keep only chains with the right answer that also pass the validity gate.
    #[default]
    Strict,
    /// Keep every chain with the right answer.
    PaperFaithful,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterOptions {
    pub mode: FilterMode,
    pub match_mode: MatchMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscardReason {
    WrongAnswer,
    InvalidStructure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Discard(DiscardReason),
}

/// The answer is checked first, so a wrong chain with a broken structure is
/// counted as `WrongAnswer`.
pub fn consistency_filter(candidate: &ChainDocument, gold: Label, opts: &FilterOptions) -> FilterDecision {
    let correct = match_answers(candidate.predicted_label().as_str(), gold, opts.match_mode)
        .expect("a label always parses as a prediction");
    if !correct {
        return FilterDecision::Discard(DiscardReason::WrongAnswer);
    }
    if opts.mode == FilterMode::Strict && !check_structural_validity(&candidate.chain).valid {
        return FilterDecision::Discard(DiscardReason::InvalidStructure);
    }
    FilterDecision::Keep
}

/// Source of candidate chains, one per seed.
pub trait ChainGenerator {
    fn generate(&mut self, seed: &SeedRecord) -> Result<ChainDocument, DataError>;
}

/// Replays recorded chains keyed by seed id.
///
/// Fixture files are JSONL with one `{"seed_id": …, "document": {…}}` object
/// per line, `document` in the canonical JSON chain layout.
#[derive(Debug, Clone, Default)]
pub struct FixtureGenerator {
    chains: HashMap<String, ChainDocument>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureLine {
    seed_id: String,
    document: serde_json::Value,
}

impl FixtureGenerator {
    pub fn new(chains: HashMap<String, ChainDocument>) -> Self {
        FixtureGenerator { chains }
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, DataError> {
        let mut chains = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let schema = |message: String| DataError::Schema { line: i + 1, message };
            let entry: FixtureLine = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
            // Re-parse through the chain parser so fixture errors carry its names.
            let doc = parse_chain(entry.document.to_string().as_bytes(), Format::Json)?;
            if chains.insert(entry.seed_id.clone(), doc).is_some() {
                return Err(schema(format!("duplicate seed id {:?}", entry.seed_id)));
            }
        }
        Ok(FixtureGenerator { chains })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let file = File::open(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(BufReader::new(file))
    }
}

impl ChainGenerator for FixtureGenerator {
    fn generate(&mut self, seed: &SeedRecord) -> Result<ChainDocument, DataError> {
        self.chains.get(&seed.id).cloned().ok_or_else(|| DataError::MissingFixture(seed.id.clone()))
    }
}

/// Seeded random teacher. Each chain answers correctly unless a draw with
/// probability `error_rate` flips it, and is structurally valid unless a draw
/// with probability `invalid_rate` reverses its derivation order.
#[derive(Debug, Clone)]
pub struct SyntheticGenerator {
    rng: ChaCha8Rng,
    pub params: ChainParams,
    pub error_rate: f64,
    pub invalid_rate: f64,
}

impl SyntheticGenerator {
    pub fn new(seed: u64, error_rate: f64, invalid_rate: f64) -> Self {
        SyntheticGenerator {
            rng: stream_rng(seed, Stream::Generator),
            params: ChainParams { awkward_text: false, ..ChainParams::default() },
            error_rate: error_rate.clamp(0.0, 1.0),
            invalid_rate: invalid_rate.clamp(0.0, 1.0),
        }
    }
}

impl ChainGenerator for SyntheticGenerator {
    fn generate(&mut self, seed: &SeedRecord) -> Result<ChainDocument, DataError> {
        let mut doc = random_chain(&mut self.rng, &self.params);
        doc.chain.claim = seed.query.clone();
        doc.gold_label = Some(seed.gold_label);
        doc.chain.verdict =
            if self.rng.random_bool(self.error_rate) { seed.gold_label.flipped() } else { seed.gold_label };
        if self.rng.random_bool(self.invalid_rate) {
            // v1 only reads exogenous variables, so putting the backbone's last
            // link first always creates a forward reference. Single-step chains
            // get a self-loop instead.
            let endo = &mut doc.chain.endogenous;
            if endo.len() > 1 {
                endo.reverse();
            } else {
                let id = endo[0].id;
                endo[0].parents.push(id);
            }
        }
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructRecord {
    pub id: String,
    pub query: String,
    pub chain: ChainDocument,
    pub steps: Vec<ReasoningStep>,
    pub answer: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiscardCounts {
    #[serde(rename = "WrongAnswer")]
    pub wrong_answer: usize,
    #[serde(rename = "InvalidStructure")]
    pub invalid_structure: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterStats {
    pub input: usize,
    pub kept: usize,
    pub discarded: DiscardCounts,
}

impl FilterStats {
    pub fn record(&mut self, decision: FilterDecision) {
        self.input += 1;
        match decision {
            FilterDecision::Keep => self.kept += 1,
            FilterDecision::Discard(DiscardReason::WrongAnswer) => self.discarded.wrong_answer += 1,
            FilterDecision::Discard(DiscardReason::InvalidStructure) => self.discarded.invalid_structure += 1,
        }
    }

    pub fn total_discarded(&self) -> usize {
        self.discarded.wrong_answer + self.discarded.invalid_structure
    }
}

/// Filters one candidate and, if kept, assembles its record.
pub fn process_candidate(
    seed: &SeedRecord,
    candidate: ChainDocument,
    opts: &FilterOptions,
    stats: &mut FilterStats,
) -> Result<Option<StructRecord>, DataError> {
    let decision = consistency_filter(&candidate, seed.gold_label, opts);
    stats.record(decision);
    if decision != FilterDecision::Keep {
        return Ok(None);
    }
    // Paper-faithful mode can keep chains the step assembly cannot order;
    // those are kept without steps.
    let steps = match assemble_steps(&candidate.chain) {
        Ok(steps) => steps,
        Err(ScmError::InvalidChain(_)) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    Ok(Some(StructRecord {
        id: seed.id.clone(),
        query: seed.query.clone(),
        answer: candidate.predicted_label(),
        chain: candidate,
        steps,
    }))
}

/// Runs every seed through the generator and the filter, preserving seed order.
pub fn build_struct_dataset<I, G>(
    seeds: I,
    generator: &mut G,
    opts: &FilterOptions,
) -> Result<(Vec<StructRecord>, FilterStats), DataError>
where
    I: IntoIterator<Item = SeedRecord>,
    G: ChainGenerator + ?Sized,
{
    let mut stats = FilterStats::default();
    let mut records = Vec::new();
    for seed in seeds {
        let candidate = generator.generate(&seed)?;
        if let Some(rec) = process_candidate(&seed, candidate, opts, &mut stats)? {
            records.push(rec);
        }
    }
    Ok((records, stats))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftInstance {
    pub input: String,
    pub target: String,
}

pub const QUERY_PLACEHOLDER: &str = "{query}";

pub fn make_sft_instance(record: &StructRecord, prompt_template: &str) -> Result<SftInstance, DataError> {
    if !prompt_template.contains(QUERY_PLACEHOLDER) {
        return Err(DataError::BadTemplate(format!("template lacks the {QUERY_PLACEHOLDER} placeholder")));
    }
    Ok(SftInstance {
        input: prompt_template.replace(QUERY_PLACEHOLDER, &record.query),
        target: render_template(&record.chain),
    })
}

pub trait Tokenizer {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_owned).collect()
    }
}

/// Conditional probability `P(y_t | x, y_<t)` of the target token at `position`.
pub trait TokenOracle {
    fn probability(&self, input: &str, prefix: &[String], token: &str, position: usize) -> f64;
}

/// Fixed per-position probabilities; positions past the end get probability 1.
impl TokenOracle for [f64] {
    fn probability(&self, _input: &str, _prefix: &[String], _token: &str, position: usize) -> f64 {
        self.get(position).copied().unwrap_or(1.0)
    }
}

/// Negative log-likelihood `−Σ_t ln P(y_t | x, y_<t)` of `target` given `input`.
pub fn sft_loss<O: TokenOracle + ?Sized>(input: &str, target: &[String], oracle: &O) -> Result<f64, DataError> {
    let mut loss = 0.0;
    for (position, token) in target.iter().enumerate() {
        let p = oracle.probability(input, &target[..position], token, position);
        if p == 0.0 {
            return Err(DataError::ZeroProbability { position });
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(DataError::InvalidProbability { position, value: p });
        }
        loss -= p.ln();
    }
    Ok(loss)
}

pub fn sft_instance_loss<T, O>(instance: &SftInstance, tokenizer: &T, oracle: &O) -> Result<f64, DataError>
where
    T: Tokenizer + ?Sized,
    O: TokenOracle + ?Sized,
{
    sft_loss(&instance.input, &tokenizer.tokenize(&instance.target), oracle)
}
