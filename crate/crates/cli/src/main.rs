//! `scmgrpo` command-line tool.
//!
//! Machine-readable results go to stdout (JSON or JSONL), diagnostics to
//! stderr. Exit codes: 0 success, 1 validation failures present, 2 usage
//! error, 3 I/O or schema error.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use scmgrpo::analytics::{chain_stats, corpus_report, profile_to_csv, CorpusAccumulator};
use scmgrpo::datapipe::{
    load_seed, make_sft_instance, process_candidate, ChainGenerator, FilterMode, FilterOptions, FilterStats,
    FixtureGenerator, SeedRecord, SyntheticGenerator,
};
use scmgrpo::format::{read_documents, to_json, ChainDocument, DocumentReadError, Format};
use scmgrpo::grpo::{group_advantages, train, GrpoError, KlMode, SyntheticEnv, TrainConfig};
use scmgrpo::reward::{score_document, LengthUnit, MatchMode, RewardConfig};
use scmgrpo::scm::{check_structural_validity, Violation};

const EXIT_INVALID: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure { code: EXIT_DATA, message: message.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::data(format!("IoError: {e}"))
    }
}

type CmdResult = Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "scmgrpo", version, about = "Validate, score and analyze structural-causal reasoning chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every chain against the structural validity gate.
    Validate(DocArgs),
    /// Composite reward breakdown for every chain (each needs a gold label).
    Score(ScoreArgs),
    /// Group-normalized advantages for JSONL lines `{prompt_id, rewards}`.
    Advantage(AdvantageArgs),
    /// Build structured records from seeds and a chain generator.
    Assemble(PipelineArgs),
    /// Like `assemble`, but emit only the kept chains.
    Filter(PipelineArgs),
    /// Like `assemble`, but emit supervised `{input, target}` instances.
    SftEmit(SftArgs),
    /// Corpus statistics report.
    Stats(StatsArgs),
    /// Train a softmax policy with GRPO on a toy environment.
    TrainToy(TrainArgs),
}

#[derive(Args)]
struct DocArgs {
    /// Input file; documents are JSONL or blank-line separated template text.
    input: PathBuf,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RewardOverrides {
    /// Reward config, TOML (or JSON if the extension is .json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    r_correct: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    l_min: Option<u64>,
    #[arg(long)]
    l_max: Option<u64>,
    #[arg(long)]
    beta_s: Option<f64>,
    #[arg(long)]
    beta_l: Option<f64>,
    #[arg(long, value_parser = parse_match_mode)]
    match_mode: Option<MatchMode>,
    #[arg(long, value_parser = parse_length_unit)]
    length_unit: Option<LengthUnit>,
}

fn parse_match_mode(s: &str) -> Result<MatchMode, String> {
    match s {
        "exact" => Ok(MatchMode::Exact),
        "fuzzy" => Ok(MatchMode::Fuzzy),
        _ => Err(format!("expected exact or fuzzy, got {s:?}")),
    }
}

fn parse_length_unit(s: &str) -> Result<LengthUnit, String> {
    match s {
        "steps" => Ok(LengthUnit::Steps),
        "characters" => Ok(LengthUnit::Characters),
        _ => Err(format!("expected steps or characters, got {s:?}")),
    }
}

impl RewardOverrides {
    fn resolve(&self) -> Result<RewardConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RewardConfig::load(path).map_err(|e| Failure::data(e.to_string()))?,
            None => RewardConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        apply!(r_correct, gamma, delta, lambda, l_min, l_max, beta_s, beta_l, match_mode, length_unit);
        cfg.validate().map_err(|e| Failure::data(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    doc: DocArgs,
    #[command(flatten)]
    reward: RewardOverrides,
}

#[derive(Args)]
struct AdvantageArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
}

#[derive(Args)]
struct PipelineArgs {
    /// Seed JSONL with `{id, query, gold_label}` lines.
    seeds: PathBuf,
    /// Replay fixture with `{seed_id, document}` lines.
    #[arg(long, conflicts_with = "synthetic")]
    generator: Option<PathBuf>,
    /// Use the seeded synthetic generator instead of a fixture.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    error_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    invalid_rate: f64,
    /// Keep only correct and structurally valid chains (default).
    #[arg(long, conflicts_with = "paper_faithful")]
    strict: bool,
    /// Keep every chain with the correct answer.
    #[arg(long)]
    paper_faithful: bool,
    #[arg(long, value_parser = parse_match_mode, default_value = "exact")]
    match_mode: MatchMode,
    /// Write filter statistics here instead of stderr.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct SftArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Prompt template; `{query}` is replaced by the seed query.
    #[arg(long, default_value = "{query}")]
    template: String,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Second corpus for Welch tests.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Comma-separated length bin edges; unit bins if omitted.
    #[arg(long, value_delimiter = ',')]
    bins: Option<Vec<f64>>,
    /// Also write the length/accuracy profile as CSV.
    #[arg(long)]
    profile_csv: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Environment descriptor (JSON).
    env: PathBuf,
    /// Training config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reward config (TOML, or JSON by extension).
    #[arg(long)]
    reward_config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long = "k")]
    group_size: Option<usize>,
    #[arg(long)]
    kl_coeff: Option<f64>,
    #[arg(long, value_parser = parse_kl_mode)]
    kl_mode: Option<KlMode>,
    #[arg(long)]
    epsilon: Option<f64>,
}

fn parse_kl_mode(s: &str) -> Result<KlMode, String> {
    match s {
        "kl_penalty" => Ok(KlMode::KlPenalty),
        "entropy_bonus" => Ok(KlMode::EntropyBonus),
        "off" => Ok(KlMode::Off),
        _ => Err(format!("expected kl_penalty, entropy_bonus or off, got {s:?}")),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::data(format!("IoError: {}: {e}", path.display())))
}

fn read_error(path: &Path, line: usize, e: DocumentReadError) -> Failure {
    let name = match &e {
        DocumentReadError::Io(_) => "IoError",
        DocumentReadError::Format(f) => f.name(),
    };
    Failure::data(format!("{}:{line}: {name}: {e}", path.display()))
}

fn emit<T: Serialize>(out: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

#[derive(Serialize)]
struct LineReport<'a> {
    line: usize,
    valid: bool,
    violations: &'a [Violation],
}

fn cmd_validate(args: &DocArgs, out: &mut impl Write) -> CmdResult {
    let mut any_invalid = false;
    for (line, doc) in read_documents(open(&args.input)?, args.format) {
        let doc = doc.map_err(|e| read_error(&args.input, line, e))?;
        let report = check_structural_validity(&doc.chain);
        any_invalid |= !report.valid;
        emit(out, &LineReport { line, valid: report.valid, violations: &report.violations })?;
    }
    Ok(if any_invalid { EXIT_INVALID } else { 0 })
}

fn cmd_score(args: &ScoreArgs, out: &mut impl Write) -> CmdResult {
    let cfg = args.reward.resolve()?;
    for (line, doc) in read_documents(open(&args.doc.input)?, args.doc.format) {
        let doc = doc.map_err(|e| read_error(&args.doc.input, line, e))?;
        let breakdown = score_document(&doc, &cfg)
            .map_err(|e| Failure::data(format!("{}:{line}: {e}", args.doc.input.display())))?;
        emit(out, &breakdown)?;
    }
    Ok(0)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupLine {
    prompt_id: serde_json::Value,
    rewards: Vec<f64>,
}

#[derive(Serialize)]
struct AdvantageLine {
    prompt_id: serde_json::Value,
    advantages: Vec<f64>,
}

fn cmd_advantage(args: &AdvantageArgs, out: &mut impl Write) -> CmdResult {
    if !(args.epsilon.is_finite() && args.epsilon >= 0.0) {
        return Err(Failure::usage(format!("--epsilon must be finite and >= 0, got {}", args.epsilon)));
    }
    for (i, line) in open(&args.input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let group: GroupLine = serde_json::from_str(&line)
            .map_err(|e| Failure::data(format!("{}:{}: SchemaError: {e}", args.input.display(), i + 1)))?;
        let advantages = group_advantages(&group.rewards, args.epsilon).map_err(|e| {
            let code = if matches!(e, GrpoError::GroupTooSmall(_)) { EXIT_USAGE } else { EXIT_DATA };
            Failure { code, message: format!("{}:{}: {e}", args.input.display(), i + 1) }
        })?;
        emit(out, &AdvantageLine { prompt_id: group.prompt_id, advantages })?;
    }
    Ok(0)
}

fn make_generator(args: &PipelineArgs) -> Result<Box<dyn ChainGenerator>, Failure> {
    match (&args.generator, args.synthetic) {
        (Some(path), _) => Ok(Box::new(FixtureGenerator::load(path).map_err(|e| Failure::data(e.to_string()))?)),
        (None, true) => Ok(Box::new(SyntheticGenerator::new(args.seed, args.error_rate, args.invalid_rate))),
        (None, false) => Err(Failure::usage("one of --generator or --synthetic is required")),
    }
}

/// Streams seeds through the generator and filter, handing each kept record
/// to `sink`, then reports the statistics.
fn run_pipeline(
    args: &PipelineArgs,
    mut sink: impl FnMut(&SeedRecord, scmgrpo::datapipe::StructRecord) -> Result<(), Failure>,
) -> CmdResult {
    let mut generator = make_generator(args)?;
    let opts = FilterOptions {
        mode: if args.paper_faithful { FilterMode::PaperFaithful } else { FilterMode::Strict },
        match_mode: args.match_mode,
    };
    let mut stats = FilterStats::default();
    let seeds = load_seed(&args.seeds, false).map_err(|e| Failure::data(e.to_string()))?;
    for seed in seeds {
        let seed = seed.map_err(|e| Failure::data(format!("{}: {e}", args.seeds.display())))?;
        let candidate = generator.generate(&seed).map_err(|e| Failure::data(e.to_string()))?;
        if let Some(rec) =
            process_candidate(&seed, candidate, &opts, &mut stats).map_err(|e| Failure::data(e.to_string()))?
        {
            sink(&seed, rec)?;
        }
    }
    let summary = serde_json::to_string(&stats).expect("stats serialize");
    match &args.stats {
        Some(path) => std::fs::write(path, summary + "\n")?,
        None => eprintln!("{summary}"),
    }
    Ok(0)
}

fn cmd_sft_emit(args: &SftArgs, out: &mut impl Write) -> CmdResult {
    if !args.template.contains(scmgrpo::datapipe::QUERY_PLACEHOLDER) {
        return Err(Failure::usage("BadTemplate: --template lacks the {query} placeholder"));
    }
    run_pipeline(&args.pipeline, |_, rec| {
        let inst = make_sft_instance(&rec, &args.template).map_err(|e| Failure::usage(e.to_string()))?;
        Ok(emit(out, &inst)?)
    })
}

fn read_corpus(path: &Path, format: Format) -> Result<CorpusAccumulator, Failure> {
    let mut acc = CorpusAccumulator::default();
    for (line, doc) in read_documents(open(path)?, format) {
        let doc: ChainDocument = doc.map_err(|e| read_error(path, line, e))?;
        acc.push(&chain_stats(&doc));
    }
    Ok(acc)
}

fn cmd_stats(args: &StatsArgs, out: &mut impl Write) -> CmdResult {
    let main = read_corpus(&args.input, args.format)?;
    let other = args.compare.as_deref().map(|p| read_corpus(p, args.format)).transpose()?;
    let report = corpus_report(&main, other.as_ref(), args.bins.as_deref()).map_err(|e| {
        let code = if e.name() == "BadBins" { EXIT_USAGE } else { EXIT_DATA };
        Failure { code, message: e.to_string() }
    })?;
    if let Some(path) = &args.profile_csv {
        std::fs::write(path, profile_to_csv(&report.length_profile))?;
    }
    writeln!(out, "{}", report.to_pretty_json())?;
    Ok(0)
}

fn cmd_train_toy(args: &TrainArgs, out: &mut impl Write) -> CmdResult {
    let env_text = std::fs::read_to_string(&args.env)
        .map_err(|e| Failure::data(format!("IoError: {}: {e}", args.env.display())))?;
    let env = SyntheticEnv::from_json(&env_text).map_err(|e| Failure::usage(e.to_string()))?;
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::data(format!("IoError: {}: {e}", path.display())))?;
            toml::from_str::<TrainConfig>(&text).map_err(|e| Failure::usage(format!("InvalidConfig: {e}")))?
        }
        None => TrainConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { cfg.$field = v; })* };
    }
    apply!(seed, iterations, learning_rate, group_size, kl_coeff, kl_mode, epsilon);
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let reward = match &args.reward_config {
        Some(path) => RewardConfig::load(path).map_err(|e| Failure::usage(e.to_string()))?,
        None => RewardConfig::default(),
    };
    let trace = train(&env, &cfg, &reward).map_err(|e| Failure::usage(e.to_string()))?;
    out.write_all(trace.to_jsonl().as_bytes())?;
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match &cli.command {
        Command::Validate(a) => cmd_validate(a, &mut out),
        Command::Score(a) => cmd_score(a, &mut out),
        Command::Advantage(a) => cmd_advantage(a, &mut out),
        Command::Assemble(a) => run_pipeline(a, |_, rec| Ok(emit(&mut out, &rec)?)),
        Command::Filter(a) => run_pipeline(a, |_, rec| Ok(writeln!(out, "{}", to_json(&rec.chain))?)),
        Command::SftEmit(a) => cmd_sft_emit(a, &mut out),
        Command::Stats(a) => cmd_stats(a, &mut out),
        Command::TrainToy(a) => cmd_train_toy(a, &mut out),
    };
    out.flush()?;
    code
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
