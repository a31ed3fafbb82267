//! `defx`: corpus ingestion, targeting, CRF training, prediction and
//! evaluation from the command line.
//!
//! Every subcommand prints one JSON object on stdout. Failures print
//! `{"error": CODE, "message": ...}` on stderr and exit with status 1.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use config::{PipelineConfig, Policy};

/// Error with an explicit machine-readable code, for failures that do not
/// come from the library.
#[derive(Debug)]
pub struct Coded {
    pub code: &'static str,
    pub message: String,
}

impl Coded {
    pub fn config(message: impl Into<String>) -> Self {
        Coded {
            code: "E_CONFIG",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Coded {
            code: "E_IO",
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Coded {
            code: "E_INPUT",
            message: message.into(),
        }
    }
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Coded {}

#[derive(Parser)]
#[command(
    name = "defx",
    version,
    about = "Target-based symbol definition extraction"
)]
struct Cli {
    /// Config file of `key = value` lines; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (0: one per core). Results do not depend on it
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed for splitting and training
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Log warnings and errors only
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Brat,
    Scierc,
}

#[derive(Subcommand)]
enum Command {
    /// Read BRAT, JSONL or SciERC into canonical JSONL and write a lint report
    Ingest(IngestArgs),
    /// Corpus statistics
    Stats(StatsArgs),
    /// Rank documents by coordination cues
    Mine(MineArgs),
    /// Seeded train/dev/test split, paper-disjoint by default
    Split(SplitArgs),
    /// One sample per symbol, with gold labels
    Expand(ExpandArgs),
    /// Fit the feature dictionary and train the CRF
    Train(TrainArgs),
    /// Label samples with a trained model
    Predict(PredictArgs),
    /// Token-level scores, symbol-count buckets and error counts
    Eval(EvalArgs),
    /// Agreement between two annotations of the same sentences
    Iaa(IaaArgs),
    /// Export a corpus as SciERC-style JSON lines
    ConvertScierc(ConvertArgs),
    /// Align free-text answers onto slot labels
    AlignAnswers(AlignArgs),
    /// Generate the template corpus
    Synth(SynthArgs),
    /// Inspect the effective configuration
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print every key with its effective value, in config file syntax
    Show,
}

#[derive(Args)]
pub struct IngestArgs {
    /// Input file, or a directory of `.txt`/`.ann` pairs for BRAT
    #[arg(long)]
    pub input: PathBuf,
    /// Input format
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    /// Annotation file for a single BRAT text (default: input with `.ann`)
    #[arg(long)]
    pub ann: Option<PathBuf>,
    /// Canonical JSONL output
    #[arg(long)]
    pub output: PathBuf,
    /// Lint report (default: output path plus `.lint.jsonl`)
    #[arg(long)]
    pub lint_report: Option<PathBuf>,
    /// Comma-separated symbol texts to flag as operator uses
    #[arg(long, value_delimiter = ',')]
    pub operators: Vec<String>,
}

#[derive(Args)]
pub struct StatsArgs {
    /// Corpus JSONL
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the statistics as JSON here
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct MineArgs {
    /// Corpus JSONL, SciERC file, or a directory/file of raw `.txt` for brat
    #[arg(long)]
    pub input: PathBuf,
    /// Input format
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    /// Full ranking as JSON
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Documents listed in the stdout result
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Corpus JSONL
    #[arg(long)]
    pub input: PathBuf,
    /// Directory receiving train.jsonl, dev.jsonl and test.jsonl
    #[arg(long)]
    pub output: PathBuf,
    /// Keep papers whole (default)
    #[arg(long, conflicts_with = "by_sentence")]
    pub by_paper: bool,
    /// Split individual sentences
    #[arg(long)]
    pub by_sentence: bool,
    /// Dev share of sentences
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// Test share of sentences
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Args)]
pub struct ExpandArgs {
    /// Corpus JSONL
    #[arg(long)]
    pub input: PathBuf,
    /// Sample JSONL
    #[arg(long)]
    pub output: PathBuf,
    /// Write the target token as `</s>SYMBOL</s>`
    #[arg(long)]
    pub render_markers: bool,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training samples (output of `expand`)
    #[arg(long)]
    pub input: PathBuf,
    /// Dev samples for model selection
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Model file
    #[arg(long)]
    pub output: PathBuf,
    /// Encoder file (default: model path plus `.features`)
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// Per-epoch history as JSON
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Passes over the training set
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Samples per update
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Longer training samples are truncated
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    /// AdaGrad learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// L2 coefficient
    #[arg(long)]
    pub l2: Option<f64>,
    /// Weight of the definition classifier loss
    #[arg(long)]
    pub lambda_cls: Option<f64>,
    /// Drop features seen fewer times than this
    #[arg(long)]
    pub min_count: Option<usize>,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Samples to label
    #[arg(long)]
    pub input: PathBuf,
    /// Model file
    #[arg(long)]
    pub model: PathBuf,
    /// Encoder file (default: model path plus `.features`)
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// Prediction JSONL
    #[arg(long)]
    pub output: PathBuf,
    /// Symbol/definition pairs in original token indices, as JSONL
    #[arg(long)]
    pub definitions: Option<PathBuf>,
    /// Replace DEF tags by O when the classifier says "no definition"
    #[arg(long)]
    pub gate: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Gold samples
    #[arg(long)]
    pub gold: PathBuf,
    /// Predictions (output of `predict`)
    #[arg(long)]
    pub input: PathBuf,
    /// JSON report
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Human-readable report (default: stderr)
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// CSV of per-symbol-count macro F1
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
    /// Average scores over samples instead of pooling tokens
    #[arg(long)]
    pub per_sample: bool,
    /// Largest symbol count in the bucket table
    #[arg(long)]
    pub max_symbols: Option<usize>,
}

#[derive(Args)]
pub struct IaaArgs {
    /// First annotator's corpus JSONL
    #[arg(long)]
    pub input: PathBuf,
    /// Second annotator's corpus JSONL
    #[arg(long)]
    pub other: PathBuf,
    /// JSON report
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Corpus JSONL
    #[arg(long)]
    pub input: PathBuf,
    /// SciERC JSON lines, one document per line
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct AlignArgs {
    /// Corpus JSONL holding the sentences
    #[arg(long)]
    pub input: PathBuf,
    /// Answer JSONL: {"sentence_id", "symbol_ordinal", "answer"}
    #[arg(long)]
    pub answers: PathBuf,
    /// Alignment JSONL
    #[arg(long)]
    pub output: PathBuf,
    /// How to resolve words occurring more than once
    #[arg(long, value_enum)]
    pub policy: Option<Policy>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Corpus JSONL
    #[arg(long)]
    pub output: PathBuf,
    /// Number of sentences
    #[arg(long, default_value_t = 2000)]
    pub sentences: usize,
    /// Sentences are spread evenly over this many papers
    #[arg(long, default_value_t = 40)]
    pub papers: usize,
}

fn error_code(err: &anyhow::Error) -> &'static str {
    use defx::corpus::CorpusError;
    use defx::encode::EncodeError;
    use defx::eval::EvalError;
    use defx::interop::InteropError;
    use defx::tagger::TaggerError;
    use defx::targeting::TargetingError;

    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.code;
        }
        if let Some(e) = cause.downcast_ref::<defx::Error>() {
            return e.code();
        }
        let code = if cause.is::<CorpusError>() {
            "E_CORPUS"
        } else if cause.is::<TargetingError>() {
            "E_TARGETING"
        } else if cause.is::<EncodeError>() {
            "E_ENCODE"
        } else if cause.is::<TaggerError>() {
            "E_TAGGER"
        } else if cause.is::<EvalError>() {
            "E_EVAL"
        } else if cause.is::<InteropError>() {
            "E_INTEROP"
        } else if cause.is::<std::io::Error>() {
            "E_IO"
        } else {
            continue;
        };
        return code;
    }
    "E_INTERNAL"
}

/// The context chain joined by `: `, skipping causes already spelled out by
/// their wrapper.
fn message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn resolve_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(n) = cli.threads {
        cfg.threads = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.finish();
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = resolve_config(&cli)?;
    if let Command::Config {
        action: ConfigAction::Show,
    } = cli.command
    {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()?;
    }
    commands::apply_flags(&mut cfg, &cli.command);
    cfg.finish();
    let hash = cfg.hash();
    info!("seed={} config_hash={hash}", cfg.seed);

    let mut result = commands::dispatch(&cfg, cli.command)?;
    if let Some(obj) = result.as_object_mut() {
        obj.insert("seed".into(), cfg.seed.into());
        obj.insert("config_hash".into(), hash.into());
    }
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({
                "error": error_code(&err),
                "message": message(&err),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
