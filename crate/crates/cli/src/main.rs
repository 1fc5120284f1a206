mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use io::CliError;

/// Graph-based semantic parsing: data splits, training, decoding and audits.
#[derive(Debug, Parser)]
#[command(name = "topgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Partition a dataset into full, terminal-only and nonterminal-only files.
    Split(SplitArgs),
    /// Train a scorer and write a checkpoint plus a loss trace.
    Train(TrainArgs),
    /// Decode queries with a model, or decode score files.
    Decode(DecodeArgs),
    /// Exact-match evaluation with decoder diagnostics.
    Eval(EvalArgs),
    /// Compare the decoder against exhaustive search on small instances.
    OracleAudit(AuditArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Derive vocabularies, parse files or score files from a dataset.
    Convert(ConvertArgs),
    /// Sample a dataset from the built-in compositional grammar.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Dataset with raw, tokenized and tree columns.
    #[arg(long)]
    input: PathBuf,
    /// Full / terminal-only / nonterminal-only percentages, e.g. 10/90/0.
    #[arg(long, default_value = "100/0/0")]
    percent: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output files are PREFIX.full.tsv, PREFIX.term.tsv, PREFIX.nonterm.tsv.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training files (plain or with a supervision mode column).
    #[arg(long = "train", required = true)]
    train: Vec<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Loss trace CSV; defaults to the checkpoint path plus `.loss.csv`.
    #[arg(long)]
    loss_trace: Option<PathBuf>,
    /// Fixed symbol vocabulary instead of one built from the training data.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Any configuration key, as key=value. Applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Order {
    Asc,
    Desc,
}

#[derive(Debug, Args)]
struct DecodeOpts {
    /// Order in which Unused children are repaired.
    #[arg(long, value_enum, default_value = "asc")]
    unused_order: Order,
    /// Try every symbol replica as root child.
    #[arg(long)]
    widen_root_candidates: bool,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long, requires = "input", conflicts_with = "scores")]
    model: Option<PathBuf>,
    /// Queries: one tokenized query per line, or a dataset file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Score files, one JSON matrix per line.
    #[arg(long, required_unless_present = "model")]
    scores: Option<PathBuf>,
    /// Predictions TSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opts: DecodeOpts,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Gold dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, required_unless_present = "gold_scores")]
    model: Option<PathBuf>,
    /// Decode 0/1 gold edge scores instead of model scores.
    #[arg(long, conflicts_with = "model")]
    gold_scores: bool,
    /// Vocabulary the data was prepared with; must match the checkpoint.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Prediction dump TSV.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    opts: DecodeOpts,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long, requires = "input", conflicts_with = "scores")]
    model: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "model")]
    scores: Option<PathBuf>,
    /// Largest number of non-root nodes searched exhaustively.
    #[arg(long, default_value_t = topgraph::decoder::DEFAULT_ORACLE_BOUND)]
    bound: usize,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    /// Vocabulary for node-set sizes; built from the data when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    /// Symbol vocabulary.
    Vocab,
    /// One parse block per example.
    Parses,
    /// One JSON score matrix per query (needs --model).
    Scores,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    to: Target,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Split(a) => commands::split(a),
        Command::Train(a) => commands::train(a),
        Command::Decode(a) => commands::decode(a),
        Command::Eval(a) => commands::eval(a),
        Command::OracleAudit(a) => commands::oracle_audit(a),
        Command::Stats(a) => commands::stats(a),
        Command::Convert(a) => commands::convert(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
