//! `seqplace`: synthesize, extract, train, match, evaluate and benchmark.
//!
//! Exit codes: 0 success, 2 usage error, 3 runtime or training failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seqplace::eval::MethodKind;
use seqplace::{Metric, PathKind};

const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const THREADS_ENV: &str = "SEQPLACE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "seqplace",
    version,
    about = "Sequence-based visual place recognition toolkit"
)]
#[command(args_override_self = true)]
struct Cli {
    /// `key = value` file of default flags for the subcommand; command-line
    /// flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic reference/query dataset.
    Synth(SynthArgs),
    /// Turn a directory of PGM frames into an SPD1 descriptor file.
    Extract(ExtractArgs),
    /// Train the learned matcher on a reference traversal.
    Train(TrainArgs),
    /// Match a query traversal against a reference.
    Match(MatchArgs),
    /// Precision-recall curve and AUC of a match CSV.
    Eval(EvalArgs),
    /// AUC for every method and sequence length.
    Sweep(SweepArgs),
    /// Median wall time of the matching stage.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    frames: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Temporal correlation of the descriptor walk, in [0, 1).
    #[arg(long, default_value_t = 0.9)]
    smoothness: f64,
    /// Per-dimension Gaussian noise on the query descriptors.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Constant query offset: one value for every dimension, or a
    /// comma-separated vector.
    #[arg(long)]
    drift: Option<String>,
    #[arg(long, default_value_t = PathKind::Loop)]
    path: PathKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First frame of an aliased segment repeating frames 0..segment.
    #[arg(long, requires = "segment")]
    revisit_at: Option<usize>,
    #[arg(long, default_value_t = 0)]
    segment: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Directory of P5 PGM frames, read in lexicographic order.
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    patch: usize,
    /// Store raw thumbnails instead of L2-normalized rows.
    #[arg(long)]
    no_normalize: bool,
}

/// Where the reference and query traversals live.
#[derive(Debug, Args, Clone)]
struct DataArgs {
    /// Dataset directory with `reference.spd1`, `reference.pos`,
    /// `query.spd1` and `query.pos`.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_name = "SPD1")]
    reference: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    reference_positions: Option<PathBuf>,
    #[arg(long, value_name = "SPD1")]
    query: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    query_positions: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
struct TrainingArgs {
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 512)]
    hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Global gradient-norm clip (off unless given).
    #[arg(long)]
    clip_norm: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 10)]
    ds: usize,
    /// Output directory for `model.spm1` and `curves.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct SeqSlamArgs {
    #[arg(long, default_value_t = 0.8)]
    v_min: f64,
    #[arg(long, default_value_t = 1.2)]
    v_max: f64,
    #[arg(long, default_value_t = 0.04)]
    v_step: f64,
    #[arg(long, default_value_t = 10)]
    r_window: usize,
    #[arg(long, default_value_t = Metric::Cosine)]
    metric: Metric,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: MethodKind,
    /// Sequence length; defaults to 10, or the checkpoint's for `deep`.
    #[arg(long)]
    ds: Option<usize>,
    /// SPM1 checkpoint, required for `deep`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    seqslam: SeqSlamArgs,
    /// Match CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the activity (deep) or difference matrix (classic) as SPD1.
    #[arg(long, value_name = "SPD1")]
    export_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    matches: PathBuf,
    /// Sequence length used for the matches; sets δ = ds + 10.
    #[arg(long, required_unless_present = "delta")]
    ds: Option<usize>,
    /// Explicit tolerance in frames, overriding the rule.
    #[arg(long)]
    delta: Option<usize>,
    /// Scores are probabilities (implied by `--method deep`).
    #[arg(long)]
    higher_is_better: bool,
    #[arg(long)]
    method: Option<MethodKind>,
    /// `query_index,reference_index` pairs replacing identity alignment.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// PR curve CSV to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Dataset directory; repeat for several query conditions.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "seqslam,delta,deep")]
    methods: Vec<MethodKind>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    lengths: Vec<usize>,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    seqslam: SeqSlamArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "seqslam,delta")]
    methods: Vec<MethodKind>,
    #[arg(long, default_value_t = 10)]
    ds: usize,
    /// SPM1 checkpoint, required when benchmarking `deep`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[command(flatten)]
    seqslam: SeqSlamArgs,
    #[arg(long)]
    out: PathBuf,
}

/// A failure the user can fix by changing the invocation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let is_usage = err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<seqplace::Error>(),
                Some(seqplace::Error::Argument(_))
            )
    });
    if is_usage {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        usage(format!(
            "{THREADS_ENV} must be a non-negative integer, got {value:?}"
        ))
    })?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn run(args: Vec<OsString>) -> anyhow::Result<()> {
    let args = config::expand(args).map_err(|e| usage(format!("{e:#}")))?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            e.print()?;
            return Ok(());
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered.trim_end().trim_start_matches("error: ");
            return Err(usage(message));
        }
    };
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Extract(a) => commands::extract(a),
        Command::Train(a) => commands::train(a),
        Command::Match(a) => commands::run_match(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
