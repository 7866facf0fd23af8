//! `gnd`: codes, DEMs, sampling, training, decoding and benchmarks.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.
//!
//! Syndromes on the command line are hex strings, character `j` holding bits
//! `4j..4j+4` with bit `4j` in the least significant position of the nibble
//! (so `1` is bit 0 and `8` is bit 3). Syndrome files hold one `0/1` string
//! per line.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "gnd", version, about = "Generative neural decoding of stabilizer codes")]
struct Cli {
    /// Worker threads for sampling and benchmarks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, inspect and check stabilizer codes.
    Code {
        #[command(subcommand)]
        command: CodeCommand,
    },
    /// Inspect detector error models.
    Dem {
        #[command(subcommand)]
        command: DemCommand,
    },
    /// Draw labelled (syndrome, sector) samples.
    Sample(SampleArgs),
    /// Train a MADE (or the marginal MLP baseline).
    Train(TrainArgs),
    /// Decode syndromes with a trained checkpoint.
    Decode(DecodeArgs),
    /// Estimate logical error rates over decoders and error rates.
    Bench(BenchArgs),
    /// Render a result CSV as an SVG plot.
    Plot(PlotArgs),
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Build a code from a family.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Print [[n,k,d]] and basic facts.
    Info { file: PathBuf },
    /// Check commutation and independence; lists every violation.
    Validate { file: PathBuf },
    /// Exhaustive minimum-weight logical search.
    Distance {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_weight: usize,
        #[arg(long, value_enum, default_value_t = DistanceArg::Full)]
        kind: DistanceArg,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Rotated surface code [[d^2, 1, d]], odd d >= 3.
    RotatedSurface {
        #[arg(long)]
        d: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bivariate bicycle code, e.g. `--l 6 --m 6 --a x3,y1,y2 --b y3,x1,x2`.
    Bb {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_delimiter = ',')]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        b: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rotated surface code with Z plaquettes removed, `--defects 2:3,4:1`.
    Defected {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',')]
        defects: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    Full,
    X,
    Z,
}

#[derive(Subcommand)]
enum DemCommand {
    /// Parse, validate and round-trip a DEM; optionally write it normalized.
    Check {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum NoiseArg {
    Depolarizing,
    Xz,
}

/// Where samples come from: a code (file path or `rsc<d>`) under
/// code-capacity noise, or a DEM file.
#[derive(Args, Clone, Default)]
struct SourceArgs {
    #[arg(long, conflicts_with = "dem")]
    code: Option<String>,
    #[arg(long)]
    dem: Option<PathBuf>,
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Physical error rate (code-capacity only).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 10)]
    shots: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Made,
    Mnd,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum PrecisionArg {
    F64,
    F32,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON file with any of the flag names below as keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    #[arg(long)]
    log_every: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Hex syndrome (see top-level help for the bit order).
    #[arg(long, conflicts_with = "syndrome_file")]
    syndrome: Option<String>,
    /// One 0/1 syndrome string per line.
    #[arg(long)]
    syndrome_file: Option<PathBuf>,
    /// Code or DEM to check the checkpoint fingerprint against.
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    source: SourceArgs,
    /// Error rates, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Any of gnd, mnd, mld, bposd, comma separated.
    #[arg(long, value_delimiter = ',')]
    decoders: Option<Vec<String>>,
    #[arg(long)]
    gnd_ckpt: Option<PathBuf>,
    #[arg(long)]
    mnd_ckpt: Option<PathBuf>,
    #[arg(long)]
    tasks: Option<usize>,
    /// Shots per task.
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Label for the code column.
    #[arg(long)]
    label: Option<String>,
    /// Run directory (run.json, rows/, result.csv, plot.svg).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "logical error rate")]
    title: String,
}

/// A failure with its exit code.
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Code { command } => run::code(command),
        Command::Dem { command } => run::dem(command),
        Command::Sample(a) => run::sample(a),
        Command::Train(a) => run::train(a),
        Command::Decode(a) => run::decode(a),
        Command::Bench(a) => run::bench(a),
        Command::Plot(a) => run::plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
