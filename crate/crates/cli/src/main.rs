mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "treeoda",
    version,
    about = "Centers, metrics and principal treelines for samples of attributed binary trees",
    after_help = "\
Exit codes: 0 success, 2 input or validation error, 3 analysis did not converge.

Examples:
  treeoda validate vessels.json
  treeoda center vessels.json --format csv
  treeoda analyze vessels.json --out report.json
  treeoda distance vessels.json v1 v2 --weights equal
  treeoda synth --plan fixed --flip 0.5 --seed 7 --out flip.json"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus and report per-tree node counts and depths
    Validate {
        corpus: PathBuf,
        #[command(flatten)]
        io: OutputArgs,
        /// Relabel single children as left children while parsing
        #[arg(long)]
        canonicalize: bool,
    },
    /// Median family, minimal median, median-mean and average support trees
    Center {
        corpus: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        io: OutputArgs,
    },
    /// Principal structure treeline, principal attribute direction and variation report
    Analyze {
        corpus: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        io: OutputArgs,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Integer, fractional and combined distances between two trees
    Distance {
        corpus: PathBuf,
        first: String,
        second: String,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        io: OutputArgs,
    },
    /// Generate a synthetic corpus with planted structure
    Synth {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, value_enum, default_value_t = PlanArg::Fixed)]
        plan: PlanArg,
        /// Chain length for the left-chain plan
        #[arg(long, default_value_t = 3)]
        depth: u32,
        /// Comma-separated node indices for the fixed plan
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        nodes: Vec<u32>,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        /// Fraction of trees with a flipped root orientation
        #[arg(long, default_value_t = 0.5)]
        flip: f64,
        #[arg(long, default_value_t = 0.1)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corpus destination; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metadata destination; defaults to `<out>.meta.json`
        #[arg(long)]
        meta: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalysisArgs {
    /// Weight scheme; `file` uses the corpus weight block. Defaults to the
    /// corpus block when present, otherwise exponential.
    #[arg(long, value_enum)]
    weights: Option<WeightArg>,
    /// Center and scale attributes per node before analysis
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,
}

impl AnalysisArgs {
    fn normalize_or(&self, default: bool) -> bool {
        if self.normalize {
            true
        } else if self.no_normalize {
            false
        } else {
            default
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Exponential,
    Equal,
    File,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanArg {
    LeftChain,
    Fixed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate {
            corpus,
            io,
            canonicalize,
        } => commands::validate(&corpus, canonicalize, &io),
        Command::Center {
            corpus,
            analysis,
            io,
        } => commands::center(&corpus, &analysis, &io),
        Command::Analyze {
            corpus,
            analysis,
            io,
            max_iter,
            tol,
        } => commands::analyze(&corpus, &analysis, &io, max_iter, tol),
        Command::Distance {
            corpus,
            first,
            second,
            analysis,
            io,
        } => commands::distance(&corpus, &first, &second, &analysis, &io),
        Command::Synth {
            n,
            plan,
            depth,
            nodes,
            noise,
            flip,
            jitter,
            seed,
            out,
            meta,
        } => {
            let plan = match plan {
                PlanArg::LeftChain => treeoda::dataset::TopologyPlan::LeftChain { depth },
                PlanArg::Fixed => treeoda::dataset::TopologyPlan::Fixed { nodes },
            };
            let spec = treeoda::dataset::SynthSpec {
                n,
                plan,
                noise,
                flip_fraction: flip,
                jitter,
                seed,
            };
            commands::synth(&spec, out.as_deref(), meta.as_deref())
        }
    };
    match result {
        Ok(commands::Status::Done) => ExitCode::SUCCESS,
        Ok(commands::Status::NotConverged) => {
            eprintln!(
                "error: principal attribute direction did not converge; best iterate written"
            );
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
