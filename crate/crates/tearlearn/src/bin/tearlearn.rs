//! Thin command-line front end over the pipeline stages. All logic lives
//! in the library; this binary only parses flags, merges them over an
//! optional JSON configuration file, and dispatches.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tearlearn::pipeline::{resolve_threads, run_command, ModelKind, PipelineConfig};
use tearlearn::tear::WeightMode;
use tearlearn::AcyclicityMode;

#[derive(Parser)]
#[command(
    name = "tearlearn",
    version,
    about = "Learn a DAG from data and repair leftover cycles exactly",
    after_help = "Exit codes: 0 success, 2 usage error, 3 data error, \
                  4 infeasible repair, 5 numerical failure.\n\
                  TEARLEARN_THREADS caps worker threads when set."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset, its ground-truth matrix, and a prior
    Generate(CommonArgs),
    /// Train the configured model on the dataset
    Train(CommonArgs),
    /// Repair the trained matrix by exact minimum-cost loop tearing
    Tear(CommonArgs),
    /// Repair the trained matrix by threshold escalation
    Truncate(CommonArgs),
    /// Score repaired (or trained) matrices against truth and/or data
    Eval(CommonArgs),
    /// Run every stage in order: generate, train, tear, truncate, eval
    Pipeline(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Train(_) => "train",
            Command::Tear(_) => "tear",
            Command::Truncate(_) => "truncate",
            Command::Eval(_) => "eval",
            Command::Pipeline(_) => "pipeline",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Generate(a)
            | Command::Train(a)
            | Command::Tear(a)
            | Command::Truncate(a)
            | Command::Eval(a)
            | Command::Pipeline(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; explicit flags override its fields
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Run seed (also seeds training)
    #[arg(long)]
    seed: Option<u64>,

    /// Which learner the train stage runs
    #[arg(long, value_enum)]
    model: Option<ModelArg>,

    /// Acyclicity measure; `poly` uses gamma = 0.1 (set other values in
    /// the configuration file)
    #[arg(long = "h-mode", value_enum)]
    h_mode: Option<HModeArg>,

    /// Drop trained entries with magnitude strictly below this before
    /// tearing
    #[arg(long)]
    omega: Option<f64>,

    /// Edge-removal cost: the entry's absolute value or its square
    #[arg(long = "weight-mode", value_enum)]
    weight_mode: Option<WeightModeArg>,

    /// Output directory for all artifacts
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Linear,
    Daggnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum HModeArg {
    Exp,
    Poly,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightModeArg {
    Abs,
    Square,
}

fn build_config(args: &CommonArgs) -> tearlearn::Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::new(),
    };
    if let Some(seed) = args.seed {
        cfg.apply_seed(seed);
    }
    if let Some(model) = args.model {
        cfg.model = match model {
            ModelArg::Linear => ModelKind::Linear,
            ModelArg::Daggnn => ModelKind::DagGnn,
        };
    }
    if let Some(h) = args.h_mode {
        cfg.train.h_mode = match h {
            HModeArg::Exp => AcyclicityMode::ExpTrace,
            HModeArg::Poly => AcyclicityMode::Polynomial { gamma: 0.1 },
        };
    }
    if let Some(omega) = args.omega {
        cfg.tear.omega = omega;
    }
    if let Some(mode) = args.weight_mode {
        cfg.tear.weight_mode = match mode {
            WeightModeArg::Abs => WeightMode::Abs,
            WeightModeArg::Square => WeightMode::Square,
        };
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> tearlearn::Result<()> {
    let threads = resolve_threads()?;
    let cfg = build_config(cli.command.args())?;
    run_command(&cfg, cli.command.name(), threads)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
