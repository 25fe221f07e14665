use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use histent_cli::report::Report;
use histent_cli::{CliError, cmd_entropy, cmd_minimize, cmd_split, cmd_validate, read_problem};

/// Decoherence functions, windows and information-entropy from the command
/// line. Problem files are JSON documents; reports are JSON on stdout.
#[derive(Parser)]
#[command(name = "histent", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Spectral,
    Param1d,
    Greedy,
    Exhaustive,
}

impl StrategyArg {
    fn as_str(&self) -> &'static str {
        match self {
            StrategyArg::Spectral => "spectral",
            StrategyArg::Param1d => "param1d",
            StrategyArg::Greedy => "greedy",
            StrategyArg::Exhaustive => "exhaustive",
        }
    }
}

#[derive(clap::Args)]
struct CommonOpts {
    /// Override the tolerance from the problem file.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the seed from the problem file.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report to a file as well as stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the decoherence-operator conditions.
    Validate {
        file: PathBuf,
        /// Random projectors sampled per run for the diagonal check.
        #[arg(long, default_value_t = 200)]
        sample_count: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Entropy of a named window.
    Entropy {
        file: PathBuf,
        /// Name of the window in the problem file.
        #[arg(long)]
        window: String,
        /// Additional exponents for the generalised entropy (repeatable).
        #[arg(long = "x")]
        x: Vec<f64>,
        /// Also report values converted to bits.
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Minimise the entropy over consistent windows.
    Minimize {
        file: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// Strategy budget: basis samples (param1d) or rounds (greedy).
        #[arg(long)]
        budget: Option<usize>,
        /// Also report values converted to bits.
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Split the operator into two shifted halves.
    Split {
        file: PathBuf,
        /// File with the first Hermitian shift operand.
        #[arg(long)]
        s1: PathBuf,
        /// File with the second Hermitian shift operand.
        #[arg(long)]
        s2: PathBuf,
        /// Output prefix for the `.plus.json` / `.minus.json` files
        /// (defaults to the input path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random projectors sampled for the residual checks.
        #[arg(long, default_value_t = 100)]
        sample_count: usize,
        /// Override the tolerance from the problem file.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the seed from the problem file.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn emit(report: &Report, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run() -> Result<(), (CliError, Option<PathBuf>)> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { file, sample_count, common } => {
            let problem = read_problem(&file, common.tol, common.seed)
                .map_err(|e| (e, common.out.clone()))?;
            let report = cmd_validate(&problem, sample_count)
                .map_err(|e| (e, common.out.clone()))?;
            emit(&report, common.out.as_ref()).map_err(|e| (e, None))
        }
        Command::Entropy { file, window, x, bits, common } => {
            let problem = read_problem(&file, common.tol, common.seed)
                .map_err(|e| (e, common.out.clone()))?;
            let report = cmd_entropy(&problem, &window, &x, bits)
                .map_err(|e| (e, common.out.clone()))?;
            emit(&report, common.out.as_ref()).map_err(|e| (e, None))
        }
        Command::Minimize { file, strategy, budget, bits, common } => {
            let problem = read_problem(&file, common.tol, common.seed)
                .map_err(|e| (e, common.out.clone()))?;
            let report = cmd_minimize(&problem, strategy.as_str(), budget, bits)
                .map_err(|e| (e, common.out.clone()))?;
            emit(&report, common.out.as_ref()).map_err(|e| (e, None))
        }
        Command::Split { file, s1, s2, out, sample_count, tol, seed } => {
            let problem = read_problem(&file, tol, seed).map_err(|e| (e, None))?;
            let prefix = out.unwrap_or_else(|| file.clone());
            let report = cmd_split(&problem, &s1, &s2, &prefix, sample_count)
                .map_err(|e| (e, None))?;
            emit(&report, None).map_err(|e| (e, None))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((error, out)) => {
            // a failed validation still emits its report
            if let CliError::ValidationFailed(report) = &error {
                let _ = emit(report, out.as_ref());
            }
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
