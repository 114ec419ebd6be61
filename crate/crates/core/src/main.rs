use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dilation_lab::cli::{self, Command, RunConfig, EXIT_INPUT};
use dilation_lab::sample::DEFAULT_SEED;

/// Build finite-dimensional Markov dilations and certify their identities.
#[derive(Parser)]
#[command(name = "dilation-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Sub {
    /// Schur multiplier: certification, dilation and factorization.
    CheckSchur { input: PathBuf },
    /// Markov chain identities and the Rota dilation.
    Rota { input: PathBuf },
    /// Fourier multiplier on a finite group and its crossed-product dilation.
    Fourier { input: PathBuf },
    /// Unitary dilations and second quantization of a contraction.
    Secondquant { input: PathBuf },
}

#[derive(Args)]
struct Opts {
    /// Numerical tolerance for residual checks [default: 1e-9]
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Random pairs per sampled identity.
    #[arg(long, global = true, default_value_t = cli::DEFAULT_SAMPLES)]
    samples: usize,
    /// Chain truncation depth.
    #[arg(long, global = true, default_value_t = cli::DEFAULT_DEPTH)]
    depth: usize,
    /// Dilation window, overriding the contraction file.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Rota / projection index n.
    #[arg(long, global = true, default_value_t = cli::DEFAULT_STEPS)]
    steps: usize,
    /// Record wall-clock duration in the report.
    #[arg(long, global = true)]
    timing: bool,
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (command, input) = match args.command {
        Sub::CheckSchur { input } => (Command::CheckSchur, input),
        Sub::Rota { input } => (Command::Rota, input),
        Sub::Fourier { input } => (Command::Fourier, input),
        Sub::Secondquant { input } => (Command::Secondquant, input),
    };
    let o = args.opts;
    let config = RunConfig {
        command,
        input,
        tol: o.tol,
        seed: o.seed,
        samples: o.samples,
        depth: o.depth,
        window: o.window,
        steps: o.steps,
        timing: o.timing,
    };
    match cli::run(&config) {
        Ok(report) => {
            // a closed stdout (e.g. piped into `head`) is not a verification failure
            let _ = writeln!(std::io::stdout(), "{}", report.to_json());
            eprint!("{}", report.summary());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
