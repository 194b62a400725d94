use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use zigzag_cli::commands::{parse_complex, run_compare, run_disentangle, run_period, run_simulate, run_xi};
use zigzag_cli::config::{ConfigArgs, Metric, RunConfig, DEFAULT_THRESHOLD};
use zigzag_cli::{exit, CliError};
use zigzag_core::su11::TripleCoefficients;

#[derive(Parser)]
#[command(name = "zigzag", version, about = "Light propagation in non-Hermitian zigzag Glauber-Fock lattices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Propagate a single-site excitation numerically, exactly, or both.
    Simulate {
        /// Flat JSON config; flags override its keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Compare the intensities of two grid files.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "rel-l2")]
        metric: Metric,
        /// Write the full report as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the Bloch period 2π/sqrt(λ² − 4β²).
    Period {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Sample Re/Im of ξ±(Z).
    Xi {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Factor exp(A₊K⁺ + A₀K⁰ + A₋K⁻) into exp(fK⁺)exp(gK⁰)exp(hK⁻).
    Disentangle {
        /// A₊ as `re,im` or a real number.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        a_plus: Complex64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        a0: Complex64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        a_minus: Complex64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ZIGZAG_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("ZIGZAG_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let mut stdout = std::io::stdout().lock();
    match cli.cmd {
        Cmd::Simulate { config, args } => {
            let cfg = RunConfig::load(&args, config.as_deref())?;
            Ok(run_simulate(&cfg, &mut stdout)?.exit_code)
        }
        Cmd::Compare { reference, candidate, threshold, metric, output } => {
            Ok(run_compare(&reference, &candidate, metric, threshold, output.as_deref(), &mut stdout)?.1)
        }
        Cmd::Period { lambda, beta } => run_period(lambda, beta, &mut stdout).map(|_| exit::OK),
        Cmd::Xi { config, args } => {
            let merged = match config {
                Some(p) => args.overlay(&ConfigArgs::from_file(&p)?),
                None => args,
            };
            run_xi(&merged, &mut stdout).map(|_| exit::OK)
        }
        Cmd::Disentangle { a_plus, a0, a_minus } => {
            run_disentangle(&TripleCoefficients::new(a_plus, a0, a_minus), &mut stdout).map(|_| exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
