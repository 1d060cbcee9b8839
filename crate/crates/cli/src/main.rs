mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ccsc_core::baselines::IaSelection;
use ccsc_core::RateMethod;

#[derive(Parser)]
#[command(name = "ccsc", version, about = "Finite-constellation rates and precoder design for MIMO interference channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user rates of a scenario.
    Eval(EvalArgs),
    /// Saturation condition and exact high-power limits.
    Ccsc(CcscArgs),
    /// Gradient ascent on the sum-rate.
    Optimize(OptimizeArgs),
    /// Rates over a grid of powers.
    Sweep(SweepArgs),
    /// Sum-rates averaged over random channel draws.
    Ergodic(ErgodicArgs),
    /// Interference-alignment precoders for a three-user 2x2 scenario.
    IaPrecoder(IaArgs),
}

#[derive(Args)]
struct Common {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    scenario: PathBuf,
    #[arg(long, default_value = "mc", value_parser = parse_method)]
    method: RateMethod,
    #[arg(long, default_value_t = ccsc_core::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the scenario's power (dB).
    #[arg(long, allow_negative_numbers = true)]
    power_db: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CcscArgs {
    scenario: PathBuf,
    /// Relative threshold under which a difference counts as zero.
    #[arg(long, default_value_t = ccsc_core::DEFAULT_ZERO_TOL)]
    tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// Alignment precoders (three users, 2x2, one stream).
    Ia,
    /// Unit-trace Gaussian precoders drawn from --seed.
    Random,
    /// Precoders stored in the scenario file.
    File,
}

/// Which of the two alignment solutions to use.
#[derive(Clone, Copy, ValueEnum)]
enum IaEigenvector {
    /// Higher sum-rate at the scenario's power.
    Best,
    /// Larger eigenvalue modulus.
    Largest,
}

impl From<IaEigenvector> for IaSelection {
    fn from(e: IaEigenvector) -> Self {
        match e {
            IaEigenvector::Best => IaSelection::BestSumRate,
            IaEigenvector::Largest => IaSelection::LargestEigenvalue,
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    scenario: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.4)]
    beta: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 15)]
    max_iter: usize,
    #[arg(long, default_value_t = ccsc_core::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "file")]
    init: Init,
    #[arg(long, value_enum, default_value = "best")]
    ia_eigenvector: IaEigenvector,
    #[arg(long, allow_negative_numbers = true)]
    power_db: Option<f64>,
    /// Also write the `n,f,t` trace as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Write the scenario with the final precoders.
    #[arg(long)]
    precoders_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    /// Powers in dB: `start:step:stop` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    power_db_grid: String,
    /// Comma-separated subset of mc, approx, gaussian.
    #[arg(long, default_value = "mc")]
    methods: String,
    #[arg(long, default_value_t = ccsc_core::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ErgodicPrecoder {
    Ia,
    Optimized,
    Both,
}

#[derive(Args)]
struct ErgodicArgs {
    #[arg(long, default_value_t = 3)]
    users: usize,
    #[arg(long, default_value_t = 2)]
    antennas: usize,
    #[arg(long, default_value_t = 1)]
    streams: usize,
    #[arg(long, allow_hyphen_values = true)]
    power_db_grid: String,
    #[arg(long, default_value_t = 200)]
    draws: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    precoder: ErgodicPrecoder,
    /// Outer iterations per optimized draw.
    #[arg(long, default_value_t = 8)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "best")]
    ia_eigenvector: IaEigenvector,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct IaArgs {
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "best")]
    ia_eigenvector: IaEigenvector,
    /// Samples for scoring the two solutions.
    #[arg(long, default_value_t = ccsc_core::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

fn parse_method(s: &str) -> Result<RateMethod, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, target) = match cli.command {
        Command::Eval(a) => {
            let out = a.common.output.clone();
            (commands::eval(a), out)
        }
        Command::Ccsc(a) => {
            let out = a.common.output.clone();
            (commands::ccsc(a), out)
        }
        Command::Optimize(a) => {
            let out = a.common.output.clone();
            (commands::optimize(a), out)
        }
        Command::Sweep(a) => {
            let out = a.common.output.clone();
            (commands::sweep(a), out)
        }
        Command::Ergodic(a) => {
            let out = a.common.output.clone();
            (commands::ergodic(a), out)
        }
        Command::IaPrecoder(a) => {
            let out = a.common.output.clone();
            (commands::ia_precoder(a), out)
        }
    };
    match result.and_then(|text| output::emit(&text, target.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
