//! `comb`: command-line front end for `comb-stats`.
//!
//! Exit codes: 0 success, 2 input error, 3 resource cap, 4 numerical failure.

mod commands;
mod config;
mod error;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comb_stats::comm::DEFAULT_CAP;

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "comb",
    version,
    about = "Conway-Maxwell binomial models for count data"
)]
struct Cli {
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path prefix; files are written as `<prefix>.<name>` instead of
    /// printing to stdout.
    #[arg(long, global = true)]
    out: Option<String>,

    #[command(subcommand)]
    command: Command,
}

/// Either the mean parameter `p` or the natural parameter `psi`.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Location {
    /// Success probability.
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Log-odds `ln(p / (1 - p))`.
    #[arg(long, allow_negative_numbers = true)]
    psi: Option<f64>,
}

/// Overrides for the prior hyperparameters in the config.
#[derive(Debug, Args)]
struct PriorArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the COMB pmf.
    Pmf {
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        loc: Location,
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
    },
    /// Conjugate fit: MAP, covariance, fitted counts and baselines.
    Fit {
        /// Frequency table (`k,count`) or raw file (one k per line).
        data: PathBuf,
        /// Number of trials; required for raw files.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Pairwise probabilities of the exchangeable representation over a p grid.
    Pairwise {
        #[arg(long)]
        m: usize,
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        /// Interior grid points `i / (steps + 1)`.
        #[arg(long, default_value_t = 99)]
        steps: usize,
    },
    /// Draw from the COMB distribution (ChaCha20, seeded).
    Sample {
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        loc: Location,
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        #[arg(long)]
        n: usize,
    },
    /// Conway-Maxwell multinomial tools.
    Comm {
        #[command(subcommand)]
        command: CommCommand,
    },
    /// Normalized posterior density on the configured lattice, as CSV.
    PosteriorGrid {
        data: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        prior: PriorArgs,
    },
    /// Integrate the posterior kernel over expanding boxes.
    Propriety {
        data: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Compare binomial, COMB and correlated-binomial fits by squared error.
    Compare {
        data: PathBuf,
        #[arg(long)]
        m: Option<usize>,
        /// Correlated-binomial mixing weight; p defaults to the binomial MLE.
        #[arg(long)]
        cb_rho: Option<f64>,
        #[arg(long)]
        cb_p: Option<f64>,
        /// Expected counts from an external fit, scored as-is.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        reference: Option<Vec<f64>>,
    },
}

#[derive(Debug, Subcommand)]
enum CommCommand {
    /// Enumerate the pmf over all compositions.
    Pmf {
        #[arg(long)]
        m: usize,
        /// Category probabilities, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        /// Largest number of compositions to enumerate.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
    },
    /// Sufficient statistics of a file of compositions.
    Stats { data: PathBuf },
    /// Conjugate update of flat hyperparameters by a file of compositions.
    Update { data: PathBuf },
}

fn run(cli: Cli) -> CliResult<commands::Outcome> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.out.is_some() {
        config.out = cli.out;
    }
    let apply = |config: &mut RunConfig, prior: &PriorArgs| {
        config.a = prior.a.unwrap_or(config.a);
        config.b = prior.b.unwrap_or(config.b);
        config.c = prior.c.unwrap_or(config.c);
    };
    match cli.command {
        Command::Pmf { m, loc, nu } => commands::pmf(&config, m, loc.p, loc.psi, nu),
        Command::Fit { data, m } => commands::fit(&config, &data, m),
        Command::Pairwise { m, nu, steps } => commands::pairwise(&config, m, nu, steps),
        Command::Sample { m, loc, nu, n } => commands::sample(&config, m, loc.p, loc.psi, nu, n),
        Command::Comm { command } => match command {
            CommCommand::Pmf { m, p, nu, cap } => commands::comm_pmf(&config, m, p, nu, cap),
            CommCommand::Stats { data } => commands::comm_stats(&config, &data),
            CommCommand::Update { data } => commands::comm_update(&config, &data),
        },
        Command::PosteriorGrid { data, m, prior } => {
            apply(&mut config, &prior);
            config.validate()?;
            commands::posterior_grid(&config, data.as_deref(), m)
        }
        Command::Propriety {
            data,
            m,
            prior,
            levels,
        } => {
            apply(&mut config, &prior);
            config.validate()?;
            commands::propriety(&config, data.as_deref(), m, levels)
        }
        Command::Compare {
            data,
            m,
            cb_rho,
            cb_p,
            reference,
        } => commands::compare(&config, &data, m, cb_p, cb_rho, reference),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|outcome| {
        let failure = outcome.failure;
        outcome.staged.commit()?;
        failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
