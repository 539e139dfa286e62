//! `gld`: exponents, rate sweeps, simulations and self-checks for the
//! generalized likelihood decoder.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid input; exit code 2.
    Input(String),
    /// No feasible grid point or non-integral composition; exit code 3.
    Infeasible(String),
    /// A verification suite failed; exit code 4.
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<gld_core::Error> for CliError {
    fn from(e: gld_core::Error) -> Self {
        use gld_core::Error as E;
        match e {
            E::NonIntegralComposition { .. } | E::EmptyFeasibleGrid { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gld", version, about = "Expurgated exponents and simulation of the generalized likelihood decoder")]
struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Print the wall-clock time to stderr.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Both exponent forms and their gap at one rate.
    Exponent {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Exponents over a rate range.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Sample a code, compute its error profile, expurgate and run the checks.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "code-size")]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the codebook, one word per line.
        #[arg(long)]
        codebook_out: Option<PathBuf>,
    },
    /// Run the oracle suites.
    Verify {
        #[arg(long, value_enum, default_value_t = verify::Level::Quick)]
        level: verify::Level,
        /// Validate this config and include its channel and metric.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(k) = self.resolution {
            c.resolution = k;
        }
        if let Some(b) = self.beta {
            c.metric.beta = b;
        }
        if let Some(p) = &self.output {
            c.output.path = Some(p.clone());
        }
        if let Some(f) = self.format {
            c.output.format = Some(f);
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Exponent { common, rate } => {
            let mut c = common.load()?;
            if rate.is_some() {
                c.rate = rate;
            }
            commands::exponent(&c)
        }
        Command::Sweep { common, start, end, step } => {
            let mut c = common.load()?;
            if start.is_some() || end.is_some() || step.is_some() {
                let base = c.rates.unwrap_or(config::RateRange {
                    start: c.rate.unwrap_or(0.0),
                    end: c.rate.unwrap_or(0.0),
                    step: 0.01,
                });
                c.rates = Some(config::RateRange {
                    start: start.unwrap_or(base.start),
                    end: end.unwrap_or(base.end),
                    step: step.unwrap_or(base.step),
                });
            }
            commands::sweep(&c)
        }
        Command::Simulate { common, rate, n, m, trials, epsilon, seed, codebook_out } => {
            let mut c = common.load()?;
            if rate.is_some() {
                c.rate = rate;
            }
            let sim = c.simulation.get_or_insert_with(Default::default);
            sim.n = n.or(sim.n);
            sim.m = m.or(sim.m);
            sim.trials = trials.or(sim.trials);
            sim.epsilon = epsilon.or(sim.epsilon);
            sim.seed = seed.unwrap_or(sim.seed);
            commands::simulate(&c, codebook_out.as_deref())
        }
        Command::Verify { level, config } => {
            let c = config.map(|p| RunConfig::load(&p)).transpose()?;
            verify::run(level, c.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let timing = cli.timing;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(CliError::Input(format!("cannot start workers: {e}"))),
    };
    if timing {
        eprintln!("runtime_ms={}", start.elapsed().as_millis());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gld: {e}");
            ExitCode::from(e.code())
        }
    }
}
