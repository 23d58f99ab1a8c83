use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use aggfield::experiments::report::{parse_report_json, write_report, Format};
use aggfield::experiments::{
    run_convergence_table, run_mc_experiment, run_validation_suite, theory_values, ExperimentConfig, Profile,
    RunOptions,
};
use aggfield::theory::{regime_constants, ClosedForm, Limit};
use aggfield::Error;

#[derive(Parser)]
#[command(name = "aggfield", version, about = "Aggregated ±1 random fields and their Gaussian limits")]
struct Cli {
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tolerance profile of the validation suite.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Standard)]
    profile: Profile,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo covariance study of the normalized aggregated field.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Record elapsed time in the report.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Limit constants and limit covariances at the configured pairs.
    Theory { config: PathBuf },
    /// Convergence of the normalized covariance to its limit.
    Table {
        config: PathBuf,
        /// Use Monte Carlo estimates instead of exact finite-size covariances.
        #[arg(long)]
        monte_carlo: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        wall_clock: bool,
    },
    /// Run the deterministic self-checks; exits nonzero on any failure.
    Validate,
    /// Re-encode a JSON report.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Serialize)]
struct TheorySummary {
    regime: String,
    hurst: Option<[f64; 2]>,
    sigma2: Option<f64>,
    atom_mass: Option<f64>,
    pairs: Vec<TheoryPair>,
}

#[derive(Serialize)]
struct TheoryPair {
    s: [f64; 2],
    t: [f64; 2],
    covariance: f64,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|source| {
            Error::Io {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), Error> {
    let mut out = open_output(output)?;
    let io = |source| Error::Io {
        path: output.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
        source,
    };
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io(e.into()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io)
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<bool, Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    }
    let output = cli.output.as_deref();
    let emit = |report, format| -> Result<(), Error> {
        let mut out = open_output(output)?;
        write_report(&report, &mut out, format)
            .and_then(|_| out.flush())
            .map_err(|source| Error::Io {
                path: output.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
                source,
            })
    };
    match cli.command {
        Command::Simulate {
            config,
            format,
            wall_clock,
        } => {
            let config = load(&config, cli.seed)?;
            emit(run_mc_experiment(&config, RunOptions { wall_clock })?, format)?;
        }
        Command::Table {
            config,
            monte_carlo,
            format,
            wall_clock,
        } => {
            let config = load(&config, cli.seed)?;
            emit(run_convergence_table(&config, !monte_carlo, RunOptions { wall_clock })?, format)?;
        }
        Command::Theory { config } => {
            let config = load(&config, cli.seed)?;
            let (hurst, sigma2) = match regime_constants(&config.regime)? {
                Limit::Sheet { h, sigma2 } => (Some(h), Some(sigma2)),
                Limit::Critical => (None, None),
            };
            let values = theory_values(&config)?;
            let summary = TheorySummary {
                regime: config.regime.kind().name().to_owned(),
                hurst,
                sigma2,
                atom_mass: config.regime.law().clamp_atom()?,
                pairs: config
                    .pairs
                    .iter()
                    .zip(values)
                    .map(|(p, covariance)| TheoryPair {
                        s: p.s,
                        t: p.t,
                        covariance,
                    })
                    .collect(),
            };
            write_json(&summary, output)?;
        }
        Command::Validate => {
            let report = run_validation_suite(cli.profile, &ClosedForm);
            for check in &report.checks {
                eprintln!("{} {}: {}", if check.passed { "ok  " } else { "FAIL" }, check.name, check.detail);
            }
            write_json(&report, output)?;
            return Ok(report.passed());
        }
        Command::Report { input, format } => emit(parse_report_json(&input)?, format)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
