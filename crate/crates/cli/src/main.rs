use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use offpsf::config::RunConfig;
use offpsf::experiment::{rate_sweep, run_experiment};
use offpsf::{fixtures, mdp_file, verify, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;
const EXIT_RUN: u8 = 4;

#[derive(Parser)]
#[command(name = "offpsf", version, about = "Off-policy smoothed-functional policy search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ascent loop for every repetition and write per-run and aggregate CSVs.
    Run(Common),
    /// Run the constant-step schedule for several budgets and fit the log-log slope.
    RateSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated iteration budgets, strictly ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
    },
    /// Run a statistical property suite.
    Verify {
        /// One of is-unbiased, sf-unbiased, bias-bound, variance-scaling, prox-props, all.
        suite: String,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a built-in fixture in the MDP file format.
    Fixture { name: String },
}

enum Failure {
    Error(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(reps) = common.reps {
        config.repetitions = reps;
    }
    Ok(config)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()).into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(common) => {
            let config = load(&common)?;
            let threads = common.threads;
            let report = with_threads(threads, || {
                create_dir(&common.out)?;
                Ok(run_experiment(&config, &common.out)?)
            })?;
            let finals: Vec<String> = report
                .successes()
                .filter_map(|r| r.final_exact_value())
                .map(|j| format!("{j:.6}"))
                .collect();
            println!(
                "{} runs, {} failed; final J: [{}]",
                report.repetitions.len(),
                report.failures(),
                finals.join(", ")
            );
            println!("wrote {}", common.out.display());
            if report.failures() == report.repetitions.len() {
                if let Some(Err(e)) = report.repetitions.into_iter().map(|r| r.result).next() {
                    return Err(e.into());
                }
            }
            Ok(())
        }
        Command::RateSweep { common, n_list } => {
            let config = load(&common)?;
            let report = with_threads(common.threads, || Ok(rate_sweep(&config, &n_list)?))?;
            create_dir(&common.out)?;
            let path = common.out.join("rate_sweep.csv");
            let file = File::create(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            report.write_csv(BufWriter::new(file))?;
            for r in &report.rows {
                println!(
                    "N={:<6} mean |P|^2 = {:.6e} (se {:.2e}, {} runs, {} failed)",
                    r.iterations, r.mean, r.se, r.reps, r.failed
                );
            }
            match report.slope {
                Some(s) => println!("log-log slope: {s:.4}"),
                None => println!("log-log slope: n/a"),
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Verify { suite, threads } => {
            let report = with_threads(threads, || Ok(verify::verify(&suite)?))?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Fixture { name } => {
            print!("{}", mdp_file::format_mdp(&fixtures::by_name(&name)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(EXIT_CHECK),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUN)
            }
        }
    }
}
