//! Command-line front end for the distribution-free junta tester.
//!
//! Function and distribution specs are JSON, given inline or as a file path.
//! A reject verdict is a result like any other: the exit code is nonzero only
//! when the command itself could not run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dfjunta::bruteforce::distance_to_nearest_kjunta;
use dfjunta::harness::{calibrate_uj, run_experiment, sweep_budget, ExperimentConfig, SweepConfig};
use dfjunta::tester::{run_seeded, LITERAL_DELTA, LITERAL_EPS};
use dfjunta::uniform_junta::DEFAULT_C_ROUNDS;
use dfjunta::{BlockPartition, DistributionSpec, FunctionSpec, TesterParams};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "dfjunta", version, about = "Distribution-free k-junta testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tester once and print the transcript.
    Test {
        /// Function spec: inline JSON or a path to a JSON file.
        #[arg(long)]
        function: String,
        /// Distribution spec: inline JSON or a path; uniform when omitted.
        #[arg(long)]
        distribution: Option<String>,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_C_ROUNDS)]
        c_rounds: f64,
        /// Fixed partition as JSON lists of 1-based coordinates.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Run every instance of a TOML (or .json) experiment config.
    Experiment {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Override the config's thread count.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Exact distance to the nearest k-junta (small n only).
    Distance {
        #[arg(long)]
        function: String,
        #[arg(long)]
        distribution: Option<String>,
        #[arg(short, long)]
        k: usize,
    },
    /// Worst observed query counts over a (k, eps) grid.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, default_value_t = 128)]
        n: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Reject rates of the uniform-distribution tester per round multiplier.
    CalibrateUj {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3")]
        c: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        k: Vec<usize>,
        #[arg(long, default_value_t = LITERAL_EPS)]
        eps: f64,
        #[arg(long, default_value_t = LITERAL_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `arg` as JSON, or reads it as a file when it does not look like JSON.
fn load_json<T: DeserializeOwned>(arg: &str, what: &str) -> Result<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(Path::new(arg)).with_context(|| format!("reading {what} from {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing {what}"))
}

fn distribution_or_uniform(arg: Option<&str>, n: usize) -> Result<DistributionSpec> {
    match arg {
        Some(a) => load_json(a, "distribution spec"),
        None => Ok(DistributionSpec::Uniform { n }),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Test {
            function,
            distribution,
            k,
            eps,
            seed,
            c_rounds,
            partition,
        } => {
            let fspec: FunctionSpec = load_json(&function, "function spec")?;
            let f = fspec.build()?;
            let dist = distribution_or_uniform(distribution.as_deref(), fspec.dim())?.build()?;
            let params = TesterParams::derive_with(k, eps, seed, c_rounds)?;
            let partition = partition
                .map(|p| -> Result<BlockPartition> {
                    let lists: Vec<Vec<usize>> = load_json(&p, "partition")?;
                    Ok(BlockPartition::from_coord_lists(fspec.dim(), &lists)?)
                })
                .transpose()?;
            let transcript = run_seeded(&f, &dist, &params, partition.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&transcript)?);
        }
        Command::Experiment {
            config,
            format,
            output,
            parallelism,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            let report = run_experiment(&cfg)?;
            let text = match format {
                Format::Json => report.to_json()?,
                Format::Csv => report.to_csv()?,
            };
            emit(&text, output.as_deref())?;
            for row in report.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "instance {}: {}",
                    row.name,
                    row.error.as_deref().unwrap_or_default()
                );
            }
        }
        Command::Distance {
            function,
            distribution,
            k,
        } => {
            let fspec: FunctionSpec = load_json(&function, "function spec")?;
            let f = fspec.build()?;
            let dist = distribution_or_uniform(distribution.as_deref(), fspec.dim())?.build()?;
            let report = distance_to_nearest_kjunta(&f, &dist, k)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Sweep {
            k,
            eps,
            trials,
            seed,
            n,
            format,
        } => {
            if k.iter().any(|&k| k > n) {
                bail!("every k must be at most n = {n}");
            }
            let table = sweep_budget(&SweepConfig {
                k_list: k,
                eps_list: eps,
                trials,
                base_seed: seed,
                n,
            })?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&table)?),
                Format::Csv => print!("{}", table.to_csv()?),
            }
            eprintln!(
                "median ratio {:.3}, max ratio {:.3}",
                table.median_ratio, table.max_ratio
            );
        }
        Command::CalibrateUj {
            c,
            k,
            eps,
            delta,
            trials,
            seed,
        } => {
            let rows = calibrate_uj(&c, &k, eps, delta, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
    }
    Ok(())
}
