//! `qdtl`: generate problems, run learners, sweep and report.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qdtl_core::harness::{
    aggregate, generate_problem, records_from_csv, records_to_csv, report_csv, report_table, run_experiment, sweep,
    Pipeline,
};
use qdtl_core::rng::{trial_seed, Streams};
use qdtl_core::{wht, ExperimentConfig, RunRecord};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qdtl", version, about = "Emulated quantum agnostic learning of decision trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the tree, truth table, spectrum and label channel of one trial.
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
        /// Trial index whose problem is written.
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Output directory, created if missing.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
    /// Run the weak parity learner and print one record per trial.
    Learn(RunArgs),
    /// Run agnostic boosting (quantum-emulated, or classical with `--classical`).
    Boost {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        classical: bool,
    },
    /// Run the prefix search directly on the learner's oracle.
    Qgl(RunArgs),
    /// Sweep ε and fit the query-count slope.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated accuracy values.
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1")]
        eps_values: Vec<f64>,
    },
    /// Aggregate record CSV files.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 if any trial violates its contract.
    #[arg(long)]
    check: bool,
}

/// Flags mirror the config keys. A `--config` file is applied after them.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    setting: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    flips: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    /// Examples per margin estimate, or `auto`.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    adversarial_failures: bool,
    /// Add a wall_ms column. Output is then no longer reproducible.
    #[arg(long)]
    wall_time: bool,
}

/// Raised for anything wrong with the configuration; maps to exit status 1.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigArgs {
    fn build(&self, pipeline: Option<Pipeline>) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(p) = pipeline {
            c.pipeline = p;
        }
        let flags = [
            ("setting", &self.setting),
            ("n", &self.n),
            ("t", &self.t),
            ("eps", &self.eps),
            ("delta", &self.delta),
            ("kappa", &self.kappa),
            ("eta", &self.eta),
            ("noise", &self.noise),
            ("flips", &self.flips),
            ("tau", &self.tau),
            ("rounds", &self.rounds),
            ("m", &self.m),
            ("trials", &self.trials),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, v).map_err(|e| ConfigError(e.to_string()))?;
            }
        }
        c.adversarial_failures |= self.adversarial_failures;
        c.wall_time |= self.wall_time;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            c.apply_text(&text).map_err(|e| ConfigError(e.to_string()))?;
        }
        c.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(c)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_records(args: &RunArgs, pipeline: Pipeline) -> Result<ExitCode> {
    let config = args.config.build(Some(pipeline))?;
    let records = run_experiment(&config)?;
    emit(args.out.as_deref(), &records_to_csv(&records))?;
    Ok(verdict(args.check, &records))
}

fn verdict(check: bool, records: &[RunRecord]) -> ExitCode {
    let bad = records.iter().filter(|r| !r.contract_ok).count();
    if check && bad > 0 {
        eprintln!("contract violated in {bad} of {} trials", records.len());
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn gen(config: &ExperimentConfig, trial: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut streams = Streams::new(trial_seed(config.seed, trial as u64));
    let problem = generate_problem(config, &mut streams)?;
    let files = [
        ("config.txt", config.to_text()),
        ("tree.txt", format!("{}\n", problem.tree)),
        ("target.csv", problem.target.to_csv()),
        ("spectrum.csv", wht(&problem.target).to_csv()),
        ("channel.csv", problem.channel.to_csv()),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { config, trial, dir } => {
            let config = config.build(None)?;
            gen(&config, trial, &dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Learn(args) => run_records(&args, Pipeline::Weak),
        Command::Boost { run, classical } => {
            run_records(&run, if classical { Pipeline::Classical } else { Pipeline::Boost })
        }
        Command::Qgl(args) => run_records(&args, Pipeline::Qgl),
        Command::Bench { run, eps_values } => {
            let config = run.config.build(None)?;
            let s = sweep(&config, &eps_values).map_err(|e| ConfigError(e.to_string()))?;
            emit(run.out.as_deref(), &s.to_csv())?;
            eprintln!("slope {:.4}", s.slope);
            let bad: usize = s.points.iter().map(|p| p.violations).sum();
            if run.check && bad > 0 {
                eprintln!("contract violated in {bad} trials");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { inputs, format, out } => {
            let mut records = Vec::new();
            for path in &inputs {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                records.extend(records_from_csv(&text).with_context(|| format!("parsing {}", path.display()))?);
            }
            let reports = aggregate(&records);
            let text = match format {
                Format::Table => report_table(&reports),
                Format::Csv => report_csv(&reports),
            };
            emit(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
