use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dualrail_cli::commands::{self, AnalysisInput};
use dualrail_cli::config::KEYS;
use dualrail_cli::{CliError, ExperimentConfig, Result};

/// Simulate, measure and analyze heralded dual-rail photonic states.
///
/// Exit status: 0 on success, 2 for configuration or usage errors, 3 for
/// numerical failures (impossible heralding, non-converged reconstruction).
#[derive(Parser)]
#[command(name = "dualrail", version)]
struct Cli {
    /// Flat `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides the file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overrides the file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Release time of memory 1, s
    #[arg(long, global = true, allow_negative_numbers = true)]
    t1: Option<f64>,
    /// Release time of memory 2, s
    #[arg(long, global = true, allow_negative_numbers = true)]
    t2: Option<f64>,
    /// Idler-path phase, rad
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Power transmissivity of the idler beamsplitter
    #[arg(long, global = true)]
    bs_ratio: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Herald a state and mix in fake counts
    Generate,
    /// Apply memory storage to a state file
    Store {
        #[arg(long)]
        state: PathBuf,
        /// Release-time pair `t1,t2` in seconds; repeat for a batch.
        /// Defaults to the configured t1 and t2.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(f64, f64)>,
    },
    /// Sample homodyne quadratures of a state file
    Measure {
        #[arg(long)]
        state: PathBuf,
    },
    /// Maximum-likelihood reconstruction from a samples file
    Reconstruct {
        #[arg(long)]
        samples: PathBuf,
    },
    /// Entanglement and Wigner report for a state or a delay series
    Analyze {
        #[arg(long, conflicts_with = "series", required_unless_present = "series")]
        state: Option<PathBuf>,
        /// File of `t1 t2 path` rows
        #[arg(long)]
        series: Option<PathBuf>,
        /// Samples for bootstrap error bars
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// generate, store, measure, reconstruct and analyze
    Pipeline,
    /// Calibrated negativity series, timing-pair table and phase fit
    Reproduce,
    /// List configuration keys with defaults
    Keys,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `t1,t2`")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    if let Some(s) = cli.seed {
        overrides.push(("seed", s.to_string()));
    }
    if let Some(o) = &cli.out {
        overrides.push(("out_dir", o.to_string_lossy().into_owned()));
    }
    for (key, v) in [("t1", cli.t1), ("t2", cli.t2), ("theta", cli.theta), ("bs_transmissivity", cli.bs_ratio)] {
        if let Some(v) = v {
            overrides.push((key, format!("{v:e}")));
        }
    }
    ExperimentConfig::parse_with_overrides(&text, &overrides)
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Keys = cli.command {
        for (key, default, doc) in KEYS {
            let default = if default.is_empty() { "(required)" } else { default };
            println!("{key} = {default}    # {doc}");
        }
        return Ok(());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate => {
            let p = commands::generate(&cfg)?;
            println!("{}", p.display());
        }
        Command::Store { state, pairs } => {
            let pairs = if pairs.is_empty() {
                vec![(cfg.schedule.t1, cfg.schedule.t2)]
            } else {
                pairs
            };
            for p in commands::store(&cfg, &state, &pairs)? {
                println!("{}", p.display());
            }
        }
        Command::Measure { state } => {
            println!("{}", commands::measure(&cfg, &state)?.display());
        }
        Command::Reconstruct { samples } => {
            let path = commands::reconstruct(&cfg, &samples)?.require_converged()?;
            println!("{}", path.display());
        }
        Command::Analyze { state, series, samples } => {
            let input = match (&state, &series) {
                (Some(s), None) => AnalysisInput::State(s),
                (None, Some(s)) => AnalysisInput::Series(s),
                _ => return Err(CliError::Config("give exactly one of --state and --series".into())),
            };
            let r = commands::analyze(&cfg, input, samples.as_deref())?;
            println!("log_negativity = {}", r.log_negativity.value);
        }
        Command::Pipeline => {
            let r = commands::pipeline(&cfg)?;
            println!("log_negativity = {}", r.log_negativity.value);
        }
        Command::Reproduce => {
            let t = commands::reproduce(&cfg)?;
            for (time, model, reference) in &t.series {
                println!("{:>5.0} ns  E = {model:.4}  (reference {reference:.3})", time * 1e9);
            }
            println!("rotation frequency = {:.1} kHz", t.phase.frequency / 1e3);
        }
        Command::Keys => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
