#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod svg;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use error::{CliError, CliResult};

/// Simulate interacting lattice bosons and probe propagation bounds.
#[derive(Parser)]
#[command(name = "lrbose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML, or JSON for `.json` files).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `output.dir` or `./out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config seed (the override is hashed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `KEY=VALUE` with KEY in fit, exact, krylov. Repeatable or comma separated.
    #[arg(long = "tolerance-overrides", global = true, value_delimiter = ',')]
    tolerance_overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the initial state, record observables, run configured probes.
    Simulate,
    /// Run the configured probes only.
    Probe,
    /// Commutator decay scan from the `[lrb]` section.
    LrbScan,
    /// Multiscale observables and bad-time monitoring from the `[astlo]` section.
    Astlo,
    /// Check a config and report dimension and memory without running.
    Validate,
    /// Re-render SVG plots from CSV artifacts.
    Plot {
        /// CSV files written by other subcommands.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn resolved(cli: &Cli) -> CliResult<config::Resolved> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::new("usage", "config", "--config is required"))?;
    let mut cfg = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for item in &cli.tolerance_overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::new("usage", "tolerance-overrides", format!("expected KEY=VALUE, got `{item}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::new("usage", format!("tolerances.{}", k.trim()), format!("not a number: `{v}`")))?;
        cfg.tolerances.insert(k.trim().to_string(), v);
    }
    cfg.resolve()
}

fn run(cli: &Cli) -> CliResult<Value> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("usage", "jobs", e.to_string()))?;
    }
    if let Command::Plot { inputs } = &cli.command {
        return commands::plot(inputs, cli.out.as_deref());
    }
    let res = resolved(cli)?;
    if let Command::Validate = cli.command {
        return commands::validate(&res);
    }
    let mut out = commands::Output::new(commands::out_dir(cli.out.as_deref(), &res.config), &res.hash)?;
    match cli.command {
        Command::Simulate => commands::simulate(&res, &mut out),
        Command::Probe => commands::probe(&res, &mut out),
        Command::LrbScan => commands::lrb(&res, &mut out),
        Command::Astlo => commands::astlo(&res, &mut out),
        Command::Validate | Command::Plot { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new("usage", "", e.render().to_string().trim());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
