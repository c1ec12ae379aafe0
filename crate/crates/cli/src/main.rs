// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! `qsw`: command-line driver for quantum stochastic walk simulations.
//!
//! Every subcommand reads an optional TOML configuration, applies `--set`
//! overrides and then the dedicated flags, and writes its outputs only after
//! the computation has succeeded. Exit status is 0 on success, 2 for
//! configuration errors, 3 for numerical failures and 1 for I/O errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use crate::commands::RunOptions;
use crate::config::{grid_value, window_value, Override, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "qsw", version, about = "Quantum stochastic walks with an incoherent source and drain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample or build a network and write its Hamiltonian.
    Generate(CommonArgs),
    /// Propagate the density matrix; ensemble average for disordered runs
    /// with an `[ensemble]` table.
    Evolve(CommonArgs),
    /// Expected survival time over an α grid.
    Est(CommonArgs),
    /// Ensemble-averaged trajectory and decay-law fits.
    Ensemble(CommonArgs),
    /// Fit an effective dimer to an EST curve.
    Fit(CommonArgs),
    /// Print the closed-form EST of a monomer or dimer.
    Analytic(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set dynamics.alpha=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// disordered, dimer, monomer or graph.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    min_separation: Option<f64>,
    /// Seed of a single disordered network.
    #[arg(long)]
    network_seed: Option<u64>,
    /// Node configuration written by `generate`.
    #[arg(long)]
    network_file: Option<PathBuf>,
    /// Dimer hopping V.
    #[arg(long)]
    hopping: Option<f64>,
    /// Dimer energy offset.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    adjacency_file: Option<PathBuf>,
    #[arg(long)]
    hop_rate: Option<f64>,

    #[arg(long)]
    alpha: Option<f64>,
    /// START:STOP:POINTS or a comma list.
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Source rate Γ.
    #[arg(long)]
    source_rate: Option<f64>,
    /// Drain rate γ.
    #[arg(long)]
    drain_rate: Option<f64>,
    /// Time grid, START:STOP:POINTS or a comma list.
    #[arg(long)]
    times: Option<String>,
    #[arg(long)]
    stiffness_threshold: Option<f64>,

    #[arg(long)]
    realisations: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,

    /// EST curve to fit.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Δ held fixed during the fit.
    #[arg(long, allow_hyphen_values = true)]
    fit_delta: Option<f64>,
    /// Initial Γ_d,γ_d,V.
    #[arg(long)]
    guess: Option<String>,
    /// LO:HI window of the power-law fit.
    #[arg(long)]
    power_window: Option<String>,
    /// LO:HI window of the exponential fit.
    #[arg(long)]
    exp_window: Option<String>,

    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads for ensembles; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write every density-matrix entry of a single trajectory.
    #[arg(long)]
    full_state: bool,
    /// Leave the creation time out of output headers.
    #[arg(long)]
    no_timestamp: bool,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn int(value: u64, flag: &str) -> Result<Value, CliError> {
    i64::try_from(value)
        .map(Value::Integer)
        .map_err(|_| CliError::Config(format!("{flag}: {value} does not fit a TOML integer")))
}

fn path(p: &std::path::Path) -> Value {
    Value::String(p.display().to_string())
}

impl CommonArgs {
    /// `--set` overrides in order, followed by the dedicated flags.
    fn overrides(&self) -> Result<Vec<Override>, CliError> {
        let mut out = self.set.iter().map(|s| Override::parse(s)).collect::<Result<Vec<_>, _>>()?;
        let mut push = |key: &str, value: Value| out.push(Override::new(key, value));
        if let Some(k) = &self.kind {
            push("network.kind", Value::String(k.clone()));
        }
        if let Some(n) = self.n_nodes {
            push("network.n_nodes", int(n as u64, "--n-nodes")?);
        }
        if let Some(x) = self.radius {
            push("network.radius", Value::Float(x));
        }
        if let Some(x) = self.min_separation {
            push("network.min_separation", Value::Float(x));
        }
        if let Some(s) = self.network_seed {
            push("network.seed", int(s, "--network-seed")?);
        }
        if let Some(p) = &self.network_file {
            push("network.network_file", path(p));
        }
        if let Some(x) = self.hopping {
            push("network.V", Value::Float(x));
        }
        if let Some(x) = self.delta {
            push("network.delta", Value::Float(x));
        }
        if let Some(p) = &self.adjacency_file {
            push("network.adjacency_file", path(p));
        }
        if let Some(x) = self.hop_rate {
            push("network.hop_rate", Value::Float(x));
        }
        if let Some(x) = self.alpha {
            push("dynamics.alpha", Value::Float(x));
        }
        if let Some(g) = &self.alpha_grid {
            push("dynamics.alpha_grid", grid_value(g, "--alpha-grid")?);
        }
        if let Some(x) = self.source_rate {
            push("dynamics.Gamma", Value::Float(x));
        }
        if let Some(x) = self.drain_rate {
            push("dynamics.gamma", Value::Float(x));
        }
        if let Some(g) = &self.times {
            push("dynamics.time_grid", grid_value(g, "--times")?);
        }
        if let Some(x) = self.stiffness_threshold {
            push("dynamics.stiffness_threshold", Value::Float(x));
        }
        if let Some(r) = self.realisations {
            push("ensemble.realisations", int(r as u64, "--realisations")?);
        }
        if let Some(s) = self.master_seed {
            push("ensemble.master_seed", int(s, "--master-seed")?);
        }
        if let Some(p) = &self.target {
            push("fit.target", path(p));
        }
        if let Some(x) = self.fit_delta {
            push("fit.delta", Value::Float(x));
        }
        if let Some(g) = &self.guess {
            let values = grid_value(g, "--guess")?;
            if !matches!(&values, Value::Array(a) if a.len() == 3) {
                return Err(CliError::Config(format!("--guess {g}: expected three comma-separated values")));
            }
            push("fit.initial_guess", values);
        }
        if let Some(w) = &self.power_window {
            push("fit.power_window", window_value(w, "--power-window")?);
        }
        if let Some(w) = &self.exp_window {
            push("fit.exponential_window", window_value(w, "--exp-window")?);
        }
        if let Some(p) = &self.output {
            push("output.directory", path(p));
        }
        Ok(out)
    }

    fn options(&self) -> Result<RunOptions, CliError> {
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs: must be at least 1".into()));
        }
        Ok(RunOptions {
            jobs: self.jobs,
            full_state: self.full_state,
            timestamp: !self.no_timestamp,
        })
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

type Handler = fn(&RunConfig, RunOptions) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, handler): (&CommonArgs, Handler) = match &cli.command {
        Command::Generate(a) => (a, commands::generate),
        Command::Evolve(a) => (a, commands::evolve_cmd),
        Command::Est(a) => (a, commands::est),
        Command::Ensemble(a) => (a, commands::ensemble),
        Command::Fit(a) => (a, commands::fit),
        Command::Analytic(a) => (a, commands::analytic),
    };
    init_logging(args.verbose);
    let options = args.options()?;
    let config = RunConfig::load(args.config.as_deref(), &args.overrides()?)?;
    handler(&config, options)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
