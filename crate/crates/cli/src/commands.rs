// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use log::{info, warn};
use qsw_core::analytic::{dimer_est_closed, monomer_est, DimerParams};
use qsw_core::dynamics::{assemble_superoperator, evolve, DensityMatrix, SystemSpec};
use qsw_core::ensemble::{ensemble_est_sweep, fit_exponential, fit_power_law, run_ensemble_with_jobs, EnsembleSpec};
use qsw_core::est::{est_sweep, EstCurve};
use qsw_core::fit::{fit_dimer_to_curve, FitOptions};
use qsw_core::io::{averaged_trajectory_csv, decay_fit_csv, trajectory_csv};
use qsw_core::network::{parse_adjacency, sample_disordered_network, Hamiltonian, NodeConfiguration};

use crate::config::{EnsembleConfig, NetworkConfig, NetworkKind, RunConfig};
use crate::error::CliError;
use crate::output::Staged;

/// Options that change what is written but not what is computed.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub full_state: bool,
    pub timestamp: bool,
}

struct Context<'a> {
    config: &'a RunConfig,
    options: RunOptions,
    command: &'static str,
}

impl Context<'_> {
    /// `#` lines shared by every output: tool line, optional timestamp,
    /// run metadata, then the effective configuration.
    fn header(&self, metadata: &str) -> Vec<String> {
        let mut lines = vec![format!("qsw {} {}", env!("CARGO_PKG_VERSION"), self.command)];
        if self.options.timestamp {
            lines.push(format!(
                "created={}",
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            ));
        }
        if !metadata.is_empty() {
            lines.push(metadata.to_string());
        }
        lines.extend(
            self.config
                .to_toml()
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| format!("config: {l}")),
        );
        lines
    }

    fn staged(&self) -> Staged {
        Staged::new(&self.config.output.directory)
    }
}

fn commit(staged: Staged) -> Result<(), CliError> {
    for path in staged.commit()? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

/// Hamiltonian of a non-ensemble network, with its node configuration when
/// the network is disordered.
fn build_hamiltonian(net: &NetworkConfig) -> Result<(Hamiltonian, Option<NodeConfiguration>), CliError> {
    match net.kind {
        NetworkKind::Monomer => Ok((Hamiltonian::monomer(0.0), None)),
        NetworkKind::Dimer => Ok((Hamiltonian::dimer(net.hopping.unwrap_or_default(), net.delta), None)),
        NetworkKind::Graph => {
            let path = net.adjacency_file.as_deref().expect("validated");
            let adjacency = parse_adjacency(&read_file(path)?)?;
            Ok((Hamiltonian::graph(&adjacency, net.hop_rate)?, None))
        }
        NetworkKind::Disordered => {
            let config = match &net.network_file {
                Some(path) => NodeConfiguration::from_json(&read_file(path)?)?,
                None => sample_disordered_network(
                    net.n_nodes.expect("validated"),
                    net.radius,
                    net.seed,
                    net.min_separation,
                )?,
            };
            Ok((Hamiltonian::dipole(&config)?, Some(config)))
        }
    }
}

fn warn_if_stiff(hamiltonian: &Hamiltonian, threshold: f64) {
    if hamiltonian.is_stiff(threshold) {
        warn!(
            "largest coupling {:.3e} exceeds the stiffness threshold {threshold:.3e}; propagation may be slow",
            hamiltonian.max_coupling()
        );
    }
}

/// A single system, or the ensemble it stands for.
enum Target {
    Single { spec: SystemSpec, seed: Option<u64> },
    Ensemble(EnsembleSpec),
}

fn target(ctx: &Context, alpha: f64, times: Vec<f64>) -> Result<Target, CliError> {
    let config = ctx.config;
    let net = config.network(ctx.command)?;
    let (source_rate, drain_rate) = config.rates(ctx.command)?;
    if let Some(EnsembleConfig {
        realisations,
        master_seed,
    }) = config.ensemble
    {
        let spec = EnsembleSpec {
            n_nodes: net.n_nodes.expect("validated"),
            radius: net.radius,
            realisations,
            master_seed,
            alpha,
            source_rate,
            drain_rate,
            time_grid: times,
            min_separation: net.min_separation,
        };
        warn_if_stiff_ensemble(&spec, config.dynamics.stiffness_threshold)?;
        return Ok(Target::Ensemble(spec));
    }
    let (hamiltonian, configuration) = build_hamiltonian(net)?;
    warn_if_stiff(&hamiltonian, config.dynamics.stiffness_threshold);
    let spec = match net.kind {
        NetworkKind::Monomer => SystemSpec::monomer(alpha, source_rate, drain_rate)?,
        _ => SystemSpec::end_to_end(hamiltonian, alpha, source_rate, drain_rate)?,
    };
    Ok(Target::Single {
        spec,
        seed: configuration.map(|c| c.seed),
    })
}

fn warn_if_stiff_ensemble(spec: &EnsembleSpec, threshold: f64) -> Result<(), CliError> {
    let mut stiff = 0usize;
    let mut largest = 0.0f64;
    for r in 1..=spec.realisations as u64 {
        let h = Hamiltonian::dipole(&spec.configuration(r)?)?;
        largest = largest.max(h.max_coupling());
        if h.is_stiff(threshold) {
            stiff += 1;
        }
    }
    if stiff > 0 {
        warn!(
            "{stiff} of {} realisations have couplings above the stiffness threshold {threshold:.3e} (largest {largest:.3e})",
            spec.realisations
        );
    }
    Ok(())
}

fn single_metadata(spec: &SystemSpec, seed: Option<u64>) -> String {
    let seed = seed.map_or("none".to_string(), |s| s.to_string());
    format!(
        "seed={seed}, realisations=none, N={}, Gamma={}, gamma={}, alpha={}",
        spec.n_nodes(),
        spec.source().rate,
        spec.drain().rate,
        spec.alpha()
    )
}

fn ensemble_metadata(spec: &EnsembleSpec) -> String {
    format!(
        "seed={}, realisations={}, N={}, Gamma={}, gamma={}, alpha={}",
        spec.master_seed, spec.realisations, spec.n_nodes, spec.source_rate, spec.drain_rate, spec.alpha
    )
}

pub fn generate(config: &RunConfig, options: RunOptions) -> Result<(), CliError> {
    let ctx = Context {
        config,
        options,
        command: "generate",
    };
    let net = config.network(ctx.command)?;
    let (hamiltonian, configuration) = build_hamiltonian(net)?;
    warn_if_stiff(&hamiltonian, config.dynamics.stiffness_threshold);

    let seed = configuration.as_ref().map_or("none".to_string(), |c| c.seed.to_string());
    let metadata = format!("seed={seed}, N={}", hamiltonian.size());
    let header: String = ctx.header(&metadata).iter().map(|l| format!("# {l}\n")).collect();

    let mut staged = ctx.staged();
    if let Some(c) = &configuration {
        staged.add("network.json", c.to_json()?);
    }
    staged.add("hamiltonian.csv", header + &hamiltonian.to_csv());
    commit(staged)?;

    let min = hamiltonian
        .min_coupling()
        .map_or("none".to_string(), |m| format!("{m:.6e}"));
    println!(
        "N={} max_coupling={:.6e} min_coupling={min}",
        hamiltonian.size(),
        hamiltonian.max_coupling()
    );
    Ok(())
}

pub fn evolve_cmd(config: &RunConfig, options: RunOptions) -> Result<(), CliError> {
    let ctx = Context {
        config,
        options,
        command: "evolve",
    };
    let alpha = config.alpha(ctx.command)?;
    let times = config.times(ctx.command)?;
    let mut staged = ctx.staged();
    match target(&ctx, alpha, times.clone())? {
        Target::Single { spec, seed } => {
            let superop = assemble_superoperator(&spec);
            let traj = evolve(&superop, &DensityMatrix::source(&spec), &times)?;
            let header = ctx.header(&single_metadata(&spec, seed));
            staged.add("trajectory.csv", trajectory_csv(&traj, &header, options.full_state));
        }
        Target::Ensemble(spec) => {
            if options.full_state {
                warn!("--full-state is ignored for ensemble averages");
            }
            let traj = run_ensemble_with_jobs(&spec, options.jobs)?;
            let header = ctx.header(&ensemble_metadata(&spec));
            staged.add("ensemble_trajectory.csv", averaged_trajectory_csv(&traj, &header));
        }
    }
    commit(staged)
}

pub fn ensemble(config: &RunConfig, options: RunOptions) -> Result<(), CliError> {
    let mut config = config.clone();
    match config.network.as_ref().map(|n| n.kind) {
        Some(NetworkKind::Disordered) => {}
        _ => {
            return Err(CliError::Config(
                "network.kind: `ensemble` needs a disordered network".into(),
            ))
        }
    }
    if config.ensemble.is_none() {
        config.ensemble = Some(EnsembleConfig {
            realisations: 500,
            master_seed: 0,
        });
    }
    let ctx = Context {
        config: &config,
        options,
        command: "ensemble",
    };
    let alpha = config.alpha(ctx.command)?;
    let times = config.times(ctx.command)?;
    let Target::Ensemble(spec) = target(&ctx, alpha, times)? else {
        unreachable!("ensemble section is present")
    };
    let traj = run_ensemble_with_jobs(&spec, options.jobs)?;
    let survival = traj.survival_curve();
    let fit = &config.fit;
    let power = fit_power_law(&traj.times, &survival, (fit.power_window[0], fit.power_window[1]))?;
    let exponential = fit_exponential(
        &traj.times,
        &survival,
        (fit.exponential_window[0], fit.exponential_window[1]),
    )?;
    info!("power law beta={:.4}, exponential mu={:.4}", power.exponent, exponential.exponent);

    let header = ctx.header(&ensemble_metadata(&spec));
    let mut staged = ctx.staged();
    staged.add("ensemble_trajectory.csv", averaged_trajectory_csv(&traj, &header));
    staged.add(
        "decay_fits.csv",
        decay_fit_csv(&[("power_law", power), ("exponential", exponential)], &header),
    );
    commit(staged)
}

pub fn est(config: &RunConfig, options: RunOptions) -> Result<(), CliError> {
    let ctx = Context {
        config,
        options,
        command: "est",
    };
    let alphas = config.alphas(ctx.command)?;
    let (curve, metadata) = match target(&ctx, alphas[0], Vec::new())? {
        Target::Single { spec, seed } => {
            let mut curve = est_sweep(&spec, &alphas)?;
            curve.metadata.seed = seed;
            let metadata = single_metadata(&spec, seed);
            (curve, metadata)
        }
        Target::Ensemble(spec) => {
            // The sweep ignores the time grid; a placeholder keeps the
            // spec valid when none is configured.
            let spec = EnsembleSpec {
                time_grid: if spec.time_grid.is_empty() { vec![0.0] } else { spec.time_grid },
                ..spec
            };
            let metadata = ensemble_metadata(&spec);
            (ensemble_est_sweep(&spec, &alphas, options.jobs)?, metadata)
        }
    };
    let mut staged = ctx.staged();
    staged.add("est_curve.csv", curve.to_csv(&ctx.header(&metadata)));
    commit(staged)
}

pub fn fit(config: &RunConfig, options: RunOptions) -> Result<(), CliError> {
    let ctx = Context {
        config,
        options,
        command: "fit",
    };
    let settings = &config.fit;
    let path = settings
        .target
        .as_deref()
        .ok_or_else(|| CliError::Config("fit.target: required by `fit`".into()))?;
    let curve = EstCurve::from_csv(&read_file(path)?)?;
    let [g, d, v] = settings.initial_guess;
    let fit_options = FitOptions {
        tolerance: settings.tolerance,
        starts: settings.starts,
        ..FitOptions::default()
    };
    let result = fit_dimer_to_curve(&curve, settings.delta, (g, d, v), fit_options)?;
    if !result.converged {
        warn!("fit stopped at the iteration cap before reaching the tolerance");
    }

    let mut header = ctx.header(&format!("target={}", path.display()));
    header.insert(1, format!("target {}: {}", curve.metadata.network, curve.metadata));
    let mut staged = ctx.staged();
    staged.add("fit.csv", result.to_csv(&header));
    commit(staged)?;
    println!(
        "Gamma_d={} gamma_d={} V={} delta={} loss={:e}",
        result.source_rate, result.drain_rate, result.hopping, result.delta_fixed, result.loss
    );
    Ok(())
}

/// Prints the closed-form EST as `alpha,eta` rows. Without an α grid the
/// two limits α = 0 and α = 1 are printed.
pub fn analytic(config: &RunConfig, options: RunOptions) -> Result<(), CliError> {
    let ctx = Context {
        config,
        options,
        command: "analytic",
    };
    let net = config.network(ctx.command)?;
    let (source_rate, drain_rate) = config.rates(ctx.command)?;
    let alphas = config.alphas(ctx.command).unwrap_or_else(|_| vec![0.0, 1.0]);
    let etas = match net.kind {
        NetworkKind::Monomer => vec![monomer_est(source_rate, drain_rate); alphas.len()],
        NetworkKind::Dimer => {
            let params = DimerParams::new(net.hopping.unwrap_or_default(), net.delta, source_rate, drain_rate);
            alphas
                .iter()
                .map(|&a| dimer_est_closed(&params, a))
                .collect::<Result<Vec<_>, _>>()?
        }
        _ => {
            return Err(CliError::Config(
                "network.kind: closed forms exist for monomer and dimer only".into(),
            ))
        }
    };
    let n = if net.kind == NetworkKind::Monomer { 1 } else { 2 };
    let metadata = format!("seed=none, realisations=none, N={n}, Gamma={source_rate}, gamma={drain_rate}");
    let mut out = String::new();
    for line in ctx.header(&metadata) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("alpha,eta\n");
    for (a, e) in alphas.iter().zip(&etas) {
        out.push_str(&format!("{a},{e}\n"));
    }
    print!("{out}");
    Ok(())
}
