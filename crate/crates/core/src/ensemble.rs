// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded ensembles of disordered dipole networks.
//!
//! Realisation `r` (1-based) uses the node configuration drawn with
//! [`realisation_seed`]`(master_seed, r)`, so any realisation can be
//! regenerated on its own and the ensemble does not depend on how work is
//! split across threads. Averages are reduced in realisation order.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{assemble_superoperator, check_times, evolve, DensityMatrix, SystemSpec, Trajectory};
use crate::error::{QswError, Result};
use crate::est::{est_laplace, CurveMetadata, EstCurve};
use crate::network::{sample_disordered_network_with, Hamiltonian, NodeConfiguration, DEFAULT_MAX_ATTEMPTS};
use crate::C64;

/// Realisations processed per parallel batch before folding into the sum.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_nodes: usize,
    pub radius: f64,
    pub realisations: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub source_rate: f64,
    pub drain_rate: f64,
    pub time_grid: Vec<f64>,
    pub min_separation: f64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.realisations == 0 {
            return Err(QswError::param("realisations", "need at least one realisation"));
        }
        if self.n_nodes < 2 {
            return Err(QswError::param("n_nodes", "need at least 2 nodes"));
        }
        crate::dynamics::check_alpha(self.alpha)?;
        if !(self.source_rate > 0.0) {
            return Err(QswError::param("Gamma", "must be positive"));
        }
        if !(self.drain_rate > 0.0) {
            return Err(QswError::param("gamma", "must be positive"));
        }
        check_times(&self.time_grid)
    }

    /// Node configuration of realisation `r` (1-based).
    pub fn configuration(&self, r: u64) -> Result<NodeConfiguration> {
        sample_disordered_network_with(
            self.n_nodes,
            self.radius,
            realisation_seed(self.master_seed, r),
            self.min_separation,
            DEFAULT_MAX_ATTEMPTS,
        )
    }

    /// System of realisation `r` with source on node 1 and drain on node N.
    pub fn system(&self, r: u64, alpha: f64) -> Result<SystemSpec> {
        let hamiltonian = Hamiltonian::dipole(&self.configuration(r)?)?;
        SystemSpec::end_to_end(hamiltonian, alpha, self.source_rate, self.drain_rate)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realisation `r`: `mix64(mix64(master) + r·φ)` with
/// `φ = 0x9E3779B97F4A7C15` and `mix64` the SplitMix64 finalizer.
pub fn realisation_seed(master_seed: u64, r: u64) -> u64 {
    mix64(mix64(master_seed).wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn with_jobs<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(work()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| QswError::param("jobs", e.to_string()))?;
            Ok(pool.install(work))
        }
    }
}

fn tag(r: u64) -> impl Fn(QswError) -> QswError {
    move |e| QswError::Realisation {
        index: r,
        source: Box::new(e),
    }
}

/// Single realisation trajectory starting in the source.
pub fn realisation_trajectory(spec: &EnsembleSpec, r: u64) -> Result<Trajectory> {
    let system = spec.system(r, spec.alpha)?;
    let superop = assemble_superoperator(&system);
    evolve(&superop, &DensityMatrix::source(&system), &spec.time_grid)
}

/// Ensemble-averaged density matrices on the spec's time grid, using the
/// global rayon pool.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Trajectory> {
    run_ensemble_with_jobs(spec, None)
}

/// As [`run_ensemble`], with `jobs` worker threads when given.
pub fn run_ensemble_with_jobs(spec: &EnsembleSpec, jobs: Option<usize>) -> Result<Trajectory> {
    spec.validate()?;
    with_jobs(jobs, || average_trajectories(spec))?
}

fn average_trajectories(spec: &EnsembleSpec) -> Result<Trajectory> {
    let n = spec.n_nodes + 2;
    let steps = spec.time_grid.len();
    let mut sums = vec![DMatrix::<C64>::zeros(n, n); steps];
    let mut max_correction = 0.0f64;
    let total = spec.realisations as u64;
    let mut start = 1u64;
    while start <= total {
        let end = (start + BATCH as u64 - 1).min(total);
        let batch: Vec<Result<Trajectory>> = (start..=end)
            .into_par_iter()
            .map(|r| realisation_trajectory(spec, r).map_err(tag(r)))
            .collect();
        for traj in batch {
            let traj = traj?;
            max_correction = max_correction.max(traj.max_hermitian_correction);
            for (sum, state) in sums.iter_mut().zip(&traj.states) {
                *sum += state;
            }
        }
        start = end + 1;
    }
    let scale = C64::new(1.0 / spec.realisations as f64, 0.0);
    Ok(Trajectory {
        times: spec.time_grid.clone(),
        states: sums.into_iter().map(|s| s * scale).collect(),
        max_hermitian_correction: max_correction,
    })
}

/// `est_laplace` at every α for each realisation, in realisation order.
/// Failures are kept per realisation and tagged with its index.
pub fn realisation_ests(spec: &EnsembleSpec, alphas: &[f64], jobs: Option<usize>) -> Result<Vec<Result<Vec<f64>>>> {
    for &a in alphas {
        crate::dynamics::check_alpha(a)?;
    }
    let probe = EnsembleSpec {
        alpha: alphas.first().copied().unwrap_or(0.0),
        ..spec.clone()
    };
    probe.validate()?;
    with_jobs(jobs, || {
        (1..=spec.realisations as u64)
            .into_par_iter()
            .map(|r| {
                let system = spec.system(r, 0.0).map_err(tag(r))?;
                alphas
                    .iter()
                    .map(|&a| est_laplace(&system.with_alpha(a)?).map_err(tag(r)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Vec<_>>()
    })
}

/// Per-α mean of `est_laplace` over the same realisations. The first
/// failing realisation aborts the sweep.
pub fn ensemble_est_sweep(spec: &EnsembleSpec, alphas: &[f64], jobs: Option<usize>) -> Result<EstCurve> {
    let per_realisation: Vec<Vec<f64>> = realisation_ests(spec, alphas, jobs)?.into_iter().collect::<Result<_>>()?;
    let mut etas = vec![0.0; alphas.len()];
    for row in &per_realisation {
        for (acc, eta) in etas.iter_mut().zip(row) {
            *acc += eta;
        }
    }
    for eta in &mut etas {
        *eta /= spec.realisations as f64;
    }
    EstCurve::new(
        alphas.to_vec(),
        etas,
        CurveMetadata {
            network: format!("disordered N={} R={}", spec.n_nodes, spec.radius),
            source_rate: spec.source_rate,
            drain_rate: spec.drain_rate,
            seed: Some(spec.master_seed),
            realisations: Some(spec.realisations),
        },
    )
}

/// Fitted decay law of a survival curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `β` for `t^-β`, `μ` for `e^-μt`.
    pub exponent: f64,
    /// Fitted prefactor `c`.
    pub amplitude: f64,
    pub window: (f64, f64),
    /// Root-mean-square residual in the fit coordinates.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept, rms)`.
fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
    (slope, intercept, (ss / n).sqrt())
}

fn windowed(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(QswError::param("series", "times and values differ in length"));
    }
    let (lo, hi) = window;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            if !(v > 0.0) {
                return Err(QswError::NonPositiveData { time: t, value: v });
            }
            ts.push(t);
            vs.push(v);
        }
    }
    let distinct = ts.windows(2).any(|w| w[1] != w[0]);
    if ts.len() < 2 || !distinct {
        return Err(QswError::EmptyWindow { lo, hi });
    }
    Ok((ts, vs))
}

/// Fits `s(t) = c·t^-β` by a line in log-log coordinates.
pub fn fit_power_law(times: &[f64], survival: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, vs) = windowed(times, survival, window)?;
    if let Some(&t) = ts.iter().find(|&&t| t <= 0.0) {
        return Err(QswError::NonPositiveData { time: t, value: t });
    }
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual) = least_squares_line(&x, &y);
    Ok(DecayFit {
        exponent: -slope,
        amplitude: intercept.exp(),
        window,
        residual,
        samples: ts.len(),
    })
}

/// Fits `s(t) = c·e^-μt` by a line in log-linear coordinates.
pub fn fit_exponential(times: &[f64], survival: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, vs) = windowed(times, survival, window)?;
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual) = least_squares_line(&ts, &y);
    Ok(DecayFit {
        exponent: -slope,
        amplitude: intercept.exp(),
        window,
        residual,
        samples: ts.len(),
    })
}
