// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Expected survival time `η = ∫₀^∞ (1 - ρ_drain(t)) dt`.
//!
//! Two independent routes are provided. [`est_laplace`] solves the
//! stationary linear system obtained from the Laplace transform at `s = 0`,
//! with the drain population removed so the system is nonsingular.
//! [`est_time_integral`] propagates the state and integrates the survival
//! curve step by step, closing with an exponential tail.

use std::collections::VecDeque;
use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::dynamics::{assemble_superoperator, check_alpha, vec_index, SystemSpec};
use crate::error::{QswError, Result};
use crate::C64;

/// Condition numbers above this are reported with a warning.
pub const CONDITION_WARNING: f64 = 1e12;

/// Condition numbers above this mean the drain is numerically unreachable.
pub const CONDITION_SINGULAR: f64 = 1.0 / f64::EPSILON;

/// η via the `s → 0` Laplace solve.
pub fn est_laplace(spec: &SystemSpec) -> Result<f64> {
    Ok(est_laplace_detailed(spec)?.eta)
}

/// Result of the Laplace solve with its 1-norm condition number.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceSolution {
    pub eta: f64,
    pub condition: f64,
}

pub fn est_laplace_detailed(spec: &SystemSpec) -> Result<LaplaceSolution> {
    check_drain_reachable(spec)?;
    let n = spec.dim();
    let m = n * n;
    let drain = vec_index(n - 1, n - 1, n);
    let generator = assemble_superoperator(spec);
    let g = generator.generator();

    // Transient coordinates: everything except the drain population.
    let keep: Vec<usize> = (0..m).filter(|&i| i != drain).collect();
    let a = DMatrix::<C64>::from_fn(m - 1, m - 1, |r, c| -g[(keep[r], keep[c])]);
    let mut rhs = DVector::<C64>::zeros(m - 1);
    rhs[vec_index(0, 0, n)] = C64::new(1.0, 0.0);

    let norm_a = one_norm(&a);
    let lu = a.lu();
    let inverse = lu
        .try_inverse()
        .ok_or_else(|| QswError::SingularGenerator("transient block has a zero pivot".into()))?;
    let condition = norm_a * one_norm(&inverse);
    if !condition.is_finite() || condition > CONDITION_SINGULAR {
        return Err(QswError::SingularGenerator(format!(
            "condition number {condition:e}; part of the population never reaches the drain"
        )));
    }
    if condition > CONDITION_WARNING {
        warn!("ill-conditioned EST solve (condition {condition:e}, alpha {})", spec.alpha());
    }
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| QswError::SingularGenerator("LU solve failed".into()))?;
    // Drain is the last coordinate, so indices below it are unshifted.
    let eta: f64 = (0..n - 1).map(|k| x[vec_index(k, k, n)].re).sum();
    if !(eta.is_finite() && eta > 0.0) {
        return Err(QswError::SingularGenerator(format!("solve returned eta = {eta}")));
    }
    Ok(LaplaceSolution { eta, condition })
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Fails with `SingularGenerator` when no path of nonzero couplings leads
/// from the source to the drain.
fn check_drain_reachable(spec: &SystemSpec) -> Result<()> {
    let source = spec.source();
    let drain = spec.drain();
    if source.rate <= 0.0 {
        return Err(QswError::SingularGenerator("source rate is zero; the source never empties".into()));
    }
    if drain.rate <= 0.0 {
        return Err(QswError::SingularGenerator("drain rate is zero; nothing is absorbed".into()));
    }
    let n = spec.n_nodes();
    let h = spec.hamiltonian().matrix();
    let lambda = spec.rates().matrix();
    let coherent = spec.alpha() < 1.0;
    let incoherent = spec.alpha() > 0.0;
    // Population moves from l to k through H_kl (coherent) or λ_kl.
    let linked = |k: usize, l: usize| (coherent && h[(k, l)] != 0.0) || (incoherent && lambda[(k, l)] > 0.0);

    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([source.node - 1]);
    seen[source.node - 1] = true;
    while let Some(l) = queue.pop_front() {
        for k in 0..n {
            if !seen[k] && k != l && linked(k, l) {
                seen[k] = true;
                queue.push_back(k);
            }
        }
    }
    if seen[drain.node - 1] {
        Ok(())
    } else {
        Err(QswError::SingularGenerator(format!(
            "drain node {} is unreachable from source node {}",
            drain.node, source.node
        )))
    }
}

/// Relative agreement of successive decay rates required before the tail
/// is closed.
const TAIL_RATE_AGREEMENT: f64 = 1e-3;

/// Survival, relative to the tail tolerance, below which the tail is closed
/// whether or not the decay rate has settled.
const TAIL_FLOOR: f64 = 1e-4;

/// Integration controls for [`est_time_integral_with`].
#[derive(Debug, Clone, Copy)]
pub struct TimeIntegralOptions {
    /// Survival below which the remaining tail is extrapolated.
    pub tail_tolerance: f64,
    /// Maximum number of propagation steps.
    pub max_steps: usize,
    /// Give up once this much time has been integrated.
    pub max_time: f64,
}

impl Default for TimeIntegralOptions {
    fn default() -> Self {
        TimeIntegralOptions {
            tail_tolerance: 1e-9,
            max_steps: 200_000,
            max_time: 1e13,
        }
    }
}

/// η by integrating the propagated survival curve.
pub fn est_time_integral(spec: &SystemSpec, tail_tolerance: f64) -> Result<f64> {
    est_time_integral_with(
        spec,
        TimeIntegralOptions {
            tail_tolerance,
            ..TimeIntegralOptions::default()
        },
    )
}

/// On each step `[t, t+h]` the survival `ℓ·e^{sG}v(t)` is integrated
/// exactly as `(Φ(h)ᵀℓ)·v(t)` with `Φ(h) = ∫₀^h e^{sG} ds`, obtained from
/// the exponential of the bordered matrix `[[Gᵀ, ℓ], [0, 0]]`. The step
/// doubles whenever survival drops by less than 5% over a step. Once
/// survival falls below the tail tolerance and the decay rate `μ` agrees
/// across two steps, the rest is closed with `S/μ`.
pub fn est_time_integral_with(spec: &SystemSpec, options: TimeIntegralOptions) -> Result<f64> {
    if !(options.tail_tolerance > 0.0 && options.tail_tolerance < 1.0) {
        return Err(QswError::param("tail_tolerance", "must lie in (0, 1)"));
    }
    if spec.source().rate <= 0.0 || spec.drain().rate <= 0.0 {
        return Err(QswError::SingularGenerator("source and drain rates must be positive".into()));
    }
    let n = spec.dim();
    let m = n * n;
    let superop = assemble_superoperator(spec);
    let g = superop.generator();

    // ℓ picks the populations of the source and the network.
    let mut survival_weights = DVector::<C64>::zeros(m);
    for k in 0..n - 1 {
        survival_weights[vec_index(k, k, n)] = C64::new(1.0, 0.0);
    }
    let survival_of = |v: &DVector<C64>| -> f64 { survival_weights.dot(v).re };

    let mut step = 0.25 / (spec.source().rate + spec.drain().rate);
    let mut kernels = StepKernels::new(g, &survival_weights, step);

    let mut v = DVector::<C64>::zeros(m);
    v[vec_index(0, 0, n)] = C64::new(1.0, 0.0);
    let mut survival = 1.0;
    let mut eta = 0.0;
    let mut time = 0.0;
    let mut last_rate = f64::NAN;
    for _ in 0..options.max_steps {
        eta += kernels.integral.dot(&v).re;
        v = &kernels.propagator * &v;
        time += step;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QswError::NonFiniteResult { time });
        }
        let next = survival_of(&v);
        if next <= 0.0 {
            return Ok(eta);
        }
        let rate = (survival / next).ln() / step;
        if next < options.tail_tolerance && rate > 0.0 && rate.is_finite() {
            // Close only once the decay is a single exponential, so a slow
            // mode hiding under a faster one is not cut off early.
            let settled = (rate - last_rate).abs() <= TAIL_RATE_AGREEMENT * rate;
            if settled || next < TAIL_FLOOR * options.tail_tolerance {
                return Ok(eta + next / rate);
            }
        }
        last_rate = rate;
        if time > options.max_time {
            break;
        }
        if next > 0.95 * survival {
            step *= 2.0;
            kernels = StepKernels::new(g, &survival_weights, step);
        }
        survival = next;
    }
    Err(QswError::TailNotConverged(format!(
        "survival still {survival:e} at t = {time:e}"
    )))
}

struct StepKernels {
    propagator: DMatrix<C64>,
    /// `Φ(h)ᵀ ℓ`.
    integral: DVector<C64>,
}

impl StepKernels {
    fn new(generator: &DMatrix<C64>, weights: &DVector<C64>, step: f64) -> Self {
        let m = generator.nrows();
        let h = C64::new(step, 0.0);
        let propagator = (generator * h).exp();
        let mut bordered = DMatrix::<C64>::zeros(m + 1, m + 1);
        bordered.view_mut((0, 0), (m, m)).copy_from(&generator.transpose());
        bordered.view_mut((0, m), (m, 1)).copy_from(weights);
        let e = (bordered * h).exp();
        let integral = e.view((0, m), (m, 1)).column(0).into_owned();
        StepKernels { propagator, integral }
    }
}

/// η over a grid of α values.
#[derive(Debug, Clone, PartialEq)]
pub struct EstCurve {
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    pub metadata: CurveMetadata,
}

/// Provenance written into EST curve headers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveMetadata {
    pub network: String,
    pub source_rate: f64,
    pub drain_rate: f64,
    pub seed: Option<u64>,
    pub realisations: Option<usize>,
}

impl fmt::Display for CurveMetadata {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gamma={}, Gamma={}", self.drain_rate, self.source_rate)?;
        match self.seed {
            Some(s) => write!(f, ", seed={s}")?,
            None => write!(f, ", seed=none")?,
        }
        match self.realisations {
            Some(r) => write!(f, ", realisations={r}")?,
            None => write!(f, ", realisations=none")?,
        }
        Ok(())
    }
}

impl EstCurve {
    pub fn new(alphas: Vec<f64>, etas: Vec<f64>, metadata: CurveMetadata) -> Result<Self> {
        if alphas.len() != etas.len() {
            return Err(QswError::param("etas", "length differs from alphas"));
        }
        for &a in &alphas {
            check_alpha(a)?;
        }
        if alphas.windows(2).any(|w| w[1] < w[0]) {
            return Err(QswError::param("alphas", "must be ascending"));
        }
        if etas.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(QswError::param("etas", "must be positive and finite"));
        }
        Ok(EstCurve { alphas, etas, metadata })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `alpha,eta` rows preceded by `#` metadata lines.
    pub fn to_csv(&self, extra_header: &[String]) -> String {
        let mut out = String::new();
        for line in extra_header {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str(&format!("# network={}\n", self.metadata.network));
        out.push_str(&format!("# {}\n", self.metadata));
        out.push_str("alpha,eta\n");
        for (a, e) in self.alphas.iter().zip(&self.etas) {
            out.push_str(&format!("{a},{e:.17e}\n"));
        }
        out
    }

    /// Reads the `alpha,eta` table; metadata lines are parsed when present.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = CurveMetadata::default();
        let mut alphas = Vec::new();
        let mut etas = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split(',') {
                    let Some((key, value)) = field.split_once('=') else { continue };
                    let value = value.trim();
                    match key.trim() {
                        "network" => metadata.network = value.to_string(),
                        "gamma" => metadata.drain_rate = value.parse().unwrap_or(0.0),
                        "Gamma" => metadata.source_rate = value.parse().unwrap_or(0.0),
                        "seed" => metadata.seed = value.parse().ok(),
                        "realisations" => metadata.realisations = value.parse().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("alpha") {
                continue;
            }
            let (a, e) = line
                .split_once(',')
                .ok_or_else(|| QswError::Parse(format!("expected `alpha,eta`, got {line:?}")))?;
            alphas.push(a.trim().parse::<f64>().map_err(|e| QswError::Parse(e.to_string()))?);
            etas.push(e.trim().parse::<f64>().map_err(|e| QswError::Parse(e.to_string()))?);
        }
        EstCurve::new(alphas, etas, metadata)
    }
}

/// `est_laplace` at every α, with the template's other parameters.
pub fn est_sweep(template: &SystemSpec, alphas: &[f64]) -> Result<EstCurve> {
    let etas = alphas
        .iter()
        .map(|&a| est_laplace(&template.with_alpha(a)?))
        .collect::<Result<Vec<_>>>()?;
    EstCurve::new(
        alphas.to_vec(),
        etas,
        CurveMetadata {
            network: format!("N={}", template.n_nodes()),
            source_rate: template.source().rate,
            drain_rate: template.drain().rate,
            seed: None,
            realisations: None,
        },
    )
}
