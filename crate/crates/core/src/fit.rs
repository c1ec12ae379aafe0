// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Least-squares fit of the closed-form dimer EST to an EST curve.
//!
//! The offset `Δ` is held fixed and `(Γ_d, γ_d, V)` are searched in
//! log-space with a Nelder-Mead simplex, restarted from several
//! deterministic starting points.

use rayon::prelude::*;

use crate::analytic::{dimer_est_closed, DimerParams};
use crate::error::{QswError, Result};
use crate::est::EstCurve;

/// Log-space offsets applied to the initial guess, one per start.
const START_OFFSETS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, -1.0],
    [1.0, 1.0, 1.0],
];

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Simplex diameter (log-space) at which a run stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of starting points, at most 8.
    pub starts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-10,
            max_iterations: 20_000,
            starts: START_OFFSETS.len(),
        }
    }
}

/// Effective dimer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub source_rate: f64,
    pub drain_rate: f64,
    pub hopping: f64,
    pub delta_fixed: f64,
    /// Sum of squared residuals over the curve's α grid.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning start.
    pub start: usize,
    /// Best loss after each iteration of the winning start.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn params(&self) -> DimerParams {
        DimerParams::new(self.hopping, self.delta_fixed, self.source_rate, self.drain_rate)
    }

    /// `gamma_d,Gamma_d,V,delta,loss,converged` with `#` metadata lines.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str("gamma_d,Gamma_d,V,delta,loss,converged\n");
        out.push_str(&format!(
            "{},{},{},{},{:e},{}\n",
            self.drain_rate, self.source_rate, self.hopping, self.delta_fixed, self.loss, self.converged
        ));
        out
    }
}

/// Sum of squared differences between the dimer curve and `target`.
pub fn dimer_loss(target: &EstCurve, params: &DimerParams) -> f64 {
    target
        .alphas
        .iter()
        .zip(&target.etas)
        .map(|(&a, &eta)| match dimer_est_closed(params, a) {
            Ok(model) if model.is_finite() => (model - eta).powi(2),
            _ => f64::INFINITY,
        })
        .sum()
}

/// Fits `(Γ_d, γ_d, V)` at fixed `Δ`; `initial_guess` is
/// `(Γ_d, γ_d, V)`. A run that hits the iteration cap is still returned,
/// with `converged = false`.
pub fn fit_dimer_to_curve(
    target: &EstCurve,
    delta_fixed: f64,
    initial_guess: (f64, f64, f64),
    options: FitOptions,
) -> Result<FitResult> {
    if target.len() < 4 {
        return Err(QswError::param("target", format!("need at least 4 points, got {}", target.len())));
    }
    if !delta_fixed.is_finite() {
        return Err(QswError::param("delta", "must be finite"));
    }
    let (g0, d0, v0) = initial_guess;
    if [g0, d0, v0].iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(QswError::InvalidGuess(format!("({g0}, {d0}, {v0}) must be positive")));
    }
    let starts = options.starts.clamp(1, START_OFFSETS.len());
    let origin = [g0.ln(), d0.ln(), v0.ln()];

    let objective = |x: &[f64; 3]| -> f64 {
        let params = DimerParams::new(x[2].exp(), delta_fixed, x[0].exp(), x[1].exp());
        dimer_loss(target, &params)
    };

    let runs: Vec<Run> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let offset = START_OFFSETS[i];
            let x0 = [origin[0] + offset[0], origin[1] + offset[1], origin[2] + offset[2]];
            // A second pass from the first optimum guards against a
            // prematurely collapsed simplex.
            let first = nelder_mead(&objective, x0, options);
            let second = nelder_mead(&objective, first.x, options);
            let mut history = first.history;
            history.extend(second.history);
            Run {
                x: second.x,
                loss: second.loss,
                iterations: first.iterations + second.iterations,
                converged: second.converged,
                history,
            }
        })
        .collect();

    let (start, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.loss < a.1.loss { b } else { a })
        .expect("at least one start");
    Ok(FitResult {
        source_rate: best.x[0].exp(),
        drain_rate: best.x[1].exp(),
        hopping: best.x[2].exp(),
        delta_fixed,
        loss: best.loss,
        iterations: best.iterations,
        converged: best.converged,
        start,
        history: best.history,
    })
}

struct Run {
    x: [f64; 3],
    loss: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction ½,
/// shrink ½) on a 3-dimensional point.
fn nelder_mead(f: &impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], options: FitOptions) -> Run {
    const DIM: usize = 3;
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(DIM + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..DIM {
        let mut x = x0;
        x[i] += 0.5;
        simplex.push((x, f(&x)));
    }
    let order = |s: &mut Vec<([f64; 3], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| (0..DIM).map(|k| (x[k] - simplex[0].0[k]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = simplex[DIM].1 - simplex[0].1;
        if diameter <= options.tolerance || (spread.abs() <= 1e-30 && simplex[0].1.is_finite()) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; DIM];
        for (x, _) in &simplex[..DIM] {
            for k in 0..DIM {
                centroid[k] += x[k] / DIM as f64;
            }
        }
        let worst = simplex[DIM];
        let along = |t: f64| -> [f64; 3] {
            let mut p = [0.0; DIM];
            for k in 0..DIM {
                p[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
            }
            p
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            simplex[DIM] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[DIM - 1].1 {
            simplex[DIM] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let p = along(-0.5);
                (p, f(&p))
            } else {
                let p = along(0.5);
                (p, f(&p))
            };
            if fc < worst.1.min(fr) {
                simplex[DIM] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    for k in 0..DIM {
                        vertex.0[k] = best[k] + 0.5 * (vertex.0[k] - best[k]);
                    }
                    vertex.1 = f(&vertex.0);
                }
            }
        }
        order(&mut simplex);
        history.push(simplex[0].1);
    }
    Run {
        x: simplex[0].0,
        loss: simplex[0].1,
        iterations,
        converged,
        history,
    }
}
