// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV layouts for trajectories and decay-fit reports.
//!
//! Every file starts with `#` comment lines carrying provenance. Header
//! lines are passed in by the caller so the same writers serve single runs
//! and ensembles.

use std::fmt::Write;

use crate::dynamics::{PopulationTrajectory, Trajectory};
use crate::ensemble::DecayFit;

fn push_header(out: &mut String, header: &[String]) {
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
}

fn population_columns(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|k| if k + 1 == dim { "rho_drain".to_string() } else { format!("rho{k}{k}") })
        .collect()
}

/// `t,rho00,rho11,...,rho_drain,survival`; with `full_state` the real and
/// imaginary parts of every entry follow as `re_i_j,im_i_j`.
pub fn trajectory_csv(traj: &Trajectory, header: &[String], full_state: bool) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    let dim = traj.states.first().map_or(0, |s| s.nrows());
    let mut columns = vec!["t".to_string()];
    columns.extend(population_columns(dim));
    columns.push("survival".into());
    if full_state {
        for j in 0..dim {
            for i in 0..dim {
                columns.push(format!("re_{i}_{j}"));
                columns.push(format!("im_{i}_{j}"));
            }
        }
    }
    let _ = writeln!(out, "{}", columns.join(","));
    for (idx, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = write!(out, "{t}");
        for k in 0..dim {
            let _ = write!(out, ",{:.15e}", state[(k, k)].re);
        }
        let _ = write!(out, ",{:.15e}", traj.survival(idx));
        if full_state {
            for j in 0..dim {
                for i in 0..dim {
                    let z = state[(i, j)];
                    let _ = write!(out, ",{:.15e},{:.15e}", z.re, z.im);
                }
            }
        }
        out.push('\n');
    }
    out
}

/// `t,survival,rho00,...,rho_drain` for ensemble averages.
pub fn averaged_trajectory_csv(traj: &Trajectory, header: &[String]) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    let dim = traj.states.first().map_or(0, |s| s.nrows());
    let mut columns = vec!["t".to_string(), "survival".to_string()];
    columns.extend(population_columns(dim));
    let _ = writeln!(out, "{}", columns.join(","));
    for (idx, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = write!(out, "{t},{:.15e}", traj.survival(idx));
        for k in 0..dim {
            let _ = write!(out, ",{:.15e}", state[(k, k)].re);
        }
        out.push('\n');
    }
    out
}

/// Same columns as [`trajectory_csv`] for a classical population run.
pub fn population_csv(traj: &PopulationTrajectory, header: &[String]) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    let dim = traj.states.first().map_or(0, |s| s.len());
    let mut columns = vec!["t".to_string()];
    columns.extend(population_columns(dim));
    columns.push("survival".into());
    let _ = writeln!(out, "{}", columns.join(","));
    for (t, p) in traj.times.iter().zip(&traj.states) {
        let _ = write!(out, "{t}");
        for x in p.iter() {
            let _ = write!(out, ",{x:.15e}");
        }
        let _ = writeln!(out, ",{:.15e}", 1.0 - p[dim - 1]);
    }
    out
}

/// `quantity,exponent,window_lo,window_hi,residual`.
pub fn decay_fit_csv(fits: &[(&str, DecayFit)], header: &[String]) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    out.push_str("quantity,exponent,window_lo,window_hi,residual\n");
    for (name, fit) in fits {
        let _ = writeln!(
            out,
            "{name},{},{},{},{:e}",
            fit.exponent, fit.window.0, fit.window.1, fit.residual
        );
    }
    out
}
