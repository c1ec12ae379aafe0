// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration.
//!
//! A run is described by one TOML file with `[network]`, `[dynamics]`,
//! `[ensemble]`, `[fit]` and `[output]` tables. Command-line overrides are
//! applied to the parsed table before it is deserialized, so a flag and the
//! matching key are validated by the same code.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    /// Present when disordered runs should be ensemble averages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Disordered,
    Dimer,
    Monomer,
    Graph,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub min_separation: f64,
    /// Seed of a single disordered configuration.
    #[serde(default)]
    pub seed: u64,
    /// Node configuration written by `generate`; replaces sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_file: Option<PathBuf>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency_file: Option<PathBuf>,
    #[serde(default = "one")]
    pub hop_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| {
                        if i + 1 == *n {
                            *stop
                        } else {
                            start + (stop - start) * i as f64 / (*n - 1) as f64
                        }
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Grid>,
    #[serde(rename = "Gamma", default, skip_serializing_if = "Option::is_none")]
    pub source_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<Grid>,
    #[serde(default = "default_stiffness")]
    pub stiffness_threshold: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            alpha: None,
            alpha_grid: None,
            source_rate: None,
            gamma: None,
            time_grid: None,
            stiffness_threshold: default_stiffness(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_realisations")]
    pub realisations: usize,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// EST curve to fit, as written by `est`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<PathBuf>,
    #[serde(default = "default_fit_delta")]
    pub delta: f64,
    /// `[Gamma_d, gamma_d, V]`.
    #[serde(default = "default_guess")]
    pub initial_guess: [f64; 3],
    #[serde(default = "default_fit_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_power_window")]
    pub power_window: [f64; 2],
    #[serde(default = "default_exp_window")]
    pub exponential_window: [f64; 2],
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            target: None,
            delta: default_fit_delta(),
            initial_guess: default_guess(),
            tolerance: default_fit_tolerance(),
            starts: default_starts(),
            power_window: default_power_window(),
            exponential_window: default_exp_window(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_stiffness() -> f64 {
    qsw_core::network::DEFAULT_STIFFNESS_THRESHOLD
}
fn default_realisations() -> usize {
    500
}
fn default_fit_delta() -> f64 {
    1.8
}
fn default_guess() -> [f64; 3] {
    [0.5, 0.5, 1.0]
}
fn default_fit_tolerance() -> f64 {
    1e-10
}
fn default_starts() -> usize {
    8
}
fn default_power_window() -> [f64; 2] {
    [5.0, 40.0]
}
fn default_exp_window() -> [f64; 2] {
    [10.0, 60.0]
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<String> {
    vec!["csv".to_string()]
}

fn validate_network(n: &NetworkConfig) -> Result<(), CliError> {
    match n.kind {
        NetworkKind::Disordered => {
            if n.network_file.is_none() {
                match n.n_nodes {
                    Some(k) if k >= 2 => {}
                    Some(_) => return Err(invalid("network.n_nodes", "must be at least 2")),
                    None => return Err(invalid("network.n_nodes", "required for a disordered network")),
                }
            }
            if !(n.radius > 0.0 && n.radius.is_finite()) {
                return Err(invalid("network.radius", "must be positive"));
            }
            if !(n.min_separation >= 0.0 && n.min_separation.is_finite()) {
                return Err(invalid("network.min_separation", "must be nonnegative"));
            }
        }
        NetworkKind::Dimer => match n.hopping {
            Some(v) if v.is_finite() => {}
            Some(_) => return Err(invalid("network.V", "must be finite")),
            None => return Err(invalid("network.V", "required for a dimer")),
        },
        NetworkKind::Graph => {
            if n.adjacency_file.is_none() {
                return Err(invalid("network.adjacency_file", "required for a graph network"));
            }
            if !(n.hop_rate > 0.0 && n.hop_rate.is_finite()) {
                return Err(invalid("network.hop_rate", "must be positive"));
            }
        }
        NetworkKind::Monomer => {}
    }
    if !n.delta.is_finite() {
        return Err(invalid("network.delta", "must be finite"));
    }
    Ok(())
}

fn invalid(path: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{path}: {}", reason.into()))
}

/// A `dotted.key = value` override.
#[derive(Debug, Clone)]
pub struct Override {
    pub path: String,
    pub value: Value,
}

impl Override {
    pub fn new(path: &str, value: Value) -> Self {
        Override {
            path: path.to_string(),
            value,
        }
    }

    /// Parses `key=value`; the value is read as TOML and falls back to a
    /// plain string.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let (key, raw) = text
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {text}: expected KEY=VALUE")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("--set {text}: empty key")));
        }
        Ok(Override::new(key, parse_value(raw.trim())))
    }
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// `start:stop:points` as a range table, or `a,b,c` as a list.
pub fn grid_value(text: &str, flag: &str) -> Result<Value, CliError> {
    let bad = || CliError::Config(format!("{flag} {text}: expected START:STOP:POINTS or a comma list"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: i64 = parts[2].trim().parse().map_err(|_| bad())?;
        let mut t = Table::new();
        t.insert("start".into(), Value::Float(start));
        t.insert("stop".into(), Value::Float(stop));
        t.insert("points".into(), Value::Integer(points));
        Ok(Value::Table(t))
    } else {
        let values = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map(Value::Float).map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Value::Array(values))
    }
}

/// `lo:hi` as a two-element list.
pub fn window_value(text: &str, flag: &str) -> Result<Value, CliError> {
    let bad = || CliError::Config(format!("{flag} {text}: expected LO:HI"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok(Value::Array(vec![Value::Float(lo), Value::Float(hi)]))
}

fn apply(table: &mut Table, ov: &Override) -> Result<(), CliError> {
    let keys: Vec<&str> = ov.path.split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut current = table;
    for (depth, key) in parents.iter().enumerate() {
        let entry = current
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        current = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(invalid(&keys[..=depth].join("."), "is not a table"));
            }
        };
    }
    current.insert(last.to_string(), ov.value.clone());
    Ok(())
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides` in order, then validates.
    pub fn load(path: Option<&Path>, overrides: &[Override]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for ov in overrides {
            apply(&mut table, ov)?;
        }
        let config: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(n) = &self.network {
            validate_network(n)?;
        }
        let d = &self.dynamics;
        if let Some(r) = d.source_rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("dynamics.Gamma", "must be positive"));
            }
        }
        if let Some(r) = d.gamma {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("dynamics.gamma", "must be positive"));
            }
        }
        if let Some(a) = d.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(invalid("dynamics.alpha", format!("{a} is outside [0, 1]")));
            }
        }
        if let Some(g) = &d.alpha_grid {
            let values = g.values();
            if values.is_empty() {
                return Err(invalid("dynamics.alpha_grid", "is empty"));
            }
            if let Some(a) = values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(invalid("dynamics.alpha_grid", format!("{a} is outside [0, 1]")));
            }
            if values.windows(2).any(|w| w[1] < w[0]) {
                return Err(invalid("dynamics.alpha_grid", "must be ascending"));
            }
        }
        if let Some(g) = &d.time_grid {
            let values = g.values();
            if values.is_empty() {
                return Err(invalid("dynamics.time_grid", "is empty"));
            }
            if values[0] < 0.0 || values.iter().any(|t| !t.is_finite()) {
                return Err(invalid("dynamics.time_grid", "times must be finite and nonnegative"));
            }
            if values.windows(2).any(|w| w[1] < w[0]) {
                return Err(invalid("dynamics.time_grid", "must be ascending"));
            }
        }
        if !(d.stiffness_threshold > 0.0) {
            return Err(invalid("dynamics.stiffness_threshold", "must be positive"));
        }

        if let Some(e) = &self.ensemble {
            if e.realisations == 0 {
                return Err(invalid("ensemble.realisations", "must be at least 1"));
            }
            match &self.network {
                Some(n) if n.kind == NetworkKind::Disordered => {
                    if n.network_file.is_some() {
                        return Err(invalid("ensemble", "cannot be combined with network.network_file"));
                    }
                }
                _ => return Err(invalid("ensemble", "ensembles need network.kind = \"disordered\"")),
            }
        }

        let f = &self.fit;
        if f.initial_guess.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(invalid("fit.initial_guess", "entries must be positive"));
        }
        if !(f.tolerance > 0.0) {
            return Err(invalid("fit.tolerance", "must be positive"));
        }
        if f.starts == 0 || f.starts > 8 {
            return Err(invalid("fit.starts", "must be between 1 and 8"));
        }
        for (name, w) in [("fit.power_window", f.power_window), ("fit.exponential_window", f.exponential_window)] {
            if !(w[0] < w[1]) {
                return Err(invalid(name, "needs lo < hi"));
            }
        }
        if let Some(bad) = self.output.formats.iter().find(|f| f.as_str() != "csv") {
            return Err(invalid("output.formats", format!("unsupported format `{bad}`; only csv is written")));
        }
        Ok(())
    }

    pub fn network(&self, command: &str) -> Result<&NetworkConfig, CliError> {
        self.network
            .as_ref()
            .ok_or_else(|| invalid("network", format!("required by `{command}`")))
    }

    /// `(Γ, γ)`.
    pub fn rates(&self, command: &str) -> Result<(f64, f64), CliError> {
        let source = self
            .dynamics
            .source_rate
            .ok_or_else(|| invalid("dynamics.Gamma", format!("required by `{command}`")))?;
        let drain = self
            .dynamics
            .gamma
            .ok_or_else(|| invalid("dynamics.gamma", format!("required by `{command}`")))?;
        Ok((source, drain))
    }

    pub fn alpha(&self, command: &str) -> Result<f64, CliError> {
        self.dynamics
            .alpha
            .ok_or_else(|| invalid("dynamics.alpha", format!("required by `{command}`")))
    }

    /// The α grid, or the single α when no grid is given.
    pub fn alphas(&self, command: &str) -> Result<Vec<f64>, CliError> {
        match (&self.dynamics.alpha_grid, self.dynamics.alpha) {
            (Some(g), _) => Ok(g.values()),
            (None, Some(a)) => Ok(vec![a]),
            (None, None) => Err(invalid("dynamics.alpha_grid", format!("required by `{command}`"))),
        }
    }

    pub fn times(&self, command: &str) -> Result<Vec<f64>, CliError> {
        self.dynamics
            .time_grid
            .as_ref()
            .map(Grid::values)
            .ok_or_else(|| invalid("dynamics.time_grid", format!("required by `{command}`")))
    }

    /// TOML text of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
