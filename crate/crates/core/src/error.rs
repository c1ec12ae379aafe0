// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = QswError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QswError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sampling budget exceeded: could not place {n_nodes} nodes with min separation {min_separation} after {attempts} attempts")]
    SamplingBudgetExceeded {
        n_nodes: usize,
        min_separation: f64,
        attempts: usize,
    },

    #[error("nodes {0} and {1} coincide; dipole coupling is singular")]
    CoincidentNodes(usize, usize),

    #[error("adjacency matrix is not symmetric at ({0}, {1})")]
    NonSymmetricAdjacency(usize, usize),

    #[error("alpha = {0} is outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("node index {index} is outside 1..={n_nodes}")]
    InvalidNodeIndex { index: usize, n_nodes: usize },

    #[error("negative transition rate {rate} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, rate: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("propagation produced a non-finite value at t = {time}")]
    NonFiniteResult { time: f64 },

    #[error("generator is singular: {0}")]
    SingularGenerator(String),

    #[error("survival tail did not converge: {0}")]
    TailNotConverged(String),

    #[error("fit window [{lo}, {hi}] contains fewer than two samples")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("non-positive value {value} at t = {time} cannot be log-transformed")]
    NonPositiveData { time: f64, value: f64 },

    #[error("dimer hopping V must be nonzero; the drain is unreachable")]
    ZeroHopping,

    #[error("invalid initial guess: {0}")]
    InvalidGuess(String),

    #[error("realisation {index}: {source}")]
    Realisation {
        index: u64,
        #[source]
        source: Box<QswError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl QswError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        QswError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            QswError::NonFiniteResult { .. }
            | QswError::SingularGenerator(_)
            | QswError::TailNotConverged(_)
            | QswError::SamplingBudgetExceeded { .. }
            | QswError::CoincidentNodes(..) => true,
            QswError::Realisation { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
