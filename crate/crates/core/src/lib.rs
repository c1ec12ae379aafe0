// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Quantum stochastic walks (QSW) on networks coupled to an incoherent
//! source and drain.
//!
//! The crate assembles the Lindblad generator
//!
//! ```text
//! dρ/dt = (1-α)(-i[H, ρ]) + α Σ_kl λ_kl D(|k⟩⟨l|, ρ) + Γ D(|k⟩⟨0|, ρ) + γ D(|N+1⟩⟨l|, ρ)
//! ```
//!
//! on the `(N+2)`-dimensional source/network/drain space, propagates
//! density matrices, and computes the expected survival time (EST)
//! `η(α) = ∫ (1 - ρ_drain(t)) dt` across the coherent-to-classical
//! crossover. Closed-form monomer and dimer results live in [`analytic`],
//! seeded ensembles over random dipole networks in [`ensemble`], and the
//! effective-dimer fit in [`fit`].

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod est;
pub mod fit;
pub mod io;
pub mod network;

pub use error::{QswError, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
