// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form monomer and dimer results.
//!
//! The dimer EST has the form
//!
//! ```text
//! η(α) = 2/γ + 1/Γ + (1/V - f(α)/g(α)) / α
//! f(α) = 4 (1-α)² (2Vα + γ + αΔ)
//! g(α) = 4V²α(2 + α(3α-4)) + 4V(1 + 2(α-1)α)(γ + αΔ)
//!        + α(γ² + 2αγΔ + (4 + α(5α-8))Δ²)
//! ```
//!
//! A second candidate with `(1-α²)` in place of `(1-α)²` in `f` is kept as
//! [`DimerVariant::OneMinusAlphaSquared`]; it disagrees with the Laplace
//! solve everywhere except α = 1 and is not used by default. `V` and `Δ`
//! enter through `|V|` and `|Δ|`: the spectrum depends only on `V²` and
//! `Δ²`, and the dephasing rates are `α|H_kl|`.

use crate::error::{QswError, Result};

/// `(ρ_00, ρ_11, ρ_22)` for a single node between source and drain,
/// starting in the source.
pub fn monomer_populations(source_rate: f64, drain_rate: f64, t: f64) -> (f64, f64, f64) {
    let (big, small) = (source_rate, drain_rate);
    let source = (-big * t).exp();
    let node = if (big - small).abs() <= 1e-4 * big.max(small) {
        // Series in x = (γ - Γ)t of Γ t e^{-Γt} (1 - e^{-x}) / x.
        let x = (small - big) * t;
        big * t * (-big * t).exp() * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x.powi(4) / 120.0)
    } else {
        big / (big - small) * ((-small * t).exp() - (-big * t).exp())
    };
    // The drain takes the remainder so the three sum to one.
    let drain = 1.0 - source - node;
    (source, node, drain)
}

pub fn monomer_est(source_rate: f64, drain_rate: f64) -> f64 {
    1.0 / source_rate + 1.0 / drain_rate
}

/// Parameters of a dimer with source on node 1 and drain on node 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerParams {
    /// Hopping `V`.
    pub hopping: f64,
    /// Energy offset `Δ` of node 2.
    pub offset: f64,
    /// Source rate `Γ`.
    pub source_rate: f64,
    /// Drain rate `γ`.
    pub drain_rate: f64,
}

impl DimerParams {
    pub fn new(hopping: f64, offset: f64, source_rate: f64, drain_rate: f64) -> Self {
        DimerParams {
            hopping,
            offset,
            source_rate,
            drain_rate,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.source_rate > 0.0 && self.source_rate.is_finite()) {
            return Err(QswError::param("Gamma", format!("must be positive, got {}", self.source_rate)));
        }
        if !(self.drain_rate > 0.0 && self.drain_rate.is_finite()) {
            return Err(QswError::param("gamma", format!("must be positive, got {}", self.drain_rate)));
        }
        if !self.offset.is_finite() {
            return Err(QswError::param("delta", "must be finite"));
        }
        if self.hopping == 0.0 || !self.hopping.is_finite() {
            return Err(QswError::ZeroHopping);
        }
        Ok(())
    }
}

/// Which form of `f(α)` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimerVariant {
    /// `4(1-α)²(2Vα + γ + αΔ)`; agrees with the Laplace solve.
    OneMinusAlphaAllSquared,
    /// `4(1-α²)(2Vα + γ + αΔ)`.
    OneMinusAlphaSquared,
}

/// The variant shipped by [`dimer_est_closed`].
pub const VALIDATED_VARIANT: DimerVariant = DimerVariant::OneMinusAlphaAllSquared;

/// Closed-form dimer EST at `alpha ∈ [0, 1]`.
pub fn dimer_est_closed(params: &DimerParams, alpha: f64) -> Result<f64> {
    dimer_est_variant(params, alpha, VALIDATED_VARIANT)
}

pub fn dimer_est_variant(params: &DimerParams, alpha: f64, variant: DimerVariant) -> Result<f64> {
    params.validate()?;
    crate::dynamics::check_alpha(alpha)?;
    let base = 2.0 / params.drain_rate + 1.0 / params.source_rate;
    if alpha == 0.0 {
        return Ok(base + zero_alpha_correction(params));
    }
    let v = params.hopping.abs();
    let d = params.offset.abs();
    let gamma = params.drain_rate;
    let a = alpha;
    let prefactor = match variant {
        DimerVariant::OneMinusAlphaAllSquared => (1.0 - a).powi(2),
        DimerVariant::OneMinusAlphaSquared => 1.0 - a * a,
    };
    let f = 4.0 * prefactor * (2.0 * v * a + gamma + a * d);
    let g = 4.0 * v * v * a * (2.0 + a * (3.0 * a - 4.0))
        + 4.0 * v * (1.0 + 2.0 * (a - 1.0) * a) * (gamma + a * d)
        + a * (gamma * gamma + 2.0 * a * gamma * d + (4.0 + a * (5.0 * a - 8.0)) * d * d);
    Ok(base + (1.0 / v - f / g) / a)
}

/// `lim_{α→0} (1/V - f/g)/α = (γ² + 4Δ²) / (4V²γ)`.
///
/// With `f(0) = 4γ`, `g(0) = 4Vγ` the limit is `(f(0)g'(0) - f'(0)g(0))/g(0)²`,
/// where `f'(0) = 4(2V + Δ) - 8γ` and `g'(0) = 8V² - 8Vγ + 4VΔ + γ² + 4Δ²`.
fn zero_alpha_correction(params: &DimerParams) -> f64 {
    let v = params.hopping.abs();
    let d = params.offset;
    let gamma = params.drain_rate;
    (gamma * gamma + 4.0 * d * d) / (4.0 * v * v * gamma)
}

/// `(η(α→0), η(α→1))` for the validated closed form.
///
/// The α→1 value is `2/γ + 1/Γ + 1/V`, which reduces to `3/γ + 1/V` when
/// `Γ = γ`. The α→0 value is `2/γ + 1/Γ + (γ² + 4Δ²)/(4V²γ)`.
pub fn dimer_est_limits(params: &DimerParams) -> Result<(f64, f64)> {
    Ok((dimer_est_closed(params, 0.0)?, dimer_est_closed(params, 1.0)?))
}
