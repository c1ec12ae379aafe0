// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! QSW generator with source and drain, and its propagation.
//!
//! The full space has dimension `n = N + 2`: basis index `0` is the source,
//! `1..=N` are the network nodes and `N + 1` is the drain. Density matrices
//! are vectorized by stacking columns, so entry `ρ_ij` lives at `i + j·n`
//! and `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{QswError, Result};
use crate::network::{Hamiltonian, RateMatrix};
use crate::C64;

/// Largest anti-Hermitian part tolerated when re-symmetrizing a propagated
/// state.
pub const HERMITIAN_DRIFT_LIMIT: f64 = 1e-10;

/// An incoherent coupling between an auxiliary node and network node `node`
/// (1-based, `1..=N`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub node: usize,
    pub rate: f64,
}

impl Channel {
    pub fn new(node: usize, rate: f64) -> Self {
        Channel { node, rate }
    }
}

/// Network Hamiltonian plus mixing parameter and source/drain channels.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    hamiltonian: Hamiltonian,
    rates: RateMatrix,
    alpha: f64,
    source: Channel,
    drain: Channel,
}

impl SystemSpec {
    /// Uses the default rates `λ_kl = |H_kl|`.
    pub fn new(hamiltonian: Hamiltonian, alpha: f64, source: Channel, drain: Channel) -> Result<Self> {
        let rates = RateMatrix::from_hamiltonian(&hamiltonian);
        Self::with_rates(hamiltonian, rates, alpha, source, drain)
    }

    pub fn with_rates(
        hamiltonian: Hamiltonian,
        rates: RateMatrix,
        alpha: f64,
        source: Channel,
        drain: Channel,
    ) -> Result<Self> {
        let n = hamiltonian.size();
        if rates.size() != n {
            return Err(QswError::param(
                "rates",
                format!("rate matrix is {}x{}, network has {n} nodes", rates.size(), rates.size()),
            ));
        }
        check_alpha(alpha)?;
        for (name, channel) in [("source", source), ("drain", drain)] {
            if channel.node == 0 || channel.node > n {
                return Err(QswError::InvalidNodeIndex {
                    index: channel.node,
                    n_nodes: n,
                });
            }
            if !(channel.rate >= 0.0 && channel.rate.is_finite()) {
                return Err(QswError::param(name, format!("rate must be nonnegative, got {}", channel.rate)));
            }
        }
        Ok(SystemSpec {
            hamiltonian,
            rates,
            alpha,
            source,
            drain,
        })
    }

    /// The monomer: one node with zero energy.
    pub fn monomer(alpha: f64, source_rate: f64, drain_rate: f64) -> Result<Self> {
        SystemSpec::new(
            Hamiltonian::monomer(0.0),
            alpha,
            Channel::new(1, source_rate),
            Channel::new(1, drain_rate),
        )
    }

    /// Dimer with the source on node 1 and the drain on node 2.
    pub fn dimer(hopping: f64, offset: f64, alpha: f64, source_rate: f64, drain_rate: f64) -> Result<Self> {
        SystemSpec::new(
            Hamiltonian::dimer(hopping, offset),
            alpha,
            Channel::new(1, source_rate),
            Channel::new(2, drain_rate),
        )
    }

    /// Source on node 1 and drain on node N.
    pub fn end_to_end(hamiltonian: Hamiltonian, alpha: f64, source_rate: f64, drain_rate: f64) -> Result<Self> {
        let n = hamiltonian.size();
        SystemSpec::new(hamiltonian, alpha, Channel::new(1, source_rate), Channel::new(n, drain_rate))
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SystemSpec { alpha, ..self.clone() })
    }

    pub fn with_source_rate(&self, rate: f64) -> Result<Self> {
        SystemSpec::with_rates(
            self.hamiltonian.clone(),
            self.rates.clone(),
            self.alpha,
            Channel::new(self.source.node, rate),
            self.drain,
        )
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn rates(&self) -> &RateMatrix {
        &self.rates
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn source(&self) -> Channel {
        self.source
    }

    pub fn drain(&self) -> Channel {
        self.drain
    }

    pub fn n_nodes(&self) -> usize {
        self.hamiltonian.size()
    }

    /// Dimension `N + 2` of the source/network/drain space.
    pub fn dim(&self) -> usize {
        self.n_nodes() + 2
    }

    pub fn drain_index(&self) -> usize {
        self.n_nodes() + 1
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(QswError::InvalidAlpha(alpha))
    }
}

/// Column-major position of `ρ_ij` in the vectorized state.
#[inline]
pub fn vec_index(i: usize, j: usize, dim: usize) -> usize {
    i + j * dim
}

pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// A validated density matrix on the full `(N+2)`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Accepts `matrix` if it is Hermitian, has unit trace (1e-10) and no
    /// eigenvalue below -1e-10.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QswError::InvalidState("not a square matrix".into()));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QswError::InvalidState("non-finite entry".into()));
        }
        let drift = hermitian_defect(&matrix);
        if drift > 1e-10 {
            return Err(QswError::InvalidState(format!("not Hermitian (defect {drift:e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(QswError::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min_eig = min_eigenvalue(&matrix);
        if min_eig < -1e-10 {
            return Err(QswError::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix { matrix })
    }

    /// The pure basis state `|k⟩⟨k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut matrix = DMatrix::zeros(dim, dim);
        matrix[(k, k)] = C64::new(1.0, 0.0);
        DensityMatrix { matrix }
    }

    /// `|0⟩⟨0|`: the excitation starts in the source.
    pub fn source(spec: &SystemSpec) -> Self {
        DensityMatrix::basis(spec.dim(), 0)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.matrix[(k, k)].re).collect()
    }
}

/// Largest entry of the anti-Hermitian part `(ρ - ρ†)/2`.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max(((m[(i, j)] - m[(j, i)].conj()) * 0.5).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let hermitian = (m + m.adjoint()) * C64::new(0.5, 0.0);
    hermitian
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// The Lindblad generator acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    generator: DMatrix<C64>,
    spec: SystemSpec,
}

impl Superoperator {
    pub fn generator(&self) -> &DMatrix<C64> {
        &self.generator
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `dρ/dt` for the given state.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize(&(&self.generator * vectorize(rho)), self.dim())
    }
}

/// Builds
/// `(1-α)(-i[H,·]) + α Σ λ_kl D(L_kl) + Γ D(L_{k,0}) + γ D(L_{N+1,l})`
/// with `D(L, ρ) = LρL† - ½{L†L, ρ}` and `L_kl = |k⟩⟨l|`.
///
/// The source and drain terms are not scaled by α.
pub fn assemble_superoperator(spec: &SystemSpec) -> Superoperator {
    let n = spec.dim();
    let nodes = spec.n_nodes();
    let mut generator = DMatrix::<C64>::zeros(n * n, n * n);

    let coherent = 1.0 - spec.alpha;
    if coherent != 0.0 {
        let h = spec.hamiltonian.matrix();
        // H is embedded at offset 1; source and drain rows/columns are zero.
        for a in 0..nodes {
            for b in 0..nodes {
                let hab = h[(a, b)];
                if hab == 0.0 {
                    continue;
                }
                let (ia, ib) = (a + 1, b + 1);
                // -i H ρ: (ia, j) <- (ib, j)
                let left = C64::new(0.0, -coherent * hab);
                // +i ρ H: (i, ib) <- (i, ia)
                let right = C64::new(0.0, coherent * hab);
                for j in 0..n {
                    generator[(vec_index(ia, j, n), vec_index(ib, j, n))] += left;
                    generator[(vec_index(j, ib, n), vec_index(j, ia, n))] += right;
                }
            }
        }
    }

    if spec.alpha != 0.0 {
        let lambda = spec.rates.matrix();
        for k in 0..nodes {
            for l in 0..nodes {
                let rate = spec.alpha * lambda[(k, l)];
                if rate != 0.0 {
                    add_jump(&mut generator, n, k + 1, l + 1, rate);
                }
            }
        }
    }

    if spec.source.rate != 0.0 {
        add_jump(&mut generator, n, spec.source.node, 0, spec.source.rate);
    }
    if spec.drain.rate != 0.0 {
        add_jump(&mut generator, n, nodes + 1, spec.drain.node, spec.drain.rate);
    }

    Superoperator {
        generator,
        spec: spec.clone(),
    }
}

/// Adds `rate · D(|to⟩⟨from|, ·)`.
fn add_jump(generator: &mut DMatrix<C64>, n: usize, to: usize, from: usize, rate: f64) {
    generator[(vec_index(to, to, n), vec_index(from, from, n))] += C64::new(rate, 0.0);
    let half = C64::new(0.5 * rate, 0.0);
    for j in 0..n {
        generator[(vec_index(from, j, n), vec_index(from, j, n))] -= half;
        generator[(vec_index(j, from, n), vec_index(j, from, n))] -= half;
    }
}

/// Density matrices sampled at ascending times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<C64>>,
    /// Largest anti-Hermitian part removed by re-symmetrization.
    pub max_hermitian_correction: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn populations(&self, i: usize) -> Vec<f64> {
        let s = &self.states[i];
        (0..s.nrows()).map(|k| s[(k, k)].re).collect()
    }

    /// `1 - ρ_drain` at sample `i` (the last basis index is the drain).
    pub fn survival(&self, i: usize) -> f64 {
        let s = &self.states[i];
        let d = s.nrows() - 1;
        1.0 - s[(d, d)].re
    }

    pub fn survival_curve(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.survival(i)).collect()
    }
}

/// Population vectors sampled at ascending times.
#[derive(Debug, Clone)]
pub struct PopulationTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(QswError::param("times", "time grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(QswError::param("times", "time grid has non-finite entries"));
    }
    if times[0] < 0.0 {
        return Err(QswError::param("times", format!("first time {} is negative", times[0])));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(QswError::param("times", "time grid is not ascending"));
    }
    Ok(())
}

/// Step length if `times` is uniform to round-off.
fn uniform_step(times: &[f64]) -> Option<f64> {
    let n = times.len();
    if n < 3 {
        return None;
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    let scale = times[n - 1].abs().max(1.0);
    let uniform = times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (times[0] + i as f64 * h)).abs() <= 1e-12 * scale);
    (uniform && h > 0.0).then_some(h)
}

/// Propagator factory for a fixed generator; reuses `exp(h·G)` on uniform
/// grids and falls back to one exponential per interval otherwise.
struct Stepper<'a, T: nalgebra::ComplexField> {
    generator: &'a DMatrix<T>,
    uniform: Option<DMatrix<T>>,
}

impl<'a, T: nalgebra::ComplexField + Copy> Stepper<'a, T> {
    fn new(generator: &'a DMatrix<T>, times: &[f64]) -> Self {
        let uniform = uniform_step(times).map(|h| exp_scaled(generator, h));
        Stepper { generator, uniform }
    }

    fn step(&self, dt: f64) -> Option<DMatrix<T>> {
        if dt == 0.0 {
            return None;
        }
        Some(match &self.uniform {
            Some(p) => p.clone(),
            None => exp_scaled(self.generator, dt),
        })
    }
}

fn exp_scaled<T: nalgebra::ComplexField + Copy>(generator: &DMatrix<T>, t: f64) -> DMatrix<T> {
    (generator * T::from_real(nalgebra::convert(t))).exp()
}

/// Propagates `initial` with `exp(t·G)`, sampling at `times`.
///
/// The state is re-symmetrized after every step; the removed drift is
/// recorded and must stay below [`HERMITIAN_DRIFT_LIMIT`].
pub fn evolve(superop: &Superoperator, initial: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let n = superop.dim();
    if initial.dim() != n {
        return Err(QswError::InvalidState(format!(
            "state has dimension {}, generator expects {n}",
            initial.dim()
        )));
    }
    let stepper = Stepper::new(superop.generator(), times);
    let mut v = vectorize(initial.matrix());
    if times[0] > 0.0 {
        v = exp_scaled(superop.generator(), times[0]) * v;
    }
    let mut states = Vec::with_capacity(times.len());
    let mut max_correction = 0.0f64;

    let mut record = |v: &DVector<C64>, t: f64, states: &mut Vec<DMatrix<C64>>| -> Result<()> {
        let rho = unvectorize(v, n);
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QswError::NonFiniteResult { time: t });
        }
        let correction = hermitian_defect(&rho);
        max_correction = max_correction.max(correction);
        states.push(if correction > 0.0 {
            (&rho + rho.adjoint()) * C64::new(0.5, 0.0)
        } else {
            rho
        });
        Ok(())
    };

    record(&v, times[0], &mut states)?;
    for w in times.windows(2) {
        if let Some(p) = stepper.step(w[1] - w[0]) {
            let last = vectorize(states.last().expect("at least one state"));
            v = p * last;
        }
        record(&v, w[1], &mut states)?;
    }
    debug_assert!(max_correction < HERMITIAN_DRIFT_LIMIT, "hermitian drift {max_correction:e}");
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        max_hermitian_correction: max_correction,
    })
}

/// Population generator of the classical walk with source and drain:
/// `dp_k/dt = Σ_l (λ_kl p_l - λ_lk p_k)` on the network, plus
/// `Γ` from the source into its node and `γ` from the drain node into the
/// drain. Every column sums to zero.
pub fn classical_generator(rates: &RateMatrix, source: Channel, drain: Channel) -> Result<DMatrix<f64>> {
    let nodes = rates.size();
    for channel in [source, drain] {
        if channel.node == 0 || channel.node > nodes {
            return Err(QswError::InvalidNodeIndex {
                index: channel.node,
                n_nodes: nodes,
            });
        }
    }
    if !(source.rate >= 0.0) {
        return Err(QswError::NegativeRate { row: source.node, col: 0, rate: source.rate });
    }
    if !(drain.rate >= 0.0) {
        return Err(QswError::NegativeRate { row: nodes + 1, col: drain.node, rate: drain.rate });
    }
    let n = nodes + 2;
    let lambda = rates.matrix();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for k in 0..nodes {
        for l in 0..nodes {
            if k != l {
                g[(k + 1, l + 1)] = lambda[(k, l)];
            }
        }
    }
    g[(source.node, 0)] += source.rate;
    g[(nodes + 1, drain.node)] += drain.rate;
    for col in 0..n {
        let outflow: f64 = (0..n).filter(|&row| row != col).map(|row| g[(row, col)]).sum();
        g[(col, col)] = -outflow;
    }
    Ok(g)
}

/// `p(t) = exp(t·G) p(0)`.
pub fn evolve_classical(generator: &DMatrix<f64>, initial: &DVector<f64>, times: &[f64]) -> Result<PopulationTrajectory> {
    check_times(times)?;
    if !generator.is_square() || generator.nrows() != initial.len() {
        return Err(QswError::param("initial", "population vector does not match the generator"));
    }
    if initial.iter().any(|&p| !(p >= 0.0)) {
        return Err(QswError::InvalidState("populations must be nonnegative".into()));
    }
    if (initial.sum() - 1.0).abs() > 1e-12 {
        return Err(QswError::InvalidState(format!("populations sum to {}", initial.sum())));
    }
    let stepper = Stepper::new(generator, times);
    let mut p = initial.clone();
    if times[0] > 0.0 {
        p = exp_scaled(generator, times[0]) * p;
    }
    let mut states = vec![p.clone()];
    for w in times.windows(2) {
        if let Some(step) = stepper.step(w[1] - w[0]) {
            p = step * p;
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(QswError::NonFiniteResult { time: w[1] });
        }
        states.push(p.clone());
    }
    Ok(PopulationTrajectory {
        times: times.to_vec(),
        states,
    })
}

/// Evolves a network-only state under `H_eff = H - iΓ̂`, `Γ̂ = γ_N |m⟩⟨m|`:
/// `dρ/dt = -i[H, ρ] - {Γ̂, ρ}`. The trace decays; states are `N×N`.
///
/// `trap_node` is 1-based.
pub fn effective_hamiltonian_evolve(
    hamiltonian: &Hamiltonian,
    trap_node: usize,
    trap_rate: f64,
    initial: &DMatrix<C64>,
    times: &[f64],
) -> Result<Trajectory> {
    check_times(times)?;
    let n = hamiltonian.size();
    if trap_node == 0 || trap_node > n {
        return Err(QswError::InvalidNodeIndex { index: trap_node, n_nodes: n });
    }
    if !(trap_rate >= 0.0 && trap_rate.is_finite()) {
        return Err(QswError::param("trap_rate", format!("must be nonnegative, got {trap_rate}")));
    }
    if initial.nrows() != n || initial.ncols() != n {
        return Err(QswError::InvalidState(format!("network state must be {n}x{n}")));
    }
    // -i H_eff = -i H - Γ̂
    let mut generator: DMatrix<C64> = hamiltonian.matrix().map(|h| C64::new(0.0, -h));
    generator[(trap_node - 1, trap_node - 1)] -= C64::new(trap_rate, 0.0);

    let stepper = Stepper::new(&generator, times);
    let mut rho = initial.clone();
    if times[0] > 0.0 {
        let u = exp_scaled(&generator, times[0]);
        rho = &u * rho * u.adjoint();
    }
    let mut states = vec![rho.clone()];
    let mut max_correction = 0.0f64;
    for w in times.windows(2) {
        if let Some(u) = stepper.step(w[1] - w[0]) {
            rho = &u * &rho * u.adjoint();
            let correction = hermitian_defect(&rho);
            max_correction = max_correction.max(correction);
            rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QswError::NonFiniteResult { time: w[1] });
        }
        states.push(rho.clone());
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        max_hermitian_correction: max_correction,
    })
}
