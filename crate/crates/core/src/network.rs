// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Node configurations, Hamiltonians and incoherent rate matrices.
//!
//! All Hamiltonians are real symmetric `N×N` matrices in units where ħ = 1,
//! so their entries are rates. The classical transfer matrix is `T = -H`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitBall};
use serde::{Deserialize, Serialize};

use crate::error::{QswError, Result};

/// Candidate draws allowed per configuration before giving up on
/// `min_separation`.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100_000;

/// Couplings above this magnitude make the propagator stiff.
pub const DEFAULT_STIFFNESS_THRESHOLD: f64 = 1e6;

/// Positions of `N` nodes inside a sphere.
///
/// Nodes `0` and `N-1` sit on the sphere surface at `(-R, 0, 0)` and
/// `(R, 0, 0)`; these are the network nodes the source and drain attach to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfiguration {
    pub radius: f64,
    pub seed: u64,
    pub positions: Vec<[f64; 3]>,
    pub endpoints: [usize; 2],
}

impl NodeConfiguration {
    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        distance(&self.positions[a], &self.positions[b])
    }

    /// Smallest pairwise distance, or `None` for fewer than two nodes.
    pub fn min_pair_distance(&self) -> Option<f64> {
        let n = self.n_nodes();
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| self.distance(a, b))
            .min_by(f64::total_cmp)
    }

    /// Same node pattern in a sphere of radius `factor * radius`.
    pub fn rescaled(&self, factor: f64) -> Self {
        NodeConfiguration {
            radius: self.radius * factor,
            seed: self.seed,
            positions: self
                .positions
                .iter()
                .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
                .collect(),
            endpoints: self.endpoints,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: NodeConfiguration = serde_json::from_str(text)?;
        if config.positions.is_empty() {
            return Err(QswError::Parse("configuration has no positions".into()));
        }
        if config.endpoints[0] >= config.n_nodes() || config.endpoints[1] >= config.n_nodes() {
            return Err(QswError::Parse("endpoint index out of range".into()));
        }
        Ok(config)
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Draws a disordered configuration seeded by `seed`.
///
/// See [`sample_disordered_network_with`] for the sampling procedure.
pub fn sample_disordered_network(
    n_nodes: usize,
    radius: f64,
    seed: u64,
    min_separation: f64,
) -> Result<NodeConfiguration> {
    sample_disordered_network_with(n_nodes, radius, seed, min_separation, DEFAULT_MAX_ATTEMPTS)
}

/// Draws a disordered configuration with an explicit rejection budget.
///
/// The generator is ChaCha8 seeded from `seed`. Interior points come from
/// `rand_distr::UnitBall` (cube rejection, uniform in volume) scaled by the
/// radius, and are placed in index order `1..N-1`. A candidate closer than
/// `min_separation` (or coincident) to an already placed node is redrawn;
/// every draw counts against `max_attempts`.
pub fn sample_disordered_network_with(
    n_nodes: usize,
    radius: f64,
    seed: u64,
    min_separation: f64,
    max_attempts: usize,
) -> Result<NodeConfiguration> {
    if n_nodes < 2 {
        return Err(QswError::param("n_nodes", format!("need at least 2 nodes, got {n_nodes}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(QswError::param("radius", format!("must be positive, got {radius}")));
    }
    if !(min_separation >= 0.0 && min_separation.is_finite()) {
        return Err(QswError::param(
            "min_separation",
            format!("must be nonnegative, got {min_separation}"),
        ));
    }

    let first = [-radius, 0.0, 0.0];
    let last = [radius, 0.0, 0.0];
    let mut positions = Vec::with_capacity(n_nodes);
    positions.push(first);

    let too_close =
        |p: &[f64; 3], q: &[f64; 3]| -> bool { distance(p, q) < min_separation || p == q };
    if too_close(&first, &last) {
        return Err(QswError::SamplingBudgetExceeded {
            n_nodes,
            min_separation,
            attempts: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0usize;
    while positions.len() < n_nodes - 1 {
        if attempts >= max_attempts {
            return Err(QswError::SamplingBudgetExceeded {
                n_nodes,
                min_separation,
                attempts,
            });
        }
        attempts += 1;
        let [x, y, z]: [f64; 3] = UnitBall.sample(&mut rng);
        let candidate = [x * radius, y * radius, z * radius];
        if positions.iter().any(|p| too_close(p, &candidate)) || too_close(&last, &candidate) {
            continue;
        }
        positions.push(candidate);
    }
    positions.push(last);

    Ok(NodeConfiguration {
        radius,
        seed,
        positions,
        endpoints: [0, n_nodes - 1],
    })
}

/// A real symmetric network Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
}

impl Hamiltonian {
    /// Wraps a matrix after checking that it is square, finite and symmetric.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QswError::param("hamiltonian", "must be a non-empty square matrix"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(QswError::param("hamiltonian", "entries must be finite"));
        }
        let n = matrix.nrows();
        for k in 0..n {
            for l in k + 1..n {
                let (a, b) = (matrix[(k, l)], matrix[(l, k)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(QswError::param(
                        "hamiltonian",
                        format!("not symmetric at ({k}, {l}): {a} vs {b}"),
                    ));
                }
            }
        }
        Ok(Hamiltonian { matrix })
    }

    /// Dipole couplings `H_kl = -d_kl^-3`, `H_kk = Σ_{j≠k} d_jk^-3`.
    pub fn dipole(config: &NodeConfiguration) -> Result<Self> {
        let n = config.n_nodes();
        let mut matrix = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in k + 1..n {
                let d = config.distance(k, l);
                if d == 0.0 {
                    return Err(QswError::CoincidentNodes(k, l));
                }
                let coupling = d.powi(-3);
                matrix[(k, l)] = -coupling;
                matrix[(l, k)] = -coupling;
                matrix[(k, k)] += coupling;
                matrix[(l, l)] += coupling;
            }
        }
        Ok(Hamiltonian { matrix })
    }

    /// `H = hop_rate · A` with `A` the graph Laplacian (degree on the
    /// diagonal, `-1` per edge).
    pub fn graph(adjacency: &DMatrix<f64>, hop_rate: f64) -> Result<Self> {
        if !adjacency.is_square() || adjacency.nrows() == 0 {
            return Err(QswError::param("adjacency", "must be a non-empty square matrix"));
        }
        if !(hop_rate > 0.0 && hop_rate.is_finite()) {
            return Err(QswError::param("hop_rate", format!("must be positive, got {hop_rate}")));
        }
        let n = adjacency.nrows();
        let mut matrix = DMatrix::zeros(n, n);
        for k in 0..n {
            if adjacency[(k, k)] != 0.0 {
                return Err(QswError::param("adjacency", format!("nonzero diagonal at node {k}")));
            }
            for l in 0..n {
                let a = adjacency[(k, l)];
                if a != adjacency[(l, k)] {
                    return Err(QswError::NonSymmetricAdjacency(k, l));
                }
                if a != 0.0 && a != 1.0 {
                    return Err(QswError::param("adjacency", format!("entry ({k}, {l}) is {a}, expected 0 or 1")));
                }
                if k != l && a == 1.0 {
                    matrix[(k, l)] = -hop_rate;
                    matrix[(k, k)] += hop_rate;
                }
            }
        }
        Ok(Hamiltonian { matrix })
    }

    /// Two-node Hamiltonian `[[0, -V], [-V, Δ]]`.
    pub fn dimer(hopping: f64, offset: f64) -> Self {
        Hamiltonian {
            matrix: DMatrix::from_row_slice(2, 2, &[0.0, -hopping, -hopping, offset]),
        }
    }

    /// Single node with on-site energy `energy`.
    pub fn monomer(energy: f64) -> Self {
        Hamiltonian {
            matrix: DMatrix::from_element(1, 1, energy),
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Classical transfer matrix `T = -H`.
    pub fn transfer_matrix(&self) -> DMatrix<f64> {
        -&self.matrix
    }

    /// Largest off-diagonal coupling magnitude.
    pub fn max_coupling(&self) -> f64 {
        let n = self.size();
        let mut max = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                if k != l {
                    max = max.max(self.matrix[(k, l)].abs());
                }
            }
        }
        max
    }

    /// Smallest nonzero off-diagonal coupling magnitude.
    pub fn min_coupling(&self) -> Option<f64> {
        let n = self.size();
        (0..n)
            .flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l)))
            .map(|(k, l)| self.matrix[(k, l)].abs())
            .filter(|&c| c > 0.0)
            .min_by(f64::total_cmp)
    }

    pub fn is_stiff(&self, threshold: f64) -> bool {
        self.max_coupling() > threshold
    }

    /// Row-major CSV with a `# hamiltonian N=<n>` header line.
    pub fn to_csv(&self) -> String {
        let n = self.size();
        let mut out = format!("# hamiltonian N={n}\n");
        for k in 0..n {
            let row: Vec<String> = (0..n).map(|l| format!("{:e}", self.matrix[(k, l)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| QswError::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(QswError::Parse("hamiltonian CSV must hold a square matrix".into()));
        }
        Hamiltonian::from_matrix(DMatrix::from_fn(n, n, |k, l| rows[k][l]))
    }
}

/// Nonnegative incoherent transition rates `λ_kl` (from node `l` to node `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    matrix: DMatrix<f64>,
}

impl RateMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QswError::param("rates", "must be square"));
        }
        for k in 0..matrix.nrows() {
            for l in 0..matrix.ncols() {
                let rate = matrix[(k, l)];
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(QswError::NegativeRate { row: k, col: l, rate });
                }
            }
        }
        Ok(RateMatrix { matrix })
    }

    /// `λ_kl = |H_kl|` entrywise, diagonal included.
    pub fn from_hamiltonian(hamiltonian: &Hamiltonian) -> Self {
        RateMatrix {
            matrix: hamiltonian.matrix().abs(),
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Reads a whitespace- or comma-separated 0/1 adjacency matrix.
pub fn parse_adjacency(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| QswError::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(QswError::Parse("adjacency must be a square matrix".into()));
    }
    Ok(DMatrix::from_fn(n, n, |k, l| rows[k][l]))
}
