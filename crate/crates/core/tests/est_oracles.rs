// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use qsw_core::analytic::{dimer_est_closed, dimer_est_variant, DimerParams, DimerVariant};
use qsw_core::dynamics::SystemSpec;
use qsw_core::est::{est_laplace, est_sweep, est_time_integral, EstCurve};
use qsw_core::network::{sample_disordered_network, Hamiltonian};
use qsw_core::QswError;

fn alpha_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

fn path(n: usize, hop: f64) -> Hamiltonian {
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        a[(k, k + 1)] = 1.0;
        a[(k + 1, k)] = 1.0;
    }
    Hamiltonian::graph(&a, hop).unwrap()
}

fn disordered(seed: u64) -> Hamiltonian {
    Hamiltonian::dipole(&sample_disordered_network(7, 1.0, seed, 0.0).unwrap()).unwrap()
}

#[test]
fn closed_form_gate_on_full_grid() {
    let mut worst = 0.0f64;
    for v in [0.5, 1.0, 2.0] {
        for delta in [0.0, 1.0, 1.8] {
            for rate in [0.5, 1.0] {
                let params = DimerParams::new(v, delta, rate, rate);
                for alpha in alpha_grid(11) {
                    let closed = dimer_est_closed(&params, alpha).unwrap();
                    let solved = est_laplace(&SystemSpec::dimer(v, delta, alpha, rate, rate).unwrap()).unwrap();
                    worst = worst.max((closed - solved).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-8, "worst gap {worst}");
}

#[test]
fn printed_variant_fails_the_gate() {
    let params = DimerParams::new(1.0, 0.0, 1.0, 1.0);
    let solved = est_laplace(&SystemSpec::dimer(1.0, 0.0, 0.5, 1.0, 1.0).unwrap()).unwrap();
    let printed = dimer_est_variant(&params, 0.5, DimerVariant::OneMinusAlphaSquared).unwrap();
    assert!((printed - solved).abs() > 1.0);
}

#[test]
fn negative_couplings_match_solver() {
    for (v, delta) in [(-1.0, 0.0), (1.0, -1.8), (-0.61, -1.8)] {
        let params = DimerParams::new(v, delta, 0.5, 0.5);
        for alpha in [0.0, 0.3, 0.8] {
            let closed = dimer_est_closed(&params, alpha).unwrap();
            let solved = est_laplace(&SystemSpec::dimer(v, delta, alpha, 0.5, 0.5).unwrap()).unwrap();
            assert!((closed - solved).abs() <= 1e-8, "V={v} Δ={delta} α={alpha}");
        }
    }
}

#[test]
fn reference_values() {
    let monomer = SystemSpec::monomer(0.3, 0.5, 1.0).unwrap();
    assert!((est_laplace(&monomer).unwrap() - 3.0).abs() <= 1e-10);
    let dimer = SystemSpec::dimer(1.0, 0.0, 1.0, 0.5, 0.5).unwrap();
    assert!((est_laplace(&dimer).unwrap() - 7.0).abs() <= 1e-10);
    let dimer = SystemSpec::dimer(1.0, 0.0, 0.5, 1.0, 1.0).unwrap();
    assert!((est_laplace(&dimer).unwrap() - 4.0).abs() <= 1e-10);
    let dimer = SystemSpec::dimer(1.0, 0.0, 0.0, 0.5, 0.5).unwrap();
    assert!((est_laplace(&dimer).unwrap() - 6.125).abs() <= 1e-10);
}

#[test]
fn time_integral_agrees_with_laplace() {
    let mut cases = vec![
        SystemSpec::monomer(0.0, 0.5, 1.0).unwrap(),
        SystemSpec::dimer(1.0, 0.0, 0.0, 0.5, 0.5).unwrap(),
        SystemSpec::dimer(1.0, 1.8, 0.2, 0.5, 0.5).unwrap(),
        SystemSpec::dimer(0.61, 1.8, 1.0, 0.19, 1.23).unwrap(),
    ];
    for alpha in [0.0, 0.5, 1.0] {
        cases.push(SystemSpec::end_to_end(path(4, 1.0), alpha, 0.5, 1.0).unwrap());
        cases.push(SystemSpec::end_to_end(path(7, 0.7), alpha, 1.0, 0.5).unwrap());
    }
    for seed in [1, 42] {
        for alpha in [0.1, 0.5, 1.0] {
            cases.push(SystemSpec::end_to_end(disordered(seed), alpha, 0.5, 1.0).unwrap());
        }
    }
    for spec in cases {
        let laplace = est_laplace(&spec).unwrap();
        let integral = est_time_integral(&spec, 1e-10).unwrap();
        let tol = f64::max(1e-6, 1e-4 * laplace);
        assert!(
            (laplace - integral).abs() <= tol,
            "N={} α={}: {laplace} vs {integral}",
            spec.n_nodes(),
            spec.alpha()
        );
    }
}

#[test]
fn source_rate_adds_its_inverse() {
    let templates = [
        SystemSpec::dimer(1.0, 1.8, 0.0, 0.5, 0.5).unwrap(),
        SystemSpec::end_to_end(path(5, 1.0), 0.4, 0.5, 1.0).unwrap(),
        SystemSpec::end_to_end(disordered(7), 0.6, 0.5, 1.0).unwrap(),
        SystemSpec::end_to_end(disordered(7), 1.0, 0.5, 0.5).unwrap(),
    ];
    for spec in templates {
        let a = est_laplace(&spec).unwrap();
        for other in [0.1, 2.0, 7.5] {
            let b = est_laplace(&spec.with_source_rate(other).unwrap()).unwrap();
            let expected = 1.0 / spec.source().rate - 1.0 / other;
            assert!((a - b - expected).abs() <= 1e-8, "{} vs {expected}", a - b);
        }
    }
}

#[test]
fn monomer_curve_is_flat() {
    let curve = est_sweep(&SystemSpec::monomer(0.0, 0.5, 1.0).unwrap(), &alpha_grid(21)).unwrap();
    for eta in &curve.etas {
        assert!((eta - 3.0).abs() <= 1e-10);
    }
}

#[test]
fn symmetric_dimer_has_interior_maximum() {
    let alphas = alpha_grid(1001);
    let curve = est_sweep(&SystemSpec::dimer(1.0, 0.0, 0.0, 0.5, 0.5).unwrap(), &alphas).unwrap();
    let (i, _) = curve
        .etas
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let argmax = alphas[i];
    assert!((argmax - 0.77).abs() <= 0.05, "argmax {argmax}");
    assert!(curve.etas[i] > curve.etas[0] && curve.etas[i] > curve.etas[1000]);
}

#[test]
fn detuned_dimer_decreases_monotonically() {
    let curve = est_sweep(&SystemSpec::dimer(1.0, 1.8, 0.0, 0.5, 0.5).unwrap(), &alpha_grid(101)).unwrap();
    for w in curve.etas.windows(2) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn positive_on_random_instances() {
    for seed in 0..20 {
        for alpha in [0.2, 0.9] {
            let eta = est_laplace(&SystemSpec::end_to_end(disordered(seed), alpha, 0.5, 1.0).unwrap()).unwrap();
            assert!(eta > 0.0 && eta.is_finite());
        }
    }
}

#[test]
fn unreachable_drain_is_reported() {
    let h = Hamiltonian::from_matrix(DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 2.0]))
        .unwrap();
    let spec = SystemSpec::end_to_end(h, 0.5, 0.5, 1.0).unwrap();
    assert!(matches!(est_laplace(&spec), Err(QswError::SingularGenerator(_))));
    assert!(est_time_integral(&spec, 1e-9).is_err());
}

#[test]
fn curve_csv_round_trip() {
    let curve = est_sweep(&SystemSpec::dimer(1.0, 1.8, 0.0, 0.5, 0.5).unwrap(), &alpha_grid(6)).unwrap();
    let text = curve.to_csv(&[]);
    assert!(text.contains("# gamma=0.5, Gamma=0.5, seed=none, realisations=none\n"));
    assert!(text.contains("\nalpha,eta\n"));
    let back = EstCurve::from_csv(&text).unwrap();
    assert_eq!(back.alphas, curve.alphas);
    assert_eq!(back.etas, curve.etas);
}
