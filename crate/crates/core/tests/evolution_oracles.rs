mod common;

use common::*;
use kickanneal::evolution::{
    evolve_run, evolve_state, ground_state_oracle, EvolutionParams, KickOperator, OracleBackend, Propagator,
};
use kickanneal::models::{build, build_kick_generator, KickMode, KickSpec};
use kickanneal::observables::{reduced_energy, Observers, OrderParameter};
use kickanneal::pauli::{dense_matrix, Pauli, PauliString, StateVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn params(dt: f64, t_end: f64) -> EvolutionParams {
    EvolutionParams { dt, t_end, record_stride: 1 }
}

#[test]
fn trotter_matches_dense_midpoint_three_qubits() {
    let model = build(&nn_cfg(3, 0, 0.25, no_kick())).unwrap();
    let p = EvolutionParams::resolve(&model.hamiltonian, &no_kick(), None, Some(1.0), None).unwrap();
    let psi = evolve_state(&model, &no_kick(), &p).unwrap();
    let reference = dense_midpoint(&model, &to_vec(&model.initial), 0.0, 1.0, 10_000);
    let inf = infidelity(&to_vec(&psi), &reference);
    assert!(inf < 1e-8, "infidelity {inf:e}");
}

#[test]
fn trotter_error_is_second_order() {
    let model = build(&nn_cfg(5, 0, 0.25, no_kick())).unwrap();
    let psi0 = to_vec(&model.initial);
    let reference = dense_magnus4(&model, &psi0, 1.0, 4000);
    let dts = [1e-3, 5e-4, 2.5e-4];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let psi = evolve_state(&model, &no_kick(), &params(dt, 1.0)).unwrap();
            phase_distance(&to_vec(&psi), &reference)
        })
        .collect();
    let slope = loglog_slope(&dts, &errs);
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}, errors {errs:?}");
}

#[test]
fn halving_dt_changes_final_energy_little() {
    let kick = KickSpec::impulsive(Pauli::Z, Pauli::X, 0.004, 0.0008, 43);
    let model = build(&nn_cfg(4, 2, 0.125, kick.clone())).unwrap();
    let p = EvolutionParams::resolve(&model.hamiltonian, &kick, None, None, None).unwrap();
    let half = EvolutionParams { dt: p.dt / 2.0, ..p };
    let e = |q: &EvolutionParams| {
        let s = evolve_state(&model, &kick, q).unwrap();
        reduced_energy(&s, &model.hamiltonian, q.n_steps() as f64 * q.dt).unwrap()
    };
    let (a, b) = (e(&p), e(&half));
    assert!((a - b).abs() / b.abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn kick_factorization_matches_dense_exponential() {
    for (n_s, n_a, sys, anc) in [(3, 2, Pauli::X, Pauli::Z), (2, 2, Pauli::XY, Pauli::Z), (3, 3, Pauli::Y, Pauli::X)] {
        let reg = register(n_s, n_a);
        let spec = KickSpec::impulsive(anc, sys, 0.3, 0.1, 1);
        let gen = build_kick_generator(&spec, &reg).unwrap();
        let g = dense_matrix(&gen, reg.n_qubits()).unwrap();
        let u = expm_herm(&g, 0.3);
        let mut psi = StateVector::basis(reg, 0);
        // a generic product state
        let q: Vec<(C64, C64)> = (0..reg.n_qubits())
            .map(|k| {
                let a = 0.3 + 0.2 * k as f64;
                (C64::new(a.cos(), 0.0), C64::from_polar(a.sin(), 0.7 * k as f64))
            })
            .collect();
        psi = StateVector::product(reg, &q).unwrap_or(psi);
        let op = KickOperator::new(&spec, &reg).unwrap();
        let mut kicked = psi.clone();
        op.apply(&mut kicked).unwrap();
        let expect = &u * to_vec(&psi);
        let diff = (to_vec(&kicked) - expect).norm();
        assert!(diff < 1e-12, "{n_s}+{n_a} {sys}/{anc}: {diff:e}");
    }
}

#[test]
fn doubled_half_kicks_equal_full_kicks() {
    let spec = KickSpec::impulsive(Pauli::Z, Pauli::X, 0.01, 0.002, 5);
    let model = build(&nn_cfg(3, 2, 0.25, spec.clone())).unwrap();
    let p = EvolutionParams::resolve(&model.hamiltonian, &spec, None, Some(0.05), None).unwrap();
    let full = evolve_state(&model, &spec, &p).unwrap();

    let half = KickOperator::new(&spec.with_theta(0.005), model.hamiltonian.register()).unwrap();
    let prop = Propagator::new(&model.hamiltonian);
    let per_kick = (spec.dt_k / p.dt).round() as usize;
    let mut psi = model.initial.clone();
    for n in 0..=p.n_steps() {
        if n % per_kick == 0 && n / per_kick < spec.n_k {
            half.apply(&mut psi).unwrap();
            half.apply(&mut psi).unwrap();
        }
        if n < p.n_steps() {
            prop.step(&mut psi, n as f64 * p.dt, p.dt);
        }
    }
    let diff = (to_vec(&full) - to_vec(&psi)).norm();
    assert!(diff < 1e-10, "{diff:e}");
}

#[test]
fn zero_angle_run_equals_unkicked_run() {
    let spec = KickSpec::impulsive(Pauli::Z, Pauli::X, 0.0, 0.0008, 43);
    let model = build(&nn_cfg(4, 2, 0.125, spec.clone())).unwrap();
    let p = EvolutionParams { dt: 0.0004, t_end: 0.5, record_stride: 10 };
    let obs = Observers { e_target: -3.0, order: OrderParameter::Pfm, ghz_fidelity: true, epsilon: Some(0.05) };
    let a = evolve_run(&model, &spec, &p, &obs).unwrap();
    let b = evolve_run(&model, &no_kick(), &p, &obs).unwrap();
    for (x, y) in a.energy.iter().zip(&b.energy) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn continuous_kick_with_vanishing_rate_is_unkicked() {
    let mut spec = KickSpec::impulsive(Pauli::Z, Pauli::X, 0.004, 0.0008, 43);
    spec.mode = KickMode::Continuous;
    let model = build(&nn_cfg(3, 1, 0.25, spec.clone())).unwrap();
    let p = params(5e-4, 0.5);
    let base = evolve_state(&model, &no_kick(), &p).unwrap();
    let mut prev = f64::INFINITY;
    for rate in [1e-2, 1e-4, 1e-6, 0.0] {
        spec.continuous_rate = Some(rate);
        let psi = evolve_state(&model, &spec, &p).unwrap();
        let d = (to_vec(&psi) - to_vec(&base)).norm();
        assert!(d <= prev + 1e-15);
        prev = d;
    }
    assert!(prev < 1e-14);
}

#[test]
fn continuous_kick_matches_dense_with_constant_generator() {
    let mut spec = KickSpec::impulsive(Pauli::Z, Pauli::X, 0.0, 0.0008, 1);
    spec.mode = KickMode::Continuous;
    spec.continuous_rate = Some(0.3);
    let model = build(&nn_cfg(2, 1, 0.25, spec.clone())).unwrap();
    let reg = *model.hamiltonian.register();
    let gen = dense_matrix(&build_kick_generator(&spec, &reg).unwrap(), reg.n_qubits()).unwrap();
    let psi = evolve_state(&model, &spec, &params(1e-4, 0.5)).unwrap();
    let mut v = to_vec(&model.initial);
    let steps = 5000;
    let dt = 0.5 / steps as f64;
    for k in 0..steps {
        let h = model_matrix(&model, (k as f64 + 0.5) * dt) + &gen * C64::new(0.3, 0.0);
        v = expm_herm(&h, dt) * v;
    }
    assert!(infidelity(&to_vec(&psi), &v) < 1e-8);
}

#[test]
fn norm_is_conserved_over_a_full_run() {
    let spec = KickSpec::impulsive(Pauli::Z, Pauli::X, 0.004, 0.0008, 43);
    let model = build(&nn_cfg(4, 4, 0.125, spec.clone())).unwrap();
    let p = EvolutionParams::resolve(&model.hamiltonian, &spec, None, None, Some(100)).unwrap();
    let obs = Observers { e_target: -3.0, order: OrderParameter::Pfm, ghz_fidelity: false, epsilon: None };
    let r = evolve_run(&model, &spec, &p, &obs).unwrap();
    let drift = r.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-10, "{drift:e}");
}

#[test]
fn oracle_known_energies() {
    let tfim = build(&nn_cfg(4, 0, 1.0, no_kick())).unwrap();
    let g = ground_state_oracle(&tfim.hamiltonian.problem(), 4, OracleBackend::Dense, 0).unwrap();
    assert!((g.energy + 3.0).abs() < 1e-12);
    for (bond, e) in [(0.7, -1.136189), (2.0, -0.948641)] {
        let m = build(&h2_cfg(0, bond, 1.0, no_kick())).unwrap();
        for backend in [OracleBackend::Dense, OracleBackend::ImaginaryTime] {
            let g = ground_state_oracle(&m.hamiltonian.problem(), 2, backend, 7).unwrap();
            assert!((g.energy - e).abs() < 1e-5, "{bond} {backend:?} {}", g.energy);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn imaginary_time_is_variational(seed in 0u64..1000, coeffs in prop::collection::vec(-1.0f64..1.0, 6)) {
        let strings = vec![
            PauliString::single(coeffs[0], 0, Pauli::Z),
            PauliString::single(coeffs[1], 1, Pauli::X),
            PauliString::pair(coeffs[2], 0, Pauli::X, 1, Pauli::X),
            PauliString::pair(coeffs[3], 1, Pauli::Z, 2, Pauli::Z),
            PauliString::pair(coeffs[4], 0, Pauli::Y, 2, Pauli::Y),
            PauliString::single(coeffs[5], 2, Pauli::X),
        ];
        let dense = ground_state_oracle(&strings, 3, OracleBackend::Dense, seed).unwrap();
        let it = ground_state_oracle(&strings, 3, OracleBackend::ImaginaryTime, seed).unwrap();
        prop_assert!(it.energy >= dense.energy - 1e-9);
        prop_assert!((it.energy - dense.energy).abs() < 1e-9);
    }
}
