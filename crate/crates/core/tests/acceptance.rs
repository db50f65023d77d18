//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use kickanneal::evolution::{
    evolve_run, evolve_state, ground_state_oracle, EvolutionParams, KickOperator, OracleBackend,
};
use kickanneal::models::{build, build_kick_generator, KickSpec, Model};
use kickanneal::observables::{ghz_fidelity, reduced_energy, Observers, OrderParameter, RunResult};
use kickanneal::pauli::{dense_matrix, Pauli, StateVector};
use kickanneal::theory::{
    averaged_hxx_coefficients, closed_form_mixer_energy, f_factor, optimal_angle, perturbative_expansion,
    speedup_ratio, TheoryInputs,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("    [{}] {what}", if ok { "ok" } else { "FAILED" }));
    }
}

const H2_BOND2: f64 = -0.948641;
const H2_BOND07: f64 = -1.136189;

fn c1_h2_energies() -> Outcome {
    let mut o = Outcome::new();
    for (bond, expect) in [(0.7, H2_BOND07), (2.0, H2_BOND2)] {
        let m = build(&h2_cfg(0, bond, 1.0, no_kick())).unwrap();
        let g = ground_state_oracle(&m.hamiltonian.problem(), 2, OracleBackend::Dense, 0).unwrap();
        let err = (g.energy - expect).abs();
        o.check(err < 1e-5, format!("bond {bond}: E = {:.7} (|err| = {err:.1e} < 1e-5)", g.energy));
    }
    o
}

fn c2_optimal_angle() -> Outcome {
    let mut o = Outcome::new();
    for (n_s, expect) in [(4usize, 0.00448), (8, 0.00421)] {
        let e_mix = closed_form_mixer_energy(n_s, 5.0, 0.25, 0.25);
        let a = optimal_angle(-((n_s - 1) as f64), e_mix, 4, 43).unwrap();
        let near = (a - expect).abs() < 1e-5;
        let window = (0.0035..=0.005).contains(&a);
        o.check(near && window, format!("N_S = {n_s}: theta_opt = {a:.6} (expect {expect}, window [0.0035, 0.005])"));
    }
    o
}

fn tfim_run(theta: f64) -> (Model, RunResult) {
    let kick = KickSpec::impulsive(Pauli::Z, Pauli::X, theta, 0.0008, 43);
    let model = build(&nn_cfg(4, 4, 0.125, kick.clone())).unwrap();
    let e_t = ground_state_oracle(&model.hamiltonian.problem(), 4, OracleBackend::Dense, 0).unwrap().energy;
    let p = EvolutionParams::resolve(&model.hamiltonian, &kick, None, None, Some(10)).unwrap();
    let obs = Observers { e_target: e_t, order: OrderParameter::Pfm, ghz_fidelity: true, epsilon: Some(0.05) };
    let r = evolve_run(&model, &kick, &p, &obs).unwrap();
    (model, r)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "none".into())
}

fn c3_speedup() -> Outcome {
    let mut o = Outcome::new();
    let (_, kicked) = tfim_run(0.004);
    let (_, bare) = tfim_run(0.0);
    let (ek, eu) = (kicked.final_relative_error().unwrap(), bare.final_relative_error().unwrap());
    let ratio = match (kicked.t_star, bare.t_star) {
        (Some(a), Some(b)) => Some(a / b),
        _ => None,
    };
    o.lines.push(format!(
        "    T*(kicked) = {}, T*(unkicked) = {}, final error kicked {ek:.4}, unkicked {eu:.4}",
        fmt_opt(kicked.t_star),
        fmt_opt(bare.t_star)
    ));
    let strict = ratio.is_some_and(|r| r <= 0.6) && ek <= eu;
    let fallback = ratio.is_some_and(|r| r < 1.0) && ek <= eu;
    o.lines.push(format!(
        "    ratio {} <= 0.6 with error ordering: {}",
        fmt_opt(ratio),
        if strict { "yes" } else { "no" }
    ));
    o.check(ek <= eu, format!("kicked final error {ek:.4} <= unkicked {eu:.4}"));
    o.check(fallback, format!("fallback: T* ratio {} < 1 and kicked error <= unkicked", fmt_opt(ratio)));
    o
}

fn h2_run(theta: f64, tau: f64) -> RunResult {
    let kick = KickSpec::impulsive(Pauli::Z, Pauli::XY, theta, tau / 10.0, 10);
    let model = build(&h2_cfg(2, 2.0, tau, kick.clone())).unwrap();
    let p = EvolutionParams::resolve(&model.hamiltonian, &kick, None, None, Some(10)).unwrap();
    let obs = Observers { e_target: H2_BOND2, order: OrderParameter::OddParity, ghz_fidelity: false, epsilon: Some(0.01) };
    evolve_run(&model, &kick, &p, &obs).unwrap()
}

fn c4_h2_convergence() -> Outcome {
    let mut o = Outcome::new();
    // theta_X^0 tau = 3
    let tau = 2.0;
    let bare = h2_run(0.0, tau);
    let kicked = h2_run(0.2, tau);
    for (name, r) in [("unkicked", &bare), ("kicked theta = 0.2", &kicked)] {
        let e = r.final_energy().unwrap();
        o.check((e - H2_BOND2).abs() < 1e-3, format!("{name}: final E = {e:.6} within 1e-3 of {H2_BOND2}"));
    }
    let faster = match (kicked.t_star, bare.t_star) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    };
    o.check(
        faster,
        format!("T*(eps = 0.01): kicked {} < unkicked {}", fmt_opt(kicked.t_star), fmt_opt(bare.t_star)),
    );
    o
}

fn single_kick_energy(model: &Model, ancilla: Pauli, system: Pauli, theta: f64) -> f64 {
    let kick = KickSpec::impulsive(ancilla, system, theta, 1.0, 1);
    let s = kickanneal::evolution::apply_kick(&model.initial, &kick).unwrap();
    reduced_energy(&s, &model.hamiltonian, 0.0).unwrap()
}

fn c5_landscape() -> Outcome {
    let mut o = Outcome::new();
    let thetas: Vec<f64> = (1..=20).map(|k| 0.005 * k as f64).collect();
    let tfim = build(&nn_cfg(4, 4, 0.25, no_kick())).unwrap();
    let e0 = reduced_energy(&tfim.initial, &tfim.hamiltonian, 0.0).unwrap();
    let delta = |a: Pauli, th: f64| (single_kick_energy(&tfim, a, Pauli::X, th) - e0).abs();
    let mut z_over_y = true;
    let mut x_over_y = true;
    let mut worst_xy = f64::INFINITY;
    for &th in &thetas {
        let (dz, dx, dy) = (delta(Pauli::Z, th), delta(Pauli::X, th), delta(Pauli::Y, th));
        z_over_y &= dz > dy + 1e-12;
        x_over_y &= dx > dy + 1e-12;
        worst_xy = worst_xy.min(dx - dy);
    }
    o.check(z_over_y, "NN-TFIM: |dE| for X^S Z^A exceeds X^S Y^A on theta in (0, 0.1]".into());
    o.check(x_over_y, format!("NN-TFIM: |dE| for X^S X^A exceeds X^S Y^A (min gap {worst_xy:.2e})"));
    let h2 = build(&h2_cfg(2, 2.0, 2.0, no_kick())).unwrap();
    let mut max_diff: f64 = 0.0;
    let mut x_differs: f64 = 0.0;
    for k in 0..=25 {
        let th = 0.02 * k as f64;
        let ey = single_kick_energy(&h2, Pauli::Y, Pauli::XY, th);
        let ez = single_kick_energy(&h2, Pauli::Z, Pauli::XY, th);
        let ex = single_kick_energy(&h2, Pauli::X, Pauli::XY, th);
        max_diff = max_diff.max((ey - ez).abs());
        x_differs = x_differs.max((ex - ey).abs());
    }
    o.check(max_diff < 1e-6, format!("H2: S Y^A and S Z^A agree pointwise (max diff {max_diff:.1e})"));
    o.check(x_differs > 1e-6, format!("H2: S X^A curve differs (max diff {x_differs:.2e})"));
    o
}

fn c6_theory_properties() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut min_f = f64::INFINITY;
    let mut max_sum_err: f64 = 0.0;
    let mut max_speedup = f64::NEG_INFINITY;
    let mut valid_draws = 0;
    let mut halving_err: f64 = 0.0;
    for _ in 0..200 {
        let t = rng.gen_range(0.01..5.0);
        let m0 = rng.gen_range(0.1..10.0);
        let tau = rng.gen_range(0.05..2.0);
        min_f = min_f.min(f_factor(t, m0, tau).unwrap());
        let (cx, cy) = averaged_hxx_coefficients(t, m0, tau).unwrap();
        max_sum_err = max_sum_err.max((cx + cy - 1.0).abs());

        let n_s = rng.gen_range(2..12usize);
        let n_a = rng.gen_range(1..6usize);
        let n_k = rng.gen_range(1..60usize);
        let inputs = TheoryInputs {
            n_s,
            n_a,
            n_k,
            theta: rng.gen_range(0.01..0.99) / (n_a * n_k) as f64,
            theta_m0: rng.gen_range(1.0..10.0),
            tau,
            theta_xx0: 1.0,
            n_bonds: n_s - 1,
            e_target: -((n_s - 1) as f64),
            epsilon: rng.gen_range(0.01..0.5),
            t_eval: tau,
        };
        if let Ok(r) = speedup_ratio(&inputs) {
            valid_draws += 1;
            max_speedup = max_speedup.max(r);
        }
        let ratio = rng.gen_range(0.0..1.0);
        let a = optimal_angle(-ratio, -1.0, n_a, n_k).unwrap();
        let da = optimal_angle(-ratio, -1.0, 2 * n_a, n_k).unwrap();
        let dk = optimal_angle(-ratio, -1.0, n_a, 2 * n_k).unwrap();
        halving_err = halving_err.max((da - a / 2.0).abs()).max((dk - a / 2.0).abs());
    }
    o.check(min_f > 0.0, format!("f_factor > 0 on 200 draws (min {min_f:.3e})"));
    o.check(max_sum_err < 1e-10, format!("c_xx + c_yy = 1 (max err {max_sum_err:.1e})"));
    o.check(
        valid_draws > 0 && max_speedup < 1.0,
        format!("speedup_ratio < 1 on {valid_draws} valid draws (max {max_speedup:.4})"),
    );
    o.check(halving_err < 1e-15, format!("theta_opt halves when N_A or N_K doubles (max err {halving_err:.1e})"));
    o
}

fn c7_oracles() -> Outcome {
    let mut o = Outcome::new();
    let model = build(&nn_cfg(5, 0, 0.25, no_kick())).unwrap();
    let p = EvolutionParams::resolve(&model.hamiltonian, &no_kick(), None, Some(1.0), None).unwrap();
    let psi = evolve_state(&model, &no_kick(), &p).unwrap();
    let reference = dense_midpoint(&model, &to_vec(&model.initial), 0.0, 1.0, 10_000);
    let inf = infidelity(&to_vec(&psi), &reference);
    o.check(inf < 1e-8, format!("Trotter vs dense midpoint, 5 qubits, T = 1: infidelity {inf:.2e} < 1e-8"));

    let mut worst: f64 = 0.0;
    for (n_s, n_a, sys) in [(3, 2, Pauli::X), (3, 3, Pauli::X), (2, 2, Pauli::XY), (4, 2, Pauli::Y)] {
        let reg = register(n_s, n_a);
        let spec = KickSpec::impulsive(Pauli::Z, sys, 0.3, 0.1, 1);
        let g = dense_matrix(&build_kick_generator(&spec, &reg).unwrap(), reg.n_qubits()).unwrap();
        let u = expm_herm(&g, 0.3);
        let qubits: Vec<(C64, C64)> = (0..reg.n_qubits())
            .map(|k| {
                let a = 0.2 + 0.3 * k as f64;
                (C64::new(a.cos(), 0.0), C64::from_polar(a.sin(), 0.5 * k as f64))
            })
            .collect();
        let psi = StateVector::product(reg, &qubits).unwrap();
        let mut kicked = psi.clone();
        KickOperator::new(&spec, &reg).unwrap().apply(&mut kicked).unwrap();
        worst = worst.max((to_vec(&kicked) - &u * to_vec(&psi)).norm());
    }
    o.check(worst < 1e-12, format!("kick factorization vs dense exponential (<= 6 qubits): {worst:.1e} < 1e-12"));

    let reg = register(3, 2);
    let thetas = [0.01, 0.02, 0.04];
    let errs: Vec<f64> = thetas
        .iter()
        .map(|&th| {
            let inputs = TheoryInputs {
                n_s: 3,
                n_a: 2,
                n_k: 1,
                theta: th,
                theta_m0: 5.0,
                tau: 0.1,
                theta_xx0: 1.0,
                n_bonds: 2,
                e_target: -2.0,
                epsilon: 0.05,
                t_eval: 0.1,
            };
            let ex = perturbative_expansion(&inputs, &reg).unwrap();
            let u = expm_herm(&(-&ex.generator), 1.0);
            let exact = &u * &ex.rho0 * u.adjoint();
            (ex.truncated() - exact).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    let slope = loglog_slope(&thetas, &errs);
    o.check((slope - 3.0).abs() <= 0.3, format!("perturbative density matrix error slope {slope:.3} (3 +/- 0.3)"));
    o
}

fn c8_conservation() -> Outcome {
    let mut o = Outcome::new();
    let (_, r) = tfim_run(0.004);
    let drift = r.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    o.check(drift < 1e-10, format!("norm drift over a full kicked run {drift:.1e} < 1e-10"));

    let kick = KickSpec::impulsive(Pauli::Z, Pauli::XY, 0.2, 0.2, 10);
    let model = build(&h2_cfg(2, 2.0, 2.0, kick.clone())).unwrap();
    let mut worst_herm: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for t_end in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let p = EvolutionParams::resolve(&model.hamiltonian, &kick, None, Some(t_end), None).unwrap();
        let s = evolve_state(&model, &kick, &p).unwrap();
        let rho = s.partial_trace_ancilla();
        worst_herm = worst_herm.max(rho.hermiticity_error());
        worst_trace = worst_trace.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        min_eig = min_eig.min(rho.min_eigenvalue());
    }
    o.check(
        worst_herm < 1e-10 && worst_trace < 1e-10 && min_eig > -1e-9,
        format!("reduced state: Hermiticity {worst_herm:.1e}, trace {worst_trace:.1e}, min eigenvalue {min_eig:.1e}"),
    );

    let mut worst: f64 = 0.0;
    for n in 1..=8usize {
        let reg = register(n, 1);
        let f = ghz_fidelity(&StateVector::basis(reg, reg.system_dim() - 1));
        let expect = if n % 2 == 0 { 2f64.powi(1 - n as i32) } else { 0.0 };
        worst = worst.max((f - expect).abs());
    }
    o.check(worst < 1e-12, format!("GHZ fidelity of |1...1> for N_S = 1..8 (max err {worst:.1e})"));
    o
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("H2 exact energies", c1_h2_energies),
        ("optimal-angle formula", c2_optimal_angle),
        ("simulated speedup", c3_speedup),
        ("H2 convergence", c4_h2_convergence),
        ("landscape ordering", c5_landscape),
        ("theory property suite", c6_theory_properties),
        ("oracle equivalence", c7_oracles),
        ("conservation suite", c8_conservation),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {}: {name} ({secs:.1}s)", if out.pass { "PASS" } else { "FAIL" }, i + 1);
        for line in &out.lines {
            println!("{line}");
        }
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
