//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use kickanneal::models::{KickSpec, Model, ModelConfig, ModelKind};
use kickanneal::pauli::{dense_matrix, Pauli, QubitRegister, StateVector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type Mat = DMatrix<C64>;

pub fn nn_cfg(n_s: usize, n_a: usize, tau: f64, kick: KickSpec) -> ModelConfig {
    ModelConfig {
        model: ModelKind::NnTfim,
        n_system: n_s,
        n_ancilla: n_a,
        theta_xx0: Some(1.0),
        bond_length: None,
        coefficients_file: None,
        theta_mixer0: 5.0,
        tau,
        kick,
    }
}

pub fn h2_cfg(n_a: usize, bond: f64, tau: f64, kick: KickSpec) -> ModelConfig {
    ModelConfig {
        model: ModelKind::H2,
        n_system: 2,
        n_ancilla: n_a,
        theta_xx0: None,
        bond_length: Some(bond),
        coefficients_file: None,
        theta_mixer0: 1.5,
        tau,
        kick,
    }
}

pub fn no_kick() -> KickSpec {
    KickSpec::impulsive(Pauli::Z, Pauli::X, 0.0, 0.0008, 0)
}

/// `exp(-i h s)` for Hermitian `h`, by eigendecomposition.
pub fn expm_herm(h: &Mat, s: f64) -> Mat {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let v = eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * s)));
    &v * d * v.adjoint()
}

pub fn model_matrix(model: &Model, t: f64) -> Mat {
    let n = model.hamiltonian.register().n_qubits();
    dense_matrix(&model.hamiltonian.at(t), n).unwrap()
}

pub fn to_vec(state: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(state.amplitudes())
}

/// Composition of `steps` exact midpoint exponentials over `[t0, t0 + T]`.
pub fn dense_midpoint(model: &Model, psi: &DVector<C64>, t0: f64, t_total: f64, steps: usize) -> DVector<C64> {
    let dt = t_total / steps as f64;
    let mut v = psi.clone();
    for k in 0..steps {
        let h = model_matrix(model, t0 + (k as f64 + 0.5) * dt);
        v = expm_herm(&h, dt) * v;
    }
    v
}

/// Fourth-order Magnus reference: per step
/// `exp(-i (h/2 (H1 + H2) + i sqrt(3)/12 h^2 [H1, H2]))` with Gauss nodes.
pub fn dense_magnus4(model: &Model, psi: &DVector<C64>, t_total: f64, steps: usize) -> DVector<C64> {
    let h = t_total / steps as f64;
    let c1 = 0.5 - 3f64.sqrt() / 6.0;
    let c2 = 0.5 + 3f64.sqrt() / 6.0;
    let mut v = psi.clone();
    for k in 0..steps {
        let t = k as f64 * h;
        let h1 = model_matrix(model, t + c1 * h);
        let h2 = model_matrix(model, t + c2 * h);
        let comm = &h1 * &h2 - &h2 * &h1;
        // Omega = -i K with K Hermitian
        let k_mat = (&h1 + &h2) * C64::new(h / 2.0, 0.0) + comm * C64::new(0.0, 3f64.sqrt() / 12.0 * h * h);
        v = expm_herm(&k_mat, 1.0) * v;
    }
    v
}

pub fn infidelity(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let ov = a.dotc(b);
    1.0 - ov.norm_sqr() / (a.norm_squared() * b.norm_squared())
}

/// `min_phi || a - e^{i phi} b ||`.
pub fn phase_distance(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let ov = b.dotc(a);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    (a - b * phase).norm()
}

pub fn register(n_s: usize, n_a: usize) -> QubitRegister {
    QubitRegister::new(n_s, n_a).unwrap()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Midpoint Riemann sum with `n` cells.
pub fn riemann(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|k| f(a + (k as f64 + 0.5) * h)).sum::<f64>() * h
}
