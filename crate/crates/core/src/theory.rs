//! Averaged-Hamiltonian predictions for kicked annealing.
//!
//! Everything here is evaluated numerically: the rotating-frame integrals by
//! double-exponential quadrature, and the density-matrix expansion by dense
//! commutators at oracle scale.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{dense_matrix, DensityMatrix, Pauli, PauliString, QubitRegister, StateVector};

/// Absolute tolerance of every rotating-frame integral.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub n_s: usize,
    pub n_a: usize,
    pub n_k: usize,
    pub theta: f64,
    /// Initial mixer amplitude `theta_M(0)`.
    pub theta_m0: f64,
    pub tau: f64,
    pub theta_xx0: f64,
    /// Number of Ising bonds in the problem Hamiltonian.
    pub n_bonds: usize,
    /// True ground energy `E_S^T` (negative).
    pub e_target: f64,
    pub epsilon: f64,
    /// Evaluation time `T`.
    pub t_eval: f64,
}

impl TheoryInputs {
    /// The averaged picture assumes a strong rotating frame,
    /// `theta_M(0) tau >= 1`.
    pub fn is_valid_regime(&self) -> bool {
        self.theta_m0 * self.tau >= 1.0
    }

    /// Total kick strength `N_A N_K theta`.
    pub fn kick_strength(&self) -> f64 {
        self.n_a as f64 * self.n_k as f64 * self.theta
    }

    fn check(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Domain(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.t_eval > 0.0) {
            return Err(Error::Domain(format!("evaluation time must be > 0, got {}", self.t_eval)));
        }
        Ok(())
    }
}

/// `Theta_M(t) = theta_M(0) tau (1 - e^{-t/tau})`.
pub fn mixer_phase(t: f64, theta_m0: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    Ok(theta_m0 * tau * -(-t / tau).exp_m1())
}

/// `int_a^b f`, split into pieces short enough that the integrand's phase
/// (rate at most `max_rate` rad per unit) advances by at most half a radian.
fn integrate_oscillatory(f: impl Fn(f64) -> f64, a: f64, b: f64, max_rate: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let pieces = ((b - a) * max_rate.abs() * 2.0).ceil().clamp(4.0, 200_000.0) as usize;
    let h = (b - a) / pieces as f64;
    let target = QUADRATURE_TOL * 1e-2 / pieces as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for k in 0..pieces {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == pieces { b } else { lo + h };
        let out = quadrature::double_exponential::integrate(&f, lo, hi, target);
        total += out.integral;
        err += out.error_estimate;
    }
    if !err.is_finite() || err > QUADRATURE_TOL {
        return Err(Error::Numerical(format!(
            "quadrature did not converge (error estimate {err:e})"
        )));
    }
    Ok(total)
}

/// Averaged `XX` and `YY` weights of the rotating-frame Ising term:
/// `c_xx = (1/T) int_0^T cos^2(2 Theta_M)`, `c_yy = (1/T) int_0^T sin^2(2 Theta_M)`.
pub fn averaged_hxx_coefficients(t_eval: f64, theta_m0: f64, tau: f64) -> Result<(f64, f64)> {
    if !(t_eval > 0.0) {
        return Err(Error::Domain(format!("evaluation time must be > 0, got {t_eval}")));
    }
    mixer_phase(0.0, theta_m0, tau)?;
    let phase = |t: f64| 2.0 * theta_m0 * tau * -(-t / tau).exp_m1();
    let rate = 2.0 * theta_m0;
    let c_xx = integrate_oscillatory(|t| phase(t).cos().powi(2), 0.0, t_eval, rate)? / t_eval;
    let c_yy = integrate_oscillatory(|t| phase(t).sin().powi(2), 0.0, t_eval, rate)? / t_eval;
    Ok((c_xx, c_yy))
}

/// Kick-induced energy-flow factor
/// `sin^2(2 theta_M0 tau) int_0^{T/tau} cos^2(2 Theta) + cos^2(2 theta_M0 tau) int_0^{T/tau} sin^2(2 Theta)`
/// with `Theta(t') = theta_M0 tau (1 - e^{-t'})` in units of `tau`.
pub fn f_factor(t_eval: f64, theta_m0: f64, tau: f64) -> Result<f64> {
    if !(t_eval > 0.0) {
        return Err(Error::Domain(format!("evaluation time must be > 0, got {t_eval}")));
    }
    mixer_phase(0.0, theta_m0, tau)?;
    let amp = 2.0 * theta_m0 * tau;
    let phase = |s: f64| amp * -(-s).exp_m1();
    let upper = t_eval / tau;
    let cos_int = integrate_oscillatory(|s| phase(s).cos().powi(2), 0.0, upper, amp)?;
    let sin_int = integrate_oscillatory(|s| phase(s).sin().powi(2), 0.0, upper, amp)?;
    Ok(amp.sin().powi(2) * cos_int + amp.cos().powi(2) * sin_int)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedEnergies {
    /// Unkicked mixer energy `-N_S theta_M(T)`.
    pub e0: f64,
    /// Second-order kick correction to the mixer energy.
    pub e2: f64,
    /// Kick-driven flow into the Ising energy.
    pub e_system_flow: f64,
    /// Whether the inputs sit in the strong-frame regime.
    pub valid: bool,
}

/// Closed-form mixer-frame energies at `T = inputs.t_eval`:
/// `e0 = -N_S theta_M(T)`, `e2 = N_A^2 N_K^2 theta^2 N_S theta_M(T)`,
/// `flow = -theta_XX0 (N_A^2 N_K^2 theta^2 / 2) n_bonds F(T)`.
pub fn predicted_energies(inputs: &TheoryInputs) -> Result<PredictedEnergies> {
    inputs.check()?;
    let theta_m = inputs.theta_m0 * (-inputs.t_eval / inputs.tau).exp();
    let k2 = inputs.kick_strength().powi(2);
    let ns = inputs.n_s as f64;
    let flow = if k2 == 0.0 {
        0.0
    } else {
        let f = f_factor(inputs.t_eval, inputs.theta_m0, inputs.tau)?;
        -inputs.theta_xx0 * 0.5 * k2 * inputs.n_bonds as f64 * f
    };
    Ok(PredictedEnergies {
        e0: -ns * theta_m,
        e2: k2 * ns * theta_m,
        e_system_flow: flow,
        valid: inputs.is_valid_regime(),
    })
}

/// Mixer energy `-N_S theta_M0 e^{-T/tau}` of the unkicked product state.
pub fn closed_form_mixer_energy(n_s: usize, theta_m0: f64, tau: f64, t: f64) -> f64 {
    -(n_s as f64) * theta_m0 * (-t / tau).exp()
}

/// `theta_opt = sqrt(1 - E_target / E_mixer) / (N_A N_K)`.
///
/// Both energies must be negative with the mixer at least as deep as the
/// target; otherwise the square root has no real meaning.
pub fn optimal_angle(e_target: f64, e_mixer_tau: f64, n_a: usize, n_k: usize) -> Result<f64> {
    if n_a == 0 || n_k == 0 {
        return Err(Error::Domain("optimal angle needs N_A >= 1 and N_K >= 1".into()));
    }
    if !(e_target < 0.0) || !(e_mixer_tau < 0.0) {
        return Err(Error::Domain(format!(
            "optimal angle needs negative energies (target {e_target}, mixer {e_mixer_tau})"
        )));
    }
    let ratio = e_target / e_mixer_tau;
    if ratio > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "mixer energy {e_mixer_tau} is shallower than the target {e_target} (ratio {ratio})"
        )));
    }
    Ok((1.0 - ratio).max(0.0).sqrt() / (n_a as f64 * n_k as f64))
}

/// Predicted `T*(theta) / T*(0)`:
/// `1 + ln(1 - theta^2 N_A^2 N_K^2) / ln(-N_S theta_M0 / ((1 - eps) E_target))`.
pub fn speedup_ratio(inputs: &TheoryInputs) -> Result<f64> {
    if !(inputs.epsilon > 0.0 && inputs.epsilon < 1.0) {
        return Err(Error::Domain(format!("speedup needs 0 < epsilon < 1, got {}", inputs.epsilon)));
    }
    if !(inputs.e_target < 0.0) {
        return Err(Error::Domain(format!("speedup needs E_target < 0, got {}", inputs.e_target)));
    }
    let k2 = inputs.kick_strength().powi(2);
    if k2 >= 1.0 {
        return Err(Error::Domain(format!(
            "speedup needs (N_A N_K theta)^2 < 1, got {k2}"
        )));
    }
    let depth = -(inputs.n_s as f64) * inputs.theta_m0 / ((1.0 - inputs.epsilon) * inputs.e_target);
    if !(depth > 1.0) {
        return Err(Error::Domain(format!(
            "speedup needs -N_S theta_M0 / ((1 - eps) E_target) > 1, got {depth}"
        )));
    }
    Ok(1.0 + (-k2).ln_1p() / depth.ln())
}

/// GHZ fidelity gained from the kicks,
/// `2^{1-N_S} N_S (N_A N_K theta s + N_A^2 N_K^2 theta^2 s^2)` with
/// `s = sin(2 theta_M0 tau)`.
pub fn predicted_fidelity_gain(inputs: &TheoryInputs) -> f64 {
    let s = (2.0 * inputs.theta_m0 * inputs.tau).sin();
    let k = inputs.kick_strength();
    let pre = 2f64.powi(1 - inputs.n_s as i32) * inputs.n_s as f64;
    pre * k * s + pre * k * k * s * s
}

/// Largest system / ancilla sizes for the dense expansion.
pub const MAX_EXPANSION_SYSTEM: usize = 4;
pub const MAX_EXPANSION_ANCILLA: usize = 2;

/// Zeroth, first and second order of the kicked density matrix in the
/// averaged frame, full system-plus-ancilla space.
#[derive(Debug, Clone)]
pub struct PerturbativeExpansion {
    pub rho0: DMatrix<C64>,
    pub rho1: DMatrix<C64>,
    pub rho2: DMatrix<C64>,
    /// `A = a_c G_X - a_s G_Y`, whose conjugation `e^{iA} rho e^{-iA}` the
    /// expansion truncates.
    pub generator: DMatrix<C64>,
}

impl PerturbativeExpansion {
    pub fn truncated(&self) -> DMatrix<C64> {
        &self.rho0 + &self.rho1 + &self.rho2
    }
}

fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// `G = sum_ij P_i^S Z_j^A` as a dense matrix.
fn collective_generator(register: &QubitRegister, system: Pauli) -> Result<DMatrix<C64>> {
    let mut strings = Vec::new();
    for i in 0..register.n_system() {
        for j in 0..register.n_ancilla() {
            strings.push(PauliString::pair(1.0, i, system, register.ancilla_qubit(j), Pauli::Z));
        }
    }
    dense_matrix(&strings, register.n_qubits())
}

/// Second-order expansion for the TFIM initial state
/// `|1...1>_S |0...0>_A` under kicks `X^S Z^A`, with averaged angles
/// `a_c = N_K theta cos(2 theta_M0 tau)` and `a_s = N_K theta sin(2 theta_M0 tau)`:
///
/// `rho1 = i a_c [G_X, rho0] - i a_s [G_Y, rho0]`,
/// `rho2 = -a_c^2/2 [G_X,[G_X,rho0]] - a_s^2/2 [G_Y,[G_Y,rho0]]
///        + a_s a_c/2 ([G_X,[G_Y,rho0]] + [G_Y,[G_X,rho0]])`.
pub fn perturbative_expansion(inputs: &TheoryInputs, register: &QubitRegister) -> Result<PerturbativeExpansion> {
    if register.n_system() > MAX_EXPANSION_SYSTEM || register.n_ancilla() > MAX_EXPANSION_ANCILLA {
        return Err(Error::Config(format!(
            "dense expansion limited to N_S <= {MAX_EXPANSION_SYSTEM}, N_A <= {MAX_EXPANSION_ANCILLA}"
        )));
    }
    if register.n_ancilla() == 0 {
        return Err(Error::Config("dense expansion needs at least one ancilla".into()));
    }
    let phase = 2.0 * inputs.theta_m0 * inputs.tau;
    let base = inputs.n_k as f64 * inputs.theta;
    let a_c = base * phase.cos();
    let a_s = base * phase.sin();

    let psi0 = StateVector::basis(*register, register.system_dim() - 1);
    let v = nalgebra::DVector::from_column_slice(psi0.amplitudes());
    let rho0 = &v * v.adjoint();
    let gx = collective_generator(register, Pauli::X)?;
    let gy = collective_generator(register, Pauli::Y)?;

    let i = C64::new(0.0, 1.0);
    let c = |x: f64| C64::new(x, 0.0);
    let gx_r = commutator(&gx, &rho0);
    let gy_r = commutator(&gy, &rho0);
    let rho1 = &gx_r * (i * a_c) - &gy_r * (i * a_s);
    let rho2 = commutator(&gx, &gx_r) * c(-0.5 * a_c * a_c)
        + commutator(&gy, &gy_r) * c(-0.5 * a_s * a_s)
        + commutator(&gx, &gy_r) * c(0.5 * a_s * a_c)
        + commutator(&gy, &gx_r) * c(0.5 * a_s * a_c);
    let generator = &gx * c(a_c) - &gy * c(a_s);
    Ok(PerturbativeExpansion { rho0, rho1, rho2, generator })
}

/// `rho0 + rho1 + rho2` on the full register.
pub fn perturbative_density_matrix(inputs: &TheoryInputs, register: &QubitRegister) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(perturbative_expansion(inputs, register)?.truncated())
}

/// Everything the theory predicts for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    pub valid_regime: bool,
    pub mixer_phase_at_t: f64,
    pub c_xx: f64,
    pub c_yy: f64,
    pub f_factor: f64,
    pub energies: PredictedEnergies,
    pub e_mixer_tau: f64,
    pub optimal_angle: std::result::Result<f64, String>,
    pub speedup_ratio: std::result::Result<f64, String>,
    pub fidelity_gain: f64,
}

impl TheoryReport {
    pub fn compute(inputs: &TheoryInputs, e_mixer_tau: f64) -> Result<Self> {
        inputs.check()?;
        let (c_xx, c_yy) = averaged_hxx_coefficients(inputs.t_eval, inputs.theta_m0, inputs.tau)?;
        Ok(Self {
            inputs: inputs.clone(),
            valid_regime: inputs.is_valid_regime(),
            mixer_phase_at_t: mixer_phase(inputs.t_eval, inputs.theta_m0, inputs.tau)?,
            c_xx,
            c_yy,
            f_factor: f_factor(inputs.t_eval, inputs.theta_m0, inputs.tau)?,
            energies: predicted_energies(inputs)?,
            e_mixer_tau,
            optimal_angle: optimal_angle(inputs.e_target, e_mixer_tau, inputs.n_a, inputs.n_k)
                .map_err(|e| e.to_string()),
            speedup_ratio: speedup_ratio(inputs).map_err(|e| e.to_string()),
            fidelity_gain: predicted_fidelity_gain(inputs),
        })
    }
}
