//! Model builders: NN-TFIM, ILR-TFIM and the two-qubit H2 Hamiltonian, their
//! annealing schedules, initial states and kick generators.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, QubitRegister, StateVector};

/// Time dependence of a Hamiltonian term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { amplitude: f64 },
    ExpDecay { amplitude: f64, tau: f64 },
}

impl Schedule {
    pub fn constant(amplitude: f64) -> Self {
        Schedule::Constant { amplitude }
    }

    pub fn exp_decay(amplitude: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Config(format!("schedule time constant must be > 0, got {tau}")));
        }
        Ok(Schedule::ExpDecay { amplitude, tau })
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Schedule::Constant { amplitude } | Schedule::ExpDecay { amplitude, .. } => amplitude,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { amplitude } => amplitude,
            Schedule::ExpDecay { amplitude, tau } => amplitude * (-t / tau).exp(),
        }
    }

    /// `int_0^t value(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { amplitude } => amplitude * t,
            Schedule::ExpDecay { amplitude, tau } => amplitude * tau * (-(-t / tau).exp_m1()),
        }
    }
}

/// What a term contributes to: the annealed driver, the always-on problem,
/// or a continuous kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermRole {
    Mixer,
    Problem,
    Kick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledTerm {
    pub schedule: Schedule,
    pub string: PauliString,
    pub role: TermRole,
}

impl ScheduledTerm {
    pub fn coefficient(&self, t: f64) -> f64 {
        self.schedule.value(t) * self.string.coeff()
    }
}

/// Sum of scheduled Pauli strings over a register.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledHamiltonian {
    register: QubitRegister,
    terms: Vec<ScheduledTerm>,
}

impl ScheduledHamiltonian {
    pub fn new(register: QubitRegister) -> Self {
        Self { register, terms: Vec::new() }
    }

    pub fn push(&mut self, schedule: Schedule, string: PauliString, role: TermRole) -> Result<()> {
        if string.span() > self.register.n_qubits() {
            return Err(Error::Config(format!(
                "term {string} does not fit the {}-qubit register",
                self.register.n_qubits()
            )));
        }
        self.terms.push(ScheduledTerm { schedule, string, role });
        Ok(())
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    pub fn terms(&self) -> &[ScheduledTerm] {
        &self.terms
    }

    /// Instantaneous operator at time `t`.
    pub fn at(&self, t: f64) -> Vec<PauliString> {
        self.terms.iter().map(|term| term.string.with_coeff(term.coefficient(t))).collect()
    }

    pub fn at_role(&self, t: f64, role: TermRole) -> Vec<PauliString> {
        self.terms
            .iter()
            .filter(|term| term.role == role)
            .map(|term| term.string.with_coeff(term.coefficient(t)))
            .collect()
    }

    /// Mixer plus problem terms at `t`, i.e. the system Hamiltonian.
    pub fn system_at(&self, t: f64) -> Vec<PauliString> {
        self.terms
            .iter()
            .filter(|term| term.role != TermRole::Kick)
            .map(|term| term.string.with_coeff(term.coefficient(t)))
            .collect()
    }

    /// The always-on problem Hamiltonian.
    pub fn problem(&self) -> Vec<PauliString> {
        self.at_role(0.0, TermRole::Problem)
    }

    /// Largest absolute term coefficient over all times.
    pub fn max_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .map(|term| (term.schedule.amplitude() * term.string.coeff()).abs())
            .fold(0.0, f64::max)
    }

    /// Annealing time constant of the mixer, if any term decays.
    pub fn mixer_tau(&self) -> Option<f64> {
        self.terms.iter().find_map(|term| match term.schedule {
            Schedule::ExpDecay { tau, .. } => Some(tau),
            Schedule::Constant { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickMode {
    Impulsive,
    Continuous,
}

/// Ancilla-entangling kick `exp(-i theta (sum_l sigma^A_l) (sum_i P^S_i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickSpec {
    pub ancilla_axis: Pauli,
    pub system_axis: Pauli,
    pub theta: f64,
    pub dt_k: f64,
    pub n_k: usize,
    pub mode: KickMode,
    /// Angle per unit time for continuous mode; defaults to `theta / dt_k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous_rate: Option<f64>,
}

impl KickSpec {
    pub fn impulsive(ancilla_axis: Pauli, system_axis: Pauli, theta: f64, dt_k: f64, n_k: usize) -> Self {
        Self {
            ancilla_axis,
            system_axis,
            theta,
            dt_k,
            n_k,
            mode: KickMode::Impulsive,
            continuous_rate: None,
        }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..self.clone() }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.ancilla_axis == Pauli::XY {
            bad.push("kick.ancilla_axis must be X, Y or Z".to_string());
        }
        if !self.theta.is_finite() {
            bad.push("kick.theta must be finite".to_string());
        }
        if !(self.dt_k > 0.0) || !self.dt_k.is_finite() {
            bad.push("kick.dt_k must be > 0".to_string());
        }
        if let Some(rate) = self.continuous_rate {
            if !rate.is_finite() {
                bad.push("kick.continuous_rate must be finite".to_string());
            }
            if self.mode == KickMode::Impulsive {
                bad.push("kick.continuous_rate only applies to continuous mode".to_string());
            }
        }
        bad
    }

    /// Firing instants `0, dt_k, ..., (n_k - 1) dt_k` (impulsive mode).
    pub fn kick_times(&self) -> Vec<f64> {
        match self.mode {
            KickMode::Impulsive => (0..self.n_k).map(|k| k as f64 * self.dt_k).collect(),
            KickMode::Continuous => Vec::new(),
        }
    }

    pub fn last_kick_time(&self) -> f64 {
        self.n_k.saturating_sub(1) as f64 * self.dt_k
    }

    pub fn rate(&self) -> f64 {
        self.continuous_rate.unwrap_or(self.theta / self.dt_k)
    }

    /// True when the kick does nothing (zero angle or no kicks).
    pub fn is_trivial(&self) -> bool {
        match self.mode {
            KickMode::Impulsive => self.theta == 0.0 || self.n_k == 0,
            KickMode::Continuous => self.rate() == 0.0,
        }
    }
}

/// `N_S * N_A` unit-coefficient strings `P^S_i sigma^A_j`.
///
/// Each qubit carries one fixed label, so every pair of strings commutes.
pub fn build_kick_generator(spec: &KickSpec, register: &QubitRegister) -> Result<Vec<PauliString>> {
    if register.n_ancilla() == 0 {
        return Err(Error::Config("kicks need at least one ancilla qubit".into()));
    }
    if spec.ancilla_axis == Pauli::XY {
        return Err(Error::Config("ancilla kick axis must be X, Y or Z".into()));
    }
    let mut out = Vec::with_capacity(register.n_system() * register.n_ancilla());
    for i in 0..register.n_system() {
        for j in 0..register.n_ancilla() {
            out.push(PauliString::pair(
                1.0,
                i,
                spec.system_axis,
                register.ancilla_qubit(j),
                spec.ancilla_axis,
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NnTfim,
    IlrTfim,
    H2,
}

/// Model parameters as read from an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub n_system: usize,
    pub n_ancilla: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_xx0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bond_length: Option<f64>,
    /// Explicit H2 coefficient table, overriding the embedded dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_file: Option<PathBuf>,
    pub theta_mixer0: f64,
    pub tau: f64,
    pub kick: KickSpec,
}

impl ModelConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.n_system == 0 {
            bad.push("model.n_system must be >= 1".into());
        }
        if self.n_system + self.n_ancilla > crate::pauli::MAX_QUBITS {
            bad.push(format!("model register exceeds {} qubits", crate::pauli::MAX_QUBITS));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            bad.push("model.tau must be > 0".into());
        }
        if !(self.theta_mixer0 > 0.0) || !self.theta_mixer0.is_finite() {
            bad.push("model.theta_mixer0 must be > 0".into());
        }
        match self.model {
            ModelKind::NnTfim | ModelKind::IlrTfim => {
                if self.n_system < 2 {
                    bad.push("model.n_system must be >= 2 for TFIM (no bonds)".into());
                }
                match self.theta_xx0 {
                    Some(j) if j > 0.0 && j.is_finite() => {}
                    Some(_) => bad.push("model.theta_xx0 must be > 0".into()),
                    None => bad.push("model.theta_xx0 is required for TFIM models".into()),
                }
                if self.bond_length.is_some() {
                    bad.push("model.bond_length only applies to h2".into());
                }
                if self.coefficients_file.is_some() {
                    bad.push("model.coefficients_file only applies to h2".into());
                }
            }
            ModelKind::H2 => {
                if self.n_system != 2 {
                    bad.push("model.n_system must be 2 for h2".into());
                }
                if self.theta_xx0.is_some() {
                    bad.push("model.theta_xx0 only applies to TFIM models".into());
                }
                if self.bond_length.is_none() && self.coefficients_file.is_none() {
                    bad.push("model.bond_length or model.coefficients_file is required for h2".into());
                }
            }
        }
        bad.extend(self.kick.validate());
        bad
    }

    pub fn register(&self) -> Result<QubitRegister> {
        QubitRegister::new(self.n_system, self.n_ancilla)
    }
}

/// A built model: Hamiltonian, initial state and bond count of the problem
/// Hamiltonian.
#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ModelKind,
    pub hamiltonian: ScheduledHamiltonian,
    pub initial: StateVector,
    pub n_bonds: usize,
}

pub fn build(cfg: &ModelConfig) -> Result<Model> {
    match cfg.model {
        ModelKind::NnTfim => build_nn_tfim(cfg),
        ModelKind::IlrTfim => build_ilr_tfim(cfg),
        ModelKind::H2 => build_h2(cfg),
    }
}

fn tfim_common(cfg: &ModelConfig) -> Result<(QubitRegister, f64, ScheduledHamiltonian, StateVector)> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let register = cfg.register()?;
    let theta_xx0 = cfg.theta_xx0.expect("validated");
    let mut h = ScheduledHamiltonian::new(register);
    let mixer = Schedule::exp_decay(cfg.theta_mixer0, cfg.tau)?;
    for i in 0..register.n_system() {
        h.push(mixer, PauliString::single(1.0, i, Pauli::Z), TermRole::Mixer)?;
    }
    // |1> on every system qubit, |0> on every ancilla
    let initial = StateVector::basis(register, register.system_dim() - 1);
    Ok((register, theta_xx0, h, initial))
}

/// Open-chain nearest-neighbour TFIM:
/// `theta_Z0 e^{-t/tau} sum Z_i - theta_XX0 sum_<i,i+1> X_i X_{i+1}`.
pub fn build_nn_tfim(cfg: &ModelConfig) -> Result<Model> {
    let (register, theta_xx0, mut h, initial) = tfim_common(cfg)?;
    let n = register.n_system();
    for i in 0..n - 1 {
        h.push(
            Schedule::constant(-theta_xx0),
            PauliString::pair(1.0, i, Pauli::X, i + 1, Pauli::X),
            TermRole::Problem,
        )?;
    }
    Ok(Model { kind: ModelKind::NnTfim, hamiltonian: h, initial, n_bonds: n - 1 })
}

/// All-to-all TFIM with the coupling rescaled by `0.5 N_S` so that the bond
/// sum has the same weight as the open chain.
pub fn build_ilr_tfim(cfg: &ModelConfig) -> Result<Model> {
    let (register, theta_xx0, mut h, initial) = tfim_common(cfg)?;
    let n = register.n_system();
    let coupling = theta_xx0 / (0.5 * n as f64);
    for i in 0..n {
        for j in i + 1..n {
            h.push(
                Schedule::constant(-coupling),
                PauliString::pair(1.0, i, Pauli::X, j, Pauli::X),
                TermRole::Problem,
            )?;
        }
    }
    Ok(Model { kind: ModelKind::IlrTfim, hamiltonian: h, initial, n_bonds: n * (n - 1) / 2 })
}

/// Two-qubit H2 problem Hamiltonian with an `X` mixer; every qubit starts in
/// `|1_x> = (|0> - |1>)/sqrt(2)`.
pub fn build_h2(cfg: &ModelConfig) -> Result<Model> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let register = cfg.register()?;
    let table = match (&cfg.coefficients_file, cfg.bond_length) {
        (Some(path), _) => MolecularCoefficients::parse(&std::fs::read_to_string(path)?)?,
        (None, Some(bond)) => MolecularCoefficients::embedded_h2(bond)?,
        (None, None) => unreachable!("validated"),
    };
    let mut h = ScheduledHamiltonian::new(register);
    let mixer = Schedule::exp_decay(cfg.theta_mixer0, cfg.tau)?;
    for i in 0..register.n_system() {
        h.push(mixer, PauliString::single(1.0, i, Pauli::X), TermRole::Mixer)?;
    }
    for term in table.strings()? {
        if term.span() > register.n_system() {
            return Err(Error::Config(format!("coefficient term {term} exceeds the system register")));
        }
        h.push(Schedule::constant(1.0), term, TermRole::Problem)?;
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let minus = (C64::new(r, 0.0), C64::new(-r, 0.0));
    let initial = StateVector::product(register, &vec![minus; register.n_qubits()])?;
    Ok(Model { kind: ModelKind::H2, hamiltonian: h, initial, n_bonds: 1 })
}

const H2_BOND_0_7: &str = include_str!("../data/h2/bond_0.7.tsv");
const H2_BOND_2_0: &str = include_str!("../data/h2/bond_2.0.tsv");

/// Pauli-label / coefficient table for a molecular Hamiltonian.
///
/// Text format: one `label coefficient` pair per line, whitespace separated,
/// `#` starts a comment. Character `k` of the label is the operator on
/// qubit `k` (`I`, `X`, `Y` or `Z`).
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularCoefficients {
    pub terms: Vec<(String, f64)>,
}

impl MolecularCoefficients {
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(label), Some(value), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Config(format!("coefficient line {}: expected 2 columns", lineno + 1)));
            };
            let value: f64 = value.parse().map_err(|_| {
                Error::Config(format!("coefficient line {}: bad number {value:?}", lineno + 1))
            })?;
            if !label.chars().all(|c| matches!(c, 'I' | 'X' | 'Y' | 'Z')) || label.is_empty() {
                return Err(Error::Config(format!("coefficient line {}: bad label {label:?}", lineno + 1)));
            }
            terms.push((label.to_string(), value));
        }
        if terms.is_empty() {
            return Err(Error::Config("coefficient table is empty".into()));
        }
        Ok(Self { terms })
    }

    /// Embedded H2 table for bond length 0.7 or 2.0 a.u.
    pub fn embedded_h2(bond_length: f64) -> Result<Self> {
        if (bond_length - 0.7).abs() < 1e-9 {
            Self::parse(H2_BOND_0_7)
        } else if (bond_length - 2.0).abs() < 1e-9 {
            Self::parse(H2_BOND_2_0)
        } else {
            Err(Error::Config(format!(
                "no embedded H2 coefficients for bond length {bond_length}; supply coefficients_file"
            )))
        }
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|(l, _)| l == label).map(|&(_, c)| c)
    }

    pub fn strings(&self) -> Result<Vec<PauliString>> {
        self.terms
            .iter()
            .map(|(label, c)| {
                let factors = label.chars().enumerate().filter_map(|(q, ch)| match ch {
                    'X' => Some((q, Pauli::X)),
                    'Y' => Some((q, Pauli::Y)),
                    'Z' => Some((q, Pauli::Z)),
                    _ => None,
                });
                PauliString::new(*c, factors)
            })
            .collect()
    }
}
