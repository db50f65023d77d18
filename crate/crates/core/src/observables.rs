//! Recorded quantities and time-to-solution extraction.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ScheduledHamiltonian;
use crate::pauli::StateVector;

/// Which order-parameter probability fills the `order_prob` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderParameter {
    /// Both fully polarized system basis states (TFIM).
    Pfm,
    /// `|01>` and `|10>` (H2).
    OddParity,
}

/// What `evolve_run` records at every stride.
#[derive(Debug, Clone, PartialEq)]
pub struct Observers {
    /// True ground energy `E_S^T` used for the scaled energy and `T*`.
    pub e_target: f64,
    pub order: OrderParameter,
    pub ghz_fidelity: bool,
    /// Relative tolerance for `T*`; `None` skips the extraction.
    pub epsilon: Option<f64>,
}

/// Time series of one run plus its derived time to solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub scaled_energy: Vec<f64>,
    pub p_all0: Vec<f64>,
    pub p_all1: Vec<f64>,
    pub order_prob: Vec<f64>,
    pub fidelity: Option<Vec<f64>>,
    pub norm: Vec<f64>,
    pub t_star: Option<f64>,
    pub e_target: f64,
    #[serde(default)]
    pub config_echo: serde_json::Value,
}

impl RunResult {
    pub fn empty(e_target: f64, with_fidelity: bool) -> Self {
        Self {
            times: Vec::new(),
            energy: Vec::new(),
            scaled_energy: Vec::new(),
            p_all0: Vec::new(),
            p_all1: Vec::new(),
            order_prob: Vec::new(),
            fidelity: with_fidelity.then(Vec::new),
            norm: Vec::new(),
            t_star: None,
            e_target,
            config_echo: serde_json::Value::Null,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.energy.last().copied()
    }

    /// `|E(T) - E_target| / |E_target|` at the last record.
    pub fn final_relative_error(&self) -> Option<f64> {
        self.final_energy().map(|e| (e - self.e_target).abs() / self.e_target.abs())
    }

    /// Record the observables of `state` at time `t`.
    pub fn record(
        &mut self,
        t: f64,
        state: &StateVector,
        h: &ScheduledHamiltonian,
        observers: &Observers,
    ) -> Result<()> {
        let norm = state.norm_sqr();
        let energy = state.expectation_unchecked(&h.system_at(t))? / norm;
        let probs = state.system_probabilities();
        let p0 = probs[0];
        let p1 = probs[probs.len() - 1];
        let order = match observers.order {
            OrderParameter::Pfm => p0 + p1,
            OrderParameter::OddParity => odd_parity_from_probs(&probs)?,
        };
        self.times.push(t);
        self.energy.push(energy);
        self.scaled_energy.push(energy / observers.e_target.abs());
        self.p_all0.push(p0);
        self.p_all1.push(p1);
        self.order_prob.push(order);
        if let Some(f) = self.fidelity.as_mut() {
            f.push(ghz_fidelity(state));
        }
        self.norm.push(norm);
        Ok(())
    }
}

/// `Tr_S(rho_S H_S(t))`, evaluated as the full-state expectation of the
/// mixer and problem terms (kick terms are excluded).
pub fn reduced_energy(state: &StateVector, h: &ScheduledHamiltonian, t: f64) -> Result<f64> {
    let terms = h.system_at(t);
    if let Some(p) = terms.iter().find(|p| !p.supported_on_system(state.register())) {
        return Err(Error::Config(format!("term {p} acts outside the system register")));
    }
    state.expectation(&terms)
}

/// Probability of the two fully polarized system states `|0...0>` and
/// `|1...1>`, ancillas marginalized.
pub fn pfm_probability(state: &StateVector) -> f64 {
    let (p0, p1) = polarized_probabilities(state);
    p0 + p1
}

/// `(P(|0...0>), P(|1...1>))` on the system register.
pub fn polarized_probabilities(state: &StateVector) -> (f64, f64) {
    let ds = state.register().system_dim();
    state.amplitudes().chunks(ds).fold((0.0, 0.0), |(p0, p1), block| {
        (p0 + block[0].norm_sqr(), p1 + block[ds - 1].norm_sqr())
    })
}

/// Weight of `|01>` and `|10>` on a two-qubit system register.
pub fn odd_parity_probability(state: &StateVector) -> Result<f64> {
    odd_parity_from_probs(&state.system_probabilities())
}

fn odd_parity_from_probs(probs: &[f64]) -> Result<f64> {
    if probs.len() != 4 {
        return Err(Error::Config("odd-parity probability needs exactly two system qubits".into()));
    }
    Ok(probs[1] + probs[2])
}

/// `sum_c |(<GHZ| (x) <c|) |psi>|^2` with the X-basis GHZ state
/// `(|+>^N + |->^N)/sqrt(2)`, which has amplitude `2^{(1-N)/2}` on every
/// even-weight computational state and zero elsewhere.
pub fn ghz_fidelity(state: &StateVector) -> f64 {
    let n = state.register().n_system();
    let ds = state.register().system_dim();
    let amp = 2f64.powf((1.0 - n as f64) / 2.0);
    state
        .amplitudes()
        .chunks(ds)
        .map(|block| {
            let overlap: C64 = block
                .iter()
                .enumerate()
                .filter(|(b, _)| b.count_ones() % 2 == 0)
                .map(|(_, a)| *a)
                .sum();
            (overlap * amp).norm_sqr()
        })
        .sum()
}

/// Earliest recorded time after which `|E - e_target| <= epsilon |e_target|`
/// holds for every later record. `None` if the final record already misses.
pub fn time_to_solution(result: &RunResult, epsilon: f64, e_target: f64) -> Result<Option<f64>> {
    time_to_solution_series(&result.times, &result.energy, epsilon, e_target)
}

pub fn time_to_solution_series(
    times: &[f64],
    energy: &[f64],
    epsilon: f64,
    e_target: f64,
) -> Result<Option<f64>> {
    if times.is_empty() || times.len() != energy.len() {
        return Err(Error::Config("time to solution needs a non-empty series".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(e_target < 0.0) {
        return Err(Error::Domain(format!("target energy must be < 0, got {e_target}")));
    }
    let band = epsilon * e_target.abs();
    let mut start = None;
    for (&t, &e) in times.iter().zip(energy).rev() {
        if (e - e_target).abs() <= band {
            start = Some(t);
        } else {
            break;
        }
    }
    Ok(start)
}
