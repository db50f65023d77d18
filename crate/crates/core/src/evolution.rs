//! Real-time propagation with impulsive or continuous kicks, and the
//! ground-state oracles.
//!
//! The propagator is a symmetric second-order splitting over groups of
//! mutually commuting strings. Inside a group every string squares to the
//! identity, so the group exponential is an exact product of
//! `cos a - i sin a P` rotations. All diagonal strings share one group and are
//! applied as a single phase pass. Schedules are evaluated at the step
//! midpoint.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{build_kick_generator, KickMode, KickSpec, Model, Schedule, ScheduledHamiltonian, TermRole};
use crate::observables::{time_to_solution, Observers, RunResult};
use crate::pauli::{self, Masks, PauliString, QubitRegister, StateVector};

/// Maximum tolerated drift of `<psi|psi>` during a run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl EvolutionParams {
    /// Fill unset fields with defaults: `dt` from [`default_dt`] (snapped to
    /// divide the kick interval), `t_end = 10 tau` (extended to cover the last
    /// kick), stride 1.
    pub fn resolve(
        h: &ScheduledHamiltonian,
        kick: &KickSpec,
        dt: Option<f64>,
        t_end: Option<f64>,
        record_stride: Option<usize>,
    ) -> Result<Self> {
        let tau = h.mixer_tau().unwrap_or(1.0);
        let mut dt = dt.unwrap_or_else(|| default_dt(h, kick));
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        if kick_grid_active(kick) {
            if dt > kick.dt_k {
                return Err(Error::Config(format!(
                    "dt = {dt} exceeds the kick interval {}",
                    kick.dt_k
                )));
            }
            let per_kick = (kick.dt_k / dt - 1e-9).ceil();
            dt = kick.dt_k / per_kick;
        }
        let t_end = t_end.unwrap_or(10.0 * tau).max(kick.last_kick_time());
        let params = Self { dt, t_end, record_stride: record_stride.unwrap_or(1) };
        params.validate(kick)?;
        Ok(params)
    }

    pub fn validate(&self, kick: &KickSpec) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if kick_grid_active(kick) {
            steps_per_kick(self.dt, kick.dt_k)?;
            if self.t_end < kick.last_kick_time() - 1e-12 {
                return Err(Error::Config(format!(
                    "t_end = {} ends before the last kick at {}",
                    self.t_end,
                    kick.last_kick_time()
                )));
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

fn kick_grid_active(kick: &KickSpec) -> bool {
    kick.mode == KickMode::Impulsive && kick.n_k > 1 && !kick.is_trivial()
}

fn steps_per_kick(dt: f64, dt_k: f64) -> Result<usize> {
    let ratio = dt_k / dt;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Config(format!(
            "kick interval {dt_k} is not a whole number of steps of {dt}"
        )));
    }
    Ok(m as usize)
}

/// `min(dt_k / 4, tau / 2000, 1e-3 / theta_max)`; the kick term only enters
/// when impulsive kicks are active.
pub fn default_dt(h: &ScheduledHamiltonian, kick: &KickSpec) -> f64 {
    let mut dt = f64::INFINITY;
    if kick_grid_active(kick) {
        dt = dt.min(kick.dt_k / 4.0);
    }
    if let Some(tau) = h.mixer_tau() {
        dt = dt.min(tau / 2000.0);
    }
    let mut theta_max = h.max_coefficient();
    if kick.mode == KickMode::Continuous {
        let na = h.register().n_ancilla() as f64;
        theta_max = theta_max.max(kick.rate().abs() * na);
    }
    if theta_max > 0.0 {
        dt = dt.min(1e-3 / theta_max);
    }
    if dt.is_finite() {
        dt
    } else {
        1e-3
    }
}

enum Group {
    /// Diagonal strings: one pass of `exp(-i E(b) dt)`.
    Diagonal(Vec<usize>),
    /// Mutually commuting off-diagonal strings, applied one rotation at a time.
    Rotations(Vec<usize>),
}

/// Precompiled splitting for one scheduled Hamiltonian.
pub struct Propagator {
    register: QubitRegister,
    terms: Vec<(Schedule, f64, Masks)>,
    groups: Vec<Group>,
}

impl Propagator {
    pub fn new(h: &ScheduledHamiltonian) -> Self {
        let terms = h.terms();
        let mut groups: Vec<Group> = Vec::new();
        let diag: Vec<usize> = (0..terms.len()).filter(|&k| terms[k].string.is_diagonal()).collect();
        if !diag.is_empty() {
            groups.push(Group::Diagonal(diag));
        }
        // Greedy commuting partition of the rest, never mixing roles.
        let mut open: Vec<(TermRole, Vec<usize>)> = Vec::new();
        for (k, term) in terms.iter().enumerate() {
            if term.string.is_diagonal() {
                continue;
            }
            let slot = open.iter_mut().find(|(role, members)| {
                *role == term.role
                    && members.iter().all(|&m| terms[m].string.commutes_with(&term.string))
            });
            match slot {
                Some((_, members)) => members.push(k),
                None => open.push((term.role, vec![k])),
            }
        }
        groups.extend(open.into_iter().map(|(_, members)| Group::Rotations(members)));
        Self {
            register: *h.register(),
            terms: terms.iter().map(|t| (t.schedule, t.string.coeff(), t.string.masks())).collect(),
            groups,
        }
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    fn apply_group(&self, group: &Group, amps: &mut [C64], t: f64, tau: f64) {
        match group {
            Group::Diagonal(members) => {
                let coeffs: Vec<(f64, Masks)> = members
                    .iter()
                    .map(|&k| {
                        let (s, c, m) = &self.terms[k];
                        (s.value(t) * c * tau, *m)
                    })
                    .collect();
                apply_diagonal(amps, &coeffs);
            }
            Group::Rotations(members) => {
                for &k in members {
                    let (s, c, m) = &self.terms[k];
                    pauli::rotate_masks(amps, m, s.value(t) * c * tau);
                }
            }
        }
    }

    /// One symmetric step from `t` to `t + dt`, schedules at `t + dt/2`.
    pub fn step(&self, state: &mut StateVector, t: f64, dt: f64) {
        debug_assert_eq!(state.register(), &self.register);
        let mid = t + 0.5 * dt;
        let amps = state.amplitudes_mut();
        let n = self.groups.len();
        if n == 0 {
            return;
        }
        for g in &self.groups[..n - 1] {
            self.apply_group(g, amps, mid, 0.5 * dt);
        }
        self.apply_group(&self.groups[n - 1], amps, mid, dt);
        for g in self.groups[..n - 1].iter().rev() {
            self.apply_group(g, amps, mid, 0.5 * dt);
        }
    }
}

fn apply_diagonal(amps: &mut [C64], coeffs: &[(f64, Masks)]) {
    use rayon::prelude::*;
    let f = |(b, a): (usize, &mut C64)| {
        let e: f64 = coeffs.iter().map(|(c, m)| c * m.phase(b).re).sum();
        *a *= C64::from_polar(1.0, -e);
    };
    if amps.len() >= 1 << 14 {
        amps.par_iter_mut().enumerate().for_each(f);
    } else {
        amps.iter_mut().enumerate().for_each(f);
    }
}

/// One second-order step of `h` from `t` to `t + dt`, returned as a new state.
pub fn trotter_step(state: &StateVector, h: &ScheduledHamiltonian, t: f64, dt: f64) -> StateVector {
    let mut out = state.clone();
    Propagator::new(h).step(&mut out, t, dt);
    out
}

/// Precompiled impulsive kick unitary.
pub struct KickOperator {
    theta: f64,
    generator: Vec<PauliString>,
}

impl KickOperator {
    pub fn new(spec: &KickSpec, register: &QubitRegister) -> Result<Self> {
        let generator = build_kick_generator(spec, register)?;
        for (a, p) in generator.iter().enumerate() {
            if generator[a + 1..].iter().any(|q| !p.commutes_with(q)) {
                return Err(Error::Internal(format!("kick generator term {p} fails to commute")));
            }
        }
        Ok(Self { theta: spec.theta, generator })
    }

    pub fn generator(&self) -> &[PauliString] {
        &self.generator
    }

    /// `prod_k (cos theta - i sin theta G_k)`, the exact exponential of the
    /// commuting sum.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if self.theta == 0.0 {
            return Ok(());
        }
        for p in &self.generator {
            state.rotate(p, self.theta)?;
        }
        Ok(())
    }
}

/// `exp(-i theta (sum_l sigma^A_l) (x) (sum_i P^S_i)) |state>`.
pub fn apply_kick(state: &StateVector, spec: &KickSpec) -> Result<StateVector> {
    if spec.mode != KickMode::Impulsive {
        return Err(Error::Config("apply_kick needs an impulsive kick spec".into()));
    }
    let mut out = state.clone();
    KickOperator::new(spec, state.register())?.apply(&mut out)?;
    Ok(out)
}

/// Add `rate * generator` as constant-schedule kick terms.
pub fn with_continuous_kick(h: &ScheduledHamiltonian, spec: &KickSpec) -> Result<ScheduledHamiltonian> {
    let mut out = h.clone();
    for p in build_kick_generator(spec, h.register())? {
        out.push(Schedule::constant(spec.rate()), p, TermRole::Kick)?;
    }
    Ok(out)
}

/// Step the model's initial state through `params`, calling `visit` at every
/// step boundary (after any kick due at that instant). Returns the final
/// state.
fn drive(
    model: &Model,
    kick: &KickSpec,
    params: &EvolutionParams,
    mut visit: impl FnMut(usize, usize, f64, &StateVector) -> Result<()>,
) -> Result<StateVector> {
    params.validate(kick)?;
    let register = *model.hamiltonian.register();
    let active = !kick.is_trivial();

    let propagator = match kick.mode {
        KickMode::Continuous if active => Propagator::new(&with_continuous_kick(&model.hamiltonian, kick)?),
        _ => Propagator::new(&model.hamiltonian),
    };
    let (kick_op, kick_stride) = match kick.mode {
        KickMode::Impulsive if active => {
            let stride = if kick.n_k > 1 { steps_per_kick(params.dt, kick.dt_k)? } else { 1 };
            (Some(KickOperator::new(kick, &register)?), stride)
        }
        _ => (None, 1),
    };

    let n_steps = params.n_steps();
    let mut state = model.initial.clone();
    let mut kicks_done = 0usize;
    for n in 0..=n_steps {
        let t = n as f64 * params.dt;
        if let Some(op) = &kick_op {
            while kicks_done < kick.n_k && kicks_done * kick_stride == n {
                op.apply(&mut state)?;
                kicks_done += 1;
            }
        }
        visit(n, n_steps, t, &state)?;
        if n < n_steps {
            propagator.step(&mut state, t, params.dt);
        }
    }
    Ok(state)
}

/// Evolve the model's initial state under its Hamiltonian with the given
/// kicks, recording observables every `record_stride` steps and at the end.
///
/// Impulsive kicks fire at step boundaries, before the record at that
/// instant. Continuous kicks enter the splitting as their own group for the
/// whole run.
pub fn evolve_run(
    model: &Model,
    kick: &KickSpec,
    params: &EvolutionParams,
    observers: &Observers,
) -> Result<RunResult> {
    let mut result = RunResult::empty(observers.e_target, observers.ghz_fidelity);
    drive(model, kick, params, |n, n_steps, t, state| {
        if n % params.record_stride != 0 && n != n_steps {
            return Ok(());
        }
        let drift = (state.norm_sqr() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Numerical(format!(
                "norm drift {drift:e} at t = {t} (step {n} of {n_steps}, dt = {})",
                params.dt
            )));
        }
        result.record(t, state, &model.hamiltonian, observers)
    })?;
    if let Some(eps) = observers.epsilon {
        result.t_star = time_to_solution(&result, eps, observers.e_target)?;
    }
    Ok(result)
}

/// Same stepping as [`evolve_run`], returning only the final state.
pub fn evolve_state(model: &Model, kick: &KickSpec, params: &EvolutionParams) -> Result<StateVector> {
    drive(model, kick, params, |_, _, _, _| Ok(()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleBackend {
    Dense,
    ImaginaryTime,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// One vector from the ground manifold; not unique when degenerate.
    pub state: StateVector,
    pub backend: OracleBackend,
}

/// Largest system register the ground-state oracle accepts.
pub const MAX_ORACLE_QUBITS: usize = 12;

/// Ground energy of a system-only Hamiltonian.
///
/// The imaginary-time backend iterates `psi <- normalize((1 - dbeta H) psi)`
/// from a seeded random vector, stopping once the energy moves less than
/// `1e-12` per sweep and the residual `|H psi - E psi|` is below `1e-7`. If it
/// does not converge the dense backend is used instead.
pub fn ground_state_oracle(
    h_problem: &[PauliString],
    n_system: usize,
    backend: OracleBackend,
    seed: u64,
) -> Result<GroundState> {
    if n_system > MAX_ORACLE_QUBITS {
        return Err(Error::Config(format!(
            "ground-state oracle is limited to {MAX_ORACLE_QUBITS} qubits, got {n_system}"
        )));
    }
    let register = QubitRegister::new(n_system, 0)?;
    if let Some(p) = h_problem.iter().find(|p| p.span() > n_system) {
        return Err(Error::Config(format!("term {p} acts outside the system register")));
    }
    match backend {
        OracleBackend::Dense => dense_ground(h_problem, register),
        OracleBackend::ImaginaryTime => match imaginary_time_ground(h_problem, register, seed, 2_000_000) {
            Ok(g) => Ok(g),
            Err(e) => {
                log::warn!("imaginary-time oracle failed ({e}); falling back to dense diagonalization");
                dense_ground(h_problem, register)
            }
        },
    }
}

fn dense_ground(h: &[PauliString], register: QubitRegister) -> Result<GroundState> {
    // Columns from the matrix-free kernel so the oracle reaches 12 qubits.
    let dim = register.dim();
    let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for b in 0..dim {
        let col = StateVector::basis(register, b).apply_sum(h)?;
        for (r, a) in col.amplitudes().iter().enumerate() {
            m[(r, b)] = *a;
        }
    }
    let (energy, vec) = pauli::dense_ground_state(&m);
    Ok(GroundState {
        energy,
        state: StateVector::from_amplitudes(register, vec)?,
        backend: OracleBackend::Dense,
    })
}

fn imaginary_time_ground(
    h: &[PauliString],
    register: QubitRegister,
    seed: u64,
    max_sweeps: usize,
) -> Result<GroundState> {
    let bound: f64 = h.iter().map(|p| p.coeff().abs()).sum();
    if bound == 0.0 {
        let state = StateVector::zero(register);
        return Ok(GroundState { energy: 0.0, state, backend: OracleBackend::ImaginaryTime });
    }
    let dbeta = 1.0 / bound;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..register.dim())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut psi = StateVector::from_amplitudes(register, amps)?;
    psi.normalize();
    let mut energy = f64::INFINITY;
    for _ in 0..max_sweeps {
        let hpsi = psi.apply_sum(h)?;
        let e = psi.inner(&hpsi).re;
        let residual: f64 = hpsi
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(hp, p)| (hp - p * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (energy - e).abs() < 1e-12 && residual < 1e-7 {
            return Ok(GroundState { energy: e, state: psi, backend: OracleBackend::ImaginaryTime });
        }
        energy = e;
        let next: Vec<C64> = psi
            .amplitudes()
            .iter()
            .zip(hpsi.amplitudes())
            .map(|(p, hp)| p - hp * dbeta)
            .collect();
        psi = StateVector::from_amplitudes(register, next)?;
        psi.normalize();
    }
    Err(Error::Numerical(format!("imaginary-time iteration did not converge in {max_sweeps} sweeps")))
}
