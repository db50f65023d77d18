//! Register layout, Pauli strings and the matrix-free amplitude kernels.
//!
//! Basis indices are little-endian: qubit 0 is the least-significant bit.
//! System qubits occupy the low bits `0..n_system`, ancillas the bits above
//! them, so tracing out the ancillas sums over contiguous blocks of length
//! `2^n_system`. `Z|0> = +|0>`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the state-vector kernels accept.
pub const MAX_QUBITS: usize = 24;
/// Largest register the dense oracle will build.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Amplitude count above which kernels split work across threads.
const PAR_THRESHOLD: usize = 1 << 14;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };
/// `(-i)^k` for `k = 0..4`.
const NEG_I_POW: [C64; 4] = [
    C64 { re: 1.0, im: 0.0 },
    C64 { re: 0.0, im: -1.0 },
    C64 { re: -1.0, im: 0.0 },
    C64 { re: 0.0, im: 1.0 },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitRegister {
    n_system: usize,
    n_ancilla: usize,
}

impl QubitRegister {
    pub fn new(n_system: usize, n_ancilla: usize) -> Result<Self> {
        if n_system == 0 {
            return Err(Error::Config("register needs at least one system qubit".into()));
        }
        if n_system + n_ancilla > MAX_QUBITS {
            return Err(Error::Config(format!(
                "register of {} qubits exceeds the {MAX_QUBITS}-qubit cap",
                n_system + n_ancilla
            )));
        }
        Ok(Self { n_system, n_ancilla })
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }

    pub fn n_qubits(&self) -> usize {
        self.n_system + self.n_ancilla
    }

    /// Total amplitude count `2^(N_S + N_A)`.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn system_dim(&self) -> usize {
        1 << self.n_system
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.n_ancilla
    }

    /// Qubit index of ancilla `j`.
    pub fn ancilla_qubit(&self, j: usize) -> usize {
        self.n_system + j
    }

    /// The system-only register with the same number of system qubits.
    pub fn system_only(&self) -> Self {
        Self { n_system: self.n_system, n_ancilla: 0 }
    }
}

/// Single-qubit operator label. `XY` is `(X + Y)/sqrt(2)`, which squares to
/// the identity like the three Paulis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
    XY,
}

impl Pauli {
    /// Dense 2x2 matrix, row index = output bit.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Pauli::XY => [[ZERO, C64::new(r, -r)], [C64::new(r, r), ZERO]],
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "X" => Some(Pauli::X),
            "Y" => Some(Pauli::Y),
            "Z" => Some(Pauli::Z),
            "XY" => Some(Pauli::XY),
            _ => None,
        }
    }

    /// `Some(true)` if the two labels commute, `Some(false)` if they
    /// anticommute, `None` if neither (`XY` against `X` or `Y`).
    fn local_commutation(self, other: Pauli) -> Option<bool> {
        use Pauli::*;
        match (self, other) {
            (a, b) if a == b => Some(true),
            (XY, Z) | (Z, XY) => Some(false),
            (XY, _) | (_, XY) => None,
            _ => Some(false),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
            Pauli::XY => "XY",
        };
        f.write_str(s)
    }
}

/// A real coefficient times a tensor product of single-qubit labels.
///
/// Factors are kept sorted by qubit index with no repeats. An empty factor
/// list is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    coeff: f64,
    factors: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn new(coeff: f64, factors: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut factors: Vec<(usize, Pauli)> = factors.into_iter().collect();
        factors.sort_by_key(|&(q, _)| q);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("Pauli string repeats a qubit index".into()));
        }
        if factors.iter().any(|&(q, _)| q >= MAX_QUBITS) {
            return Err(Error::Config(format!("qubit index exceeds {MAX_QUBITS}")));
        }
        Ok(Self { coeff, factors })
    }

    pub fn identity(coeff: f64) -> Self {
        Self { coeff, factors: Vec::new() }
    }

    pub fn single(coeff: f64, qubit: usize, p: Pauli) -> Self {
        Self { coeff, factors: vec![(qubit, p)] }
    }

    /// Two-qubit string; panics if `qa == qb`.
    pub fn pair(coeff: f64, qa: usize, pa: Pauli, qb: usize, pb: Pauli) -> Self {
        assert_ne!(qa, qb, "pair string needs distinct qubits");
        let mut factors = vec![(qa, pa), (qb, pb)];
        factors.sort_by_key(|&(q, _)| q);
        Self { coeff, factors }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn with_coeff(&self, coeff: f64) -> Self {
        Self { coeff, factors: self.factors.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// True when the string only has `Z` factors (diagonal in the
    /// computational basis).
    pub fn is_diagonal(&self) -> bool {
        self.factors.iter().all(|&(_, p)| p == Pauli::Z)
    }

    /// Number of qubits the string needs, i.e. highest index + 1.
    pub fn span(&self) -> usize {
        self.factors.last().map_or(0, |&(q, _)| q + 1)
    }

    pub fn supported_on_system(&self, register: &QubitRegister) -> bool {
        self.span() <= register.n_system()
    }

    /// True only when commutation is certain. Strings pairing `XY` with `X`
    /// or `Y` on a shared qubit are reported as non-commuting.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut anti = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (qa, pa) = self.factors[i];
            let (qb, pb) = other.factors[j];
            if qa < qb {
                i += 1;
            } else if qb < qa {
                j += 1;
            } else {
                match pa.local_commutation(pb) {
                    Some(true) => {}
                    Some(false) => anti += 1,
                    None => return false,
                }
                i += 1;
                j += 1;
            }
        }
        anti.is_multiple_of(2)
    }

    pub(crate) fn masks(&self) -> Masks {
        let mut m = Masks { flip: 0, sign: 0, xy: 0, global: ONE };
        let mut n_y = 0u32;
        let mut n_xy = 0u32;
        for &(q, p) in &self.factors {
            let bit = 1usize << q;
            match p {
                Pauli::X => m.flip |= bit,
                Pauli::Y => {
                    m.flip |= bit;
                    m.sign |= bit;
                    n_y += 1;
                }
                Pauli::Z => m.sign |= bit,
                Pauli::XY => {
                    m.flip |= bit;
                    m.xy |= bit;
                    n_xy += 1;
                }
            }
        }
        // Y = i (-1)^b on the flipped bit; XY = e^{i pi/4} (-i)^b.
        m.global = I.powu(n_y) * C64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * n_xy as f64);
        m
    }

    fn check_register(&self, register: &QubitRegister) -> Result<()> {
        if self.span() > register.n_qubits() {
            return Err(Error::Config(format!(
                "Pauli string touches qubit {} but the register has {} qubits",
                self.span() - 1,
                register.n_qubits()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        if self.factors.is_empty() {
            return f.write_str(" I");
        }
        for (q, p) in &self.factors {
            write!(f, " {p}{q}")?;
        }
        Ok(())
    }
}

/// Bitmask form of a string: `P|b> = phase(b) |b ^ flip>`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Masks {
    pub flip: usize,
    sign: usize,
    xy: usize,
    global: C64,
}

impl Masks {
    #[inline]
    pub fn phase(&self, b: usize) -> C64 {
        let k = ((b & self.xy).count_ones() & 3) as usize;
        let ph = self.global * NEG_I_POW[k];
        if (b & self.sign).count_ones() & 1 == 1 {
            -ph
        } else {
            ph
        }
    }
}

/// Rotate amplitudes in place by `exp(-i angle P)` where `P` is the bitmask
/// operator (unit coefficient) and `P^2 = I`.
pub(crate) fn rotate_masks(amps: &mut [C64], m: &Masks, angle: f64) {
    let (s, c) = angle.sin_cos();
    if m.flip == 0 {
        let f = |(b, a): (usize, &mut C64)| *a *= C64::new(c, 0.0) - I * s * m.phase(b);
        if amps.len() >= PAR_THRESHOLD {
            amps.par_iter_mut().enumerate().for_each(f);
        } else {
            amps.iter_mut().enumerate().for_each(f);
        }
        return;
    }
    let top = usize::BITS - 1 - m.flip.leading_zeros();
    let half = 1usize << top;
    let flip_lo = m.flip ^ half;
    let minus_is = C64::new(0.0, -s);
    #[allow(clippy::needless_range_loop)]
    let kernel = |(k, chunk): (usize, &mut [C64])| {
        let base = k * 2 * half;
        let (lo, hi) = chunk.split_at_mut(half);
        for i in 0..half {
            let j = i ^ flip_lo;
            let b = base + i;
            let bp = base + half + j;
            let a = lo[i];
            let ap = hi[j];
            lo[i] = a * c + minus_is * m.phase(bp) * ap;
            hi[j] = ap * c + minus_is * m.phase(b) * a;
        }
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * half).enumerate().for_each(kernel);
    } else {
        amps.chunks_mut(2 * half).enumerate().for_each(kernel);
    }
}

/// `<psi| P |psi>` for the bitmask operator with unit coefficient.
pub(crate) fn masked_expectation(amps: &[C64], m: &Masks) -> C64 {
    let term = |(b, a): (usize, &C64)| a.conj() * m.phase(b ^ m.flip) * amps[b ^ m.flip];
    if amps.len() >= PAR_THRESHOLD {
        amps.par_iter().enumerate().map(term).sum()
    } else {
        amps.iter().enumerate().map(term).sum()
    }
}

/// Pure state over the full system-plus-ancilla register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    register: QubitRegister,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(register: QubitRegister) -> Self {
        Self::basis(register, 0)
    }

    pub fn basis(register: QubitRegister, index: usize) -> Self {
        let mut amps = vec![ZERO; register.dim()];
        amps[index] = ONE;
        Self { register, amps }
    }

    pub fn from_amplitudes(register: QubitRegister, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != register.dim() {
            return Err(Error::Config(format!(
                "expected {} amplitudes, got {}",
                register.dim(),
                amps.len()
            )));
        }
        Ok(Self { register, amps })
    }

    /// Tensor product of single-qubit states `(amp0, amp1)`, listed by qubit
    /// index.
    pub fn product(register: QubitRegister, qubits: &[(C64, C64)]) -> Result<Self> {
        if qubits.len() != register.n_qubits() {
            return Err(Error::Config(format!(
                "product state needs {} single-qubit factors, got {}",
                register.n_qubits(),
                qubits.len()
            )));
        }
        let amps = (0..register.dim())
            .map(|b| {
                qubits
                    .iter()
                    .enumerate()
                    .map(|(q, &(a0, a1))| if b >> q & 1 == 0 { a0 } else { a1 })
                    .product()
            })
            .collect();
        Ok(Self { register, amps })
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `coeff * P |self>` as a new state; the input is left untouched.
    pub fn apply_pauli_string(&self, p: &PauliString) -> Result<StateVector> {
        p.check_register(&self.register)?;
        let m = p.masks();
        let coeff = p.coeff();
        let src = &self.amps;
        let f = |j: usize| coeff * m.phase(j ^ m.flip) * src[j ^ m.flip];
        let amps = if src.len() >= PAR_THRESHOLD {
            (0..src.len()).into_par_iter().map(f).collect()
        } else {
            (0..src.len()).map(f).collect()
        };
        Ok(StateVector { register: self.register, amps })
    }

    /// `sum_k h_k |self>`.
    pub fn apply_sum(&self, h: &[PauliString]) -> Result<StateVector> {
        let mut out = vec![ZERO; self.amps.len()];
        for p in h {
            let hp = self.apply_pauli_string(p)?;
            out.iter_mut().zip(hp.amps).for_each(|(o, a)| *o += a);
        }
        Ok(StateVector { register: self.register, amps: out })
    }

    /// In-place `exp(-i angle * coeff * P)`; requires `P^2 = I`, which holds
    /// for every label set here.
    pub fn rotate(&mut self, p: &PauliString, angle: f64) -> Result<()> {
        p.check_register(&self.register)?;
        rotate_masks(&mut self.amps, &p.masks(), angle * p.coeff());
        Ok(())
    }

    /// `<psi|H|psi>` for a real-coefficient sum of strings.
    ///
    /// The state must be normalized; a drift above `1e-8` is reported rather
    /// than renormalized away.
    pub fn expectation(&self, h: &[PauliString]) -> Result<f64> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "expectation on a non-normalized state (norm^2 = {norm})"
            )));
        }
        self.expectation_unchecked(h)
    }

    pub(crate) fn expectation_unchecked(&self, h: &[PauliString]) -> Result<f64> {
        let mut total = ZERO;
        let mut scale = 0.0;
        for p in h {
            p.check_register(&self.register)?;
            total += p.coeff() * masked_expectation(&self.amps, &p.masks());
            scale += p.coeff().abs();
        }
        if total.im.abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::Internal(format!(
                "expectation has imaginary residue {:e}",
                total.im
            )));
        }
        Ok(total.re)
    }

    /// Marginal probability of each system basis state, ancillas summed out.
    pub fn system_probabilities(&self) -> Vec<f64> {
        let ds = self.register.system_dim();
        let mut p = vec![0.0; ds];
        for block in self.amps.chunks(ds) {
            p.iter_mut().zip(block).for_each(|(pi, a)| *pi += a.norm_sqr());
        }
        p
    }

    /// `rho_S = Tr_A |psi><psi|`.
    pub fn partial_trace_ancilla(&self) -> DensityMatrix {
        let ds = self.register.system_dim();
        let mut rho = DMatrix::<C64>::zeros(ds, ds);
        for block in self.amps.chunks(ds) {
            for a in 0..ds {
                if block[a] == ZERO {
                    continue;
                }
                for b in 0..ds {
                    rho[(a, b)] += block[a] * block[b].conj();
                }
            }
        }
        DensityMatrix { entries: rho }
    }
}

/// Reduced system state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() || !entries.nrows().is_power_of_two() {
            return Err(Error::Config("density matrix must be square with power-of-two size".into()));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `Tr(rho H)` for a dense operator of matching size.
    pub fn expectation(&self, h: &DMatrix<C64>) -> C64 {
        (&self.entries * h).trace()
    }

    /// Hermitian within 1e-10, unit trace within 1e-10, eigenvalues at
    /// least -1e-9.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::Numerical(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::Numerical(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::Numerical(format!("density matrix eigenvalue {min:e} < 0")));
        }
        Ok(())
    }
}

/// Explicit `2^n x 2^n` matrix of a string, built by Kronecker products.
pub fn dense_string_matrix(p: &PauliString, n_qubits: usize) -> Result<DMatrix<C64>> {
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::Config(format!(
            "dense oracle refuses {n_qubits} qubits (cap {MAX_DENSE_QUBITS})"
        )));
    }
    if p.span() > n_qubits {
        return Err(Error::Config(format!(
            "string {p} does not fit in {n_qubits} qubits"
        )));
    }
    let eye = DMatrix::<C64>::identity(2, 2);
    let mut out = DMatrix::<C64>::from_element(1, 1, C64::new(p.coeff(), 0.0));
    // Most-significant qubit first so that qubit 0 ends up as the fastest index.
    for q in (0..n_qubits).rev() {
        let local = match p.factors().iter().find(|&&(fq, _)| fq == q) {
            Some(&(_, label)) => {
                let m = label.matrix();
                DMatrix::from_fn(2, 2, |r, c| m[r][c])
            }
            None => eye.clone(),
        };
        out = out.kronecker(&local);
    }
    Ok(out)
}

/// Dense matrix of a sum of strings on `n_qubits` qubits.
pub fn dense_matrix(h: &[PauliString], n_qubits: usize) -> Result<DMatrix<C64>> {
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::Config(format!(
            "dense oracle refuses {n_qubits} qubits (cap {MAX_DENSE_QUBITS})"
        )));
    }
    let dim = 1 << n_qubits;
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for p in h {
        out += dense_string_matrix(p, n_qubits)?;
    }
    Ok(out)
}

/// Lowest eigenvalue and a matching eigenvector of a Hermitian matrix.
pub fn dense_ground_state(h: &DMatrix<C64>) -> (f64, Vec<C64>) {
    let eig = h.clone().symmetric_eigen();
    let (idx, &e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    (e, eig.eigenvectors.column(idx).iter().copied().collect())
}
