//! Kicked quantum annealing on small spin registers.

// `!(x > 0.0)` is deliberate: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod experiment;
pub mod models;
pub mod observables;
pub mod pauli;
pub mod theory;

pub use error::{Error, Result};
pub use pauli::{DensityMatrix, Pauli, PauliString, QubitRegister, StateVector};
