//! Light propagation in non-Hermitian zigzag Glauber–Fock waveguide lattices.
//!
//! Two independent solvers share one Hamiltonian convention,
//! `i dΨ/dZ = HΨ`:
//!
//! * [`integrator`] integrates the truncated coupled-mode equations with an
//!   adaptive Runge–Kutta–Fehlberg 4(5) scheme;
//! * [`exact`] evaluates the closed-form propagator built from su(1,1)
//!   disentangling and displaced Laguerre matrix elements.
//!
//! [`su11`] holds the disentangling formulas and the dense matrix-exponential
//! oracles used to check both.

pub mod error;
pub mod exact;
pub mod grid;
pub mod integrator;
pub mod lattice;
pub mod special;
pub mod su11;

pub use error::{Error, Result};
