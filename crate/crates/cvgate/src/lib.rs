//! Simulation of conditional X-gates on a quantum oscillator.
//!
//! A single-photon ancilla is coupled to the oscillator by a beam splitter or a
//! QND interaction and then measured; post-selection leaves the oscillator
//! transformed by `1 + λ₋a + λ₊a†`. The crate provides the truncated Fock-space
//! machinery, exact two-mode oracles, analytic Kraus operators, polynomial
//! synthesis of nonlinear gates, state preparation and fidelity benchmarks.

pub mod benchmarks;
pub mod couplings;
pub mod error;
pub mod fock;
pub mod poly;
pub mod quadrature;
pub mod stateprep;
pub mod synthesis;
pub mod xgate;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
