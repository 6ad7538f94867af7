//! Numerical toolkit for the quantum phase transition of the Rabi model and
//! its realization with a single trapped ion.
//!
//! The crate is organized around the workflow raw sweep -> rescaled
//! observables -> universal curves:
//!
//! - [`fockspace`]: truncated bosonic / spin operators, states, truncation
//!   diagnostics on the composite spin (x) boson space.
//! - [`models`]: the Rabi Hamiltonian, the driven trapped-ion Hamiltonian
//!   (no Lamb-Dicke expansion, no vibrational rotating-wave approximation),
//!   and the parameter maps between the two.
//! - [`spectral`]: dense exact diagonalization with automatic Fock-cutoff
//!   escalation, plus closed-form variational approximations near the
//!   critical point.
//! - [`evolve`]: fixed-step fourth-order integration of the Schrödinger and
//!   Lindblad equations and the linear-ramp quench protocols.
//! - [`scaling`]: rescaling transforms, data-collapse quality metric,
//!   power-law fits and adiabaticity profiling.
//! - [`sweep`]: order-preserving parallel map used to execute grids of
//!   independent points (rayon-backed; a sequential fallback is selected
//!   when the `parallel` feature is disabled).

pub mod error;
pub mod evolve;
pub mod fockspace;
pub mod ion;
pub mod linalg;
pub mod models;
pub mod scaling;
pub mod spectral;
pub mod sweep;

pub use error::{QptError, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
