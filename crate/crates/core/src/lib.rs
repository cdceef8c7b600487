//! Simulation library for the probabilistic-variational formulation of
//! classical and quantum dynamics.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] – grids, the tridiagonal eigensolver, the Cayley time
//!   stepper, Runge–Kutta and a banded LU used by the radial solver.
//! * [`mechanics`] – Hamilton–Jacobi transport of a classical ensemble.
//! * [`hydrodynamics`] – the generalized Madelung system with a diffusion
//!   current.
//! * [`wavefunction`] – the canonical map to complex amplitudes and the
//!   Schrödinger evolution.
//! * [`discrete`] – discrete-configuration (spin-like) quantization.
//! * [`covariant_fields`] – De Donder–Weyl scalar field theory in 1+1 dimensions.
//! * [`quantum_fields`] – vacuum spectra, the space-independent sector and
//!   radially confined solutions.
//! * [`scenario`] – configuration parsing and batch execution behind the
//!   `varq` binary.

pub mod covariant_fields;
pub mod discrete;
pub mod error;
pub mod hydrodynamics;
pub mod mechanics;
pub mod numerics;
pub mod potential;
pub mod quantum_fields;
pub mod scenario;
pub mod wavefunction;

pub use error::{Result, VarqError};
pub use numerics::grid::Grid1D;
pub use numerics::tridiag::TridiagonalOperator;
pub use potential::{MassProfile, Potential};
