//! Discretization and linear-algebra building blocks shared by the physics
//! modules.

pub mod banded;
pub mod grid;
pub mod ode;
pub mod tridiag;

pub use grid::{build_grid, Grid1D};
pub use ode::rk4_step;
pub use tridiag::{eigensolve_lowest, unitary_step, CayleyStepper, EigenPair, TridiagonalOperator};
