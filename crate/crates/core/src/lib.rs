//! Finite element solver for the extended Maxwell viscoelastic model.
//!
//! The displacement `u` is continuous piecewise linear (P1) and the
//! viscous strain `phi` is piecewise constant (P0). Each backward Euler step
//! solves one symmetric positive definite elasticity system with the
//! effective tensor `C(I - D^{-1}C)` and then updates `phi` explicitly on
//! every triangle. The scheme dissipates the energy
//! `E(u, phi) = 1/2 ||e[u] - phi||_C^2 + alpha/2 ||phi||^2 - l(u)` exactly;
//! [`diagnostics`] and [`verify`] check that numerically.

pub mod assembly;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod output;
pub mod solver;
pub mod space;
pub mod stepper;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::{build_unit_square, BoundaryLabel, DiagonalPattern, Mesh};
pub use space::{AffineMap, BoundaryData, FieldP0, FieldP1};
pub use stepper::{equilibrium_solve, run, run_with, Problem, RunConfig, RunResult, SimulationState, TimeStepper};
pub use tensor::{Material, StepParams, SymTensor2};
