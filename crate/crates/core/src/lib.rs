//! Implicit staggered upwind scheme for the 1D compressible Navier-Stokes
//! equations with a barotropic pressure law, plus the discrete identities,
//! norms and refinement studies used to verify it.

#![allow(clippy::needless_range_loop)]

pub mod banded;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod operators;
pub mod output;
pub mod quadrature;
pub mod stepper;

pub use error::{ConfigError, Error, Result, StepFailure};
pub use grid::{init_state, FluidState, GridSpec, PhysParams, Profile, ProfileSpec, StepMeta, Trajectory};
pub use stepper::{advance, run, SolverConfig};
