//! Axisymmetric vortex rings without swirl.
//!
//! The crate evaluates the stream-function kernel, solves for stream
//! functions and velocities on a cell-centred half-plane grid, computes the
//! conserved functionals, finds steady rings as constrained energy
//! maximizers, and advects vorticity with a semi-Lagrangian scheme.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod error;
pub mod evolve;
pub mod fields;
pub mod functionals;
pub mod hill;
pub mod kernel;
pub mod maximize;
pub mod rearrange;
pub mod snapshot;
pub mod sum;
pub mod wan;

pub use error::{Error, Result};
pub use fields::{AxiGrid, ScalarField, StreamSolver, VorticityField};
pub use hill::HillParams;
pub use kernel::KernelEval;
