//! Multiscale infrared cascade for the spin-boson model.
//!
//! The photon field is split into geometric momentum shells. Each cutoff
//! Hamiltonian is assembled on a truncated Fock space, its ground state and
//! gap are computed, and the inequalities relating consecutive scales are
//! measured and checked.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fock;
pub mod model;
pub mod multiscale;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
pub use fock::{enumerate_basis, FockBasis, OccupationState};
pub use model::{ModelParams, Profile};
pub use multiscale::{run_cascade, run_cascade_with, BoundCheck, CascadeOptions, CascadeReport, ScaleRecord};
pub use operator::{SparseOperator, C64};
