//! Jump-fugacity deformed Lindblad dynamics of a disordered hard-core-boson
//! chain with alternating gain and loss.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] enumerates occupation bases and builds sparse site operators.
//! * [`model`] builds the disordered Hamiltonian, the jump operators and the
//!   non-Hermitian no-jump Hamiltonian.
//! * [`superop`] assembles the deformed Liouvillian on vectorized density
//!   matrices and exposes its charge-sector blocks.
//! * [`spectra`] computes complex spectra and spacing-ratio statistics.
//! * [`dynamics`] propagates dense density matrices (nonlinear, linear and
//!   jump-resolved) and evaluates observables and counting statistics.
//! * [`mpdo`] implements matrix-product density operators and TEBD.
//! * [`experiments`] drives configurable parameter scans and writes CSV/JSON.

pub mod dynamics;
pub mod ensemble;
mod error;
pub mod experiments;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod mpdo;
pub mod sparse;
pub mod spectra;
pub mod superop;

pub use error::{Error, Result};
pub use fock::{FockBasis, OperatorTerm, SiteOp};
pub use model::{DisorderRealization, ModelParams};
pub use sparse::SparseOperator;
pub use superop::Superoperator;

pub use num_complex::Complex64;
