//! Complexity of quantum state evolution at desk scale.
//!
//! Given a finite-dimensional Hermitian Hamiltonian, this crate computes
//! two complexity measures of the evolution it generates and the machinery
//! connecting them:
//!
//! - **Spread (Krylov) complexity** `C_K(t)`: the weighted mean position of
//!   the evolving state across the Lanczos chain built from a seed vector,
//!   together with its exact all-time average.
//! - **Nielsen complexity bound** `C_b(t)`: the length of the shortest
//!   constant-velocity unitary curve reaching `exp(-iHt)` under a penalty
//!   metric, reduced to a closest-vector problem on the integer winding
//!   lattice and solved with LLL + Babai / exact enumeration.
//!
//! The two are linked by a single real symmetric matrix `q`: its trace is
//! the all-time-averaged spread complexity, and the same matrix is the
//! lattice metric of the Nielsen bound under the Krylov-adapted penalty
//! schedule. The [`correspondence`] module verifies both identities
//! numerically and emits a machine-readable report.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `qevc` binary for a batch CLI.

pub mod cli;
pub mod config;
pub mod correspondence;
pub mod error;
pub mod krylov;
pub mod lattice;
pub mod models;
pub mod nielsen;

pub(crate) mod eigen;
pub(crate) mod numeric;

pub use error::{Error, Result};
