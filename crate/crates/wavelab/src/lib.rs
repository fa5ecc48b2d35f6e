//! Numerical laboratory for gravity water waves at low regularity.
//!
//! The crate is organised bottom-up: [`spectral`] fields and Littlewood–Paley
//! blocks, the [`paradiff`] calculus, [`elliptic`] strip solves for the
//! Dirichlet-to-Neumann map and the pressure, [`zakharov`] time evolution,
//! [`hamiltonian`] ray tracing, [`packets`] and the [`dispersive`] measurements.
//! [`io`] writes the run artifacts read by the plotting tools.

pub mod dispersive;
pub mod elliptic;
pub mod error;
pub mod fit;
pub mod hamiltonian;
pub mod io;
pub mod packets;
pub mod paradiff;
pub mod spectral;
pub mod zakharov;

pub use error::{Error, Result};
