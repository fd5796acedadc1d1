//! Kinetic Langevin Monte Carlo on SO(n).
//!
//! The crate is `no_std` with `alloc`. It holds the group arithmetic, potentials,
//! the splitting sampler, the convergence-theory constants, a coupling simulator
//! and the statistical oracles used to check them. File formats and the command
//! line live in the `klmc` crate.

#![no_std]

extern crate alloc;

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod group;
pub mod linalg;
pub mod potential;
pub mod quadrature;
pub mod sampler;
pub mod theory;

pub use error::{Error, Result};
