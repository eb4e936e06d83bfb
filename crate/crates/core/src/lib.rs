//! Deterministic automata, the quantum Hamiltonians that generate them, and
//! numerical cross-checks between the two pictures.

#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod bch;
pub mod bell;
pub mod cogwheel;
pub mod dham;
pub mod error;
pub mod fermi2q;
pub mod hilbert;
pub mod lattice2d;
pub mod linalg;
pub mod neutrino;
pub mod pq;
pub mod quadrature;
pub mod rng;
pub mod rotator;

pub use error::{Error, Result};
