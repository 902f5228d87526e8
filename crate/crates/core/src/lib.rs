//! Structured-grid compliance topology optimization.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! building block of the optimizer: mesh topology, element matrices,
//! lower-triangular assembly, density filtering and Heaviside projection,
//! the optimality-criterion redesign, periodic Anderson extrapolation and the
//! optimization loop itself. The sparse factorization is abstracted behind
//! [`solver::SpdSolver`] so a host crate can plug in a fast backend; a dense
//! reference implementation is provided for small systems.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod accel;
pub mod driver;
mod error;
pub mod fea;
pub mod filter;
pub mod grid;
mod math;
pub mod oc;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
