//! Real eigenvalues of products of `m` real Ginibre matrices as a Pfaffian
//! point process: finite-N kernels, their bulk/edge/origin limits, Pfaffian
//! correlation and cluster functions, Fredholm-Pfaffian gap probabilities and
//! the analytic variance/count predictions.
//!
//! The crate is `no_std` (with `alloc`); sampling, IO and the command line
//! live in the `ginreal-cli` companion crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod fredholm;
pub mod kernel;
pub mod pfaffian;
pub mod quad;
pub mod real;
pub mod special_fn;
pub mod statistics;

pub use error::{Error, Result};
pub use special_fn::SignedLog;
