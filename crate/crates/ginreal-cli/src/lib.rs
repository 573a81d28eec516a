//! Monte Carlo sampling, reports, file formats and the command line for
//! `ginreal`.

pub mod asy;
pub mod clt;

pub mod cli;
pub mod error;
mod linalg;
pub mod montecarlo;
pub mod output;


pub use error::{CliError, Result};
