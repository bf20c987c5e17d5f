pub mod baselines;
pub mod error;
pub mod eval;
pub mod harness;
pub mod ingest;
mod io_util;
pub mod metaheuristics;
pub mod rnn;
pub mod sentiment;
pub mod synth;
pub mod textmine;

pub use error::{Error, Result};
pub use io_util::write_atomic;
