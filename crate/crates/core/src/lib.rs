pub mod baseline;
pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod models;
pub mod rng;
pub mod seqnet;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
