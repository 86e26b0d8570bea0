pub mod bench;
pub mod cli;
pub mod core;
pub mod error;
pub mod eval;
pub mod pairgen;
pub mod synth;

pub use error::{Error, Result};
