pub mod encoder;
pub mod error;
pub mod experiments;
pub mod hdalg;
pub mod matalg;
pub mod rng;
pub mod selftest;
pub mod structures;

pub use error::{GhrrError, Result};
