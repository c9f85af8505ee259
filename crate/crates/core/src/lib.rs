pub mod cli;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod pattern;
pub mod random;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
