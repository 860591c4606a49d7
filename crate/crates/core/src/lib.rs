pub mod cli;
pub mod dsl;
pub mod error;
pub mod fibration;
pub mod geometry;
pub mod jets;
pub mod liealg;
pub mod sampling;
pub mod tangent;

pub use error::{Error, Result};
