pub mod distributions;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod quad;
pub mod resistance;
pub mod spanning;
pub mod walk;

pub use error::{Error, Result};
