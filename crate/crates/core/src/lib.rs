pub mod admissibility;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod rotation;
pub mod sampling;
pub mod symbolic;
pub mod variational;

pub use error::{Error, Result};
