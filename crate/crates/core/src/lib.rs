pub mod chart;
pub mod deformation;
pub mod error;
pub mod euclidean;
pub mod foliation;
pub mod lie;
pub mod linalg;
pub mod model;
#[cfg(test)]
mod properties;
pub mod run;
pub mod sampling;
pub mod stenzel;
pub mod symmetric;
pub mod verifier;

pub use error::{LabError, Result};
