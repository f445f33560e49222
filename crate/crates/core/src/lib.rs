//! Effective exchange coupling and dissipation for two mechanical modes
//! driven through a shared lossy cavity, with independent Fock-space and
//! Gaussian simulators of the full and effective dynamics.

pub mod analysis;
pub mod effective;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod fock;
pub mod gauss;
pub mod generator;
pub mod model;
pub mod oracle;
pub mod validate;

pub use error::{Error, Result};
