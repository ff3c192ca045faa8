pub mod error;
pub mod mat;

pub use error::{Error, Result};
pub mod liealg;
pub mod reps;
pub mod odeflow;
pub mod model;
pub mod stokes;
pub mod gckz;
pub mod braid;
pub mod isomono;
