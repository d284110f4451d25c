pub mod algebra;
pub mod error;
pub mod flows;
pub mod io;
pub mod neumann;
pub mod nijenhuis;
pub mod phasespace;
pub mod sample;
pub mod sov;
pub mod spectral;

pub use error::{Error, Result};
