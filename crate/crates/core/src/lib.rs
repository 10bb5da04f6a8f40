pub mod cli;
pub mod distribution;
pub mod eigenfunctions;
pub mod error;
pub mod expint;
pub mod quad;
pub mod radial_fourier;
pub mod special;
pub mod thermal_lens;
pub mod verify;

pub use error::{Error, Result};

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;
