pub mod aux_fn;
pub mod discretize;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod matrix_io;
pub mod quad;
pub mod sobolev;
pub mod special_fn;
pub mod spectra;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};
