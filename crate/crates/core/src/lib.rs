pub mod config;
pub mod data;
pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod linear;
pub mod model;
pub mod nonlinear;
pub mod run;

pub use error::{Error, Result};
