//! Lasso-Zero toolkit on top of `lasso-zero-core`: parallel threshold
//! calibration, simulation campaigns, oracle verification suites, CSV/JSON IO
//! and the `lass0` command line.

pub mod calibration;
pub mod campaign;
pub mod cli;
pub mod error;
pub mod io;
pub mod verify;

pub use lasso_zero_core as core;
