//! Sparse support recovery with Lasso-Zero.
//!
//! The crate is `no_std` (with `alloc`) and contains the numerical core:
//! basis pursuit by linear programming, noise-dictionary replicates with
//! median aggregation and thresholding, pivotal threshold calibration with a
//! GEV tail fit, support-recovery metrics and small exact oracles for the
//! recovery guarantees.
#![no_std]

extern crate alloc;

pub mod bp;
pub mod design;
pub mod error;
pub mod gev;
pub mod lasso_zero;
pub mod linalg;
pub mod lp;
pub mod optim;
pub mod qut;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use nalgebra;
