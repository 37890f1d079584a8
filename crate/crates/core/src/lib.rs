//! Synthesis and verification of distributed-delay state-feedback
//! controllers for linear plants with a pointwise input delay.

pub mod basis;
pub mod cli;
pub mod demo;
pub mod error;
pub mod lmi;
pub mod matfun;
pub mod model;
pub mod predictor;
pub mod solver;
pub mod synthesis;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
