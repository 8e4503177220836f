//! Simulation and analysis of joint position-momentum measurements.
//!
//! The crate is organised bottom-up: truncated number-basis algebra in
//! [`fock`], phase-space distributions in [`phase_space`], the two-pointer
//! measurement model in [`joint`], the single-coordinate kernel model in
//! [`kernel`], and the batch front end in [`cli`].

pub mod axis;
pub mod cli;
pub mod density;
pub mod error;
pub mod fock;
pub mod joint;
pub mod kernel;
pub mod phase_space;

pub use error::{Error, ErrorKind, Result};
