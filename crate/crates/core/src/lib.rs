//! Simulation and verification toolkit for the two-dimensional micropolar
//! equations with angular-velocity dissipation only, on a rectangle with
//! `u . n = 0` and `w = 0` on the boundary.
//!
//! The flow is evolved in vorticity-streamfunction form. Alongside the
//! solver the crate checks the energy balance, the transport law for the
//! combined quantity `Z = omega + (2 kappa / gamma) w`, a Gronwall bound on
//! `||Z||_p` and the exponential decay rate of the damped system.

pub mod analysis;
pub mod app;
pub mod domain;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod mms;
pub mod par;

pub use error::{Error, Result};
