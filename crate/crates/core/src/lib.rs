//! Networked negative-imaginary systems and battery-controlled power grids.
//!
//! The library models plants and controllers as input/output systems,
//! wires them through a graph incidence matrix, evaluates the networked
//! Lyapunov function, and applies all of it to the lossless swing equation
//! with optional battery-backed virtual lines.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiment;
pub mod grid;
pub mod lyapunov;
pub mod network;
pub mod ode;
pub mod scenario;
pub mod sim;
pub mod systems;

pub use error::{Error, Result};
pub use exec::Execution;
