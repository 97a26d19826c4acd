//! Zonotope tube-based LPV model predictive control for a dynamic bicycle
//! vehicle.
//!
//! The crate is organized bottom-up:
//!
//! * [`sets`]: zonotopes, boxes and polytopes with the set calculus
//! * [`vehicle`]: LPV design model, tire stiffness and the Pacejka plant
//! * [`schedule`]: membership weights and gain interpolation
//! * [`invariant`]: terminal robust positively invariant set
//! * [`reach`]: online tube propagation and constraint tightening
//! * [`qp`], [`mpc`]: the tube MPC quadratic program and its solver
//! * [`sim`]: the multi-rate closed-loop simulator and metrics
//! * [`bench`]: zonotope versus polytope tube timing

pub mod bench;
pub mod closed_loop;
pub mod error;
pub mod invariant;
pub mod mpc;
pub mod qp;
pub mod reach;
pub mod schedule;
pub mod sim;
pub mod sets;
pub mod vehicle;

pub use error::{Error, Result};
