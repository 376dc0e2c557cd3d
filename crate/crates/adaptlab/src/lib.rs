//! Desk-scale adaptive control laboratory.
//!
//! Simulates a well-understood second-order reference system alongside
//! nonlinear "unknown" plants driven by the same base controller, and
//! synthesizes additive compensators that pull the unknown response onto
//! the reference response. Ships with a Lyapunov convergence-region
//! analysis of the compensated error dynamics, step-response metrics, an
//! iterative compensator designer (rule-based or chat-endpoint backed),
//! and a scenario harness that reproduces the standard experiment suite.

pub mod controllers;
pub mod designer;
pub mod dynamics;
pub mod harness;
pub mod metrics;
pub mod stability;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
