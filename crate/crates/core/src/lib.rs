//! Search-based falsification of dynamical system models.
//!
//! Candidate inputs are generated from control points, executed on a plant model,
//! and scored by a fitness that blends the robustness of a temporal-logic
//! requirement with an engineer-written manual fitness. A simulated-annealing
//! search minimizes that fitness until the requirement is violated or the
//! iteration budget runs out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitness;
pub mod harness;
pub mod models;
pub mod search;
pub mod signals;
pub mod stl;

pub use error::{Error, Result};
