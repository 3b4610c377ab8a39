//! Design, certification and simulation of mixed-feedback oscillators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lti;
pub mod mixed_feedback;
pub mod robustness;
pub mod dominance;
pub mod cable;
pub mod equilibria;
pub mod io;
pub mod lmi;
pub mod simulation;

pub use error::{Error, Result};
