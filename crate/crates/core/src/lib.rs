//! Canonical and microcanonical ensembles as two projections of one
//! constraint projector on clock (x) system, and fixed-time versus
//! fixed-energy classical dynamics from one parametrized action.
//!
//! Units: hbar = 1, k_B = 1.

pub mod classical;
pub mod cli;
pub mod clock;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod models;
pub mod projector;

pub use error::{Error, Result};
