//! Quaternionic Monge-Ampere calculus with exact polynomial and
//! finite-difference grid backends.

pub mod algebra;
pub mod constants;
pub mod energy;
pub mod envelope;
pub mod error;
pub mod fields;
pub mod grid;
pub mod poly;
pub mod quat;
pub mod seeding;
pub mod solver;
pub mod suite;

pub use error::{Error, Result};
