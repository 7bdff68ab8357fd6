//! Numerical toolkit for multilinear simplex Fourier multipliers.

pub mod error;
pub mod dyadic;
pub mod grid;
pub mod trees;
pub mod symbols;
pub mod ops;
pub mod experiments;
pub mod tiles;
pub mod size_energy;
pub mod audit;
pub mod akns;
pub mod selfcheck;
mod par;

pub use error::{Error, Result};
