//! Cusp dynamics for rank-one homogeneous spaces.
//!
//! The crate is layered bottom-up: [`algebra`] supplies the two-step
//! nilpotent algebra, [`nagroup`] the solvable group and its action on the
//! Siegel domain, [`height`] the closed-form height profiles, [`modular`] a
//! concrete SL(2,Z) laboratory, [`covering`] the excursion and cover
//! combinatorics, and [`entropy`] the estimators and inequality checkers.

pub mod algebra;
pub mod covering;
pub mod entropy;
mod error;
pub mod height;
pub mod modular;
pub mod nagroup;

pub use error::{Error, Result};
