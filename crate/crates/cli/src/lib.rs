//! Batch front-end for the `cuspdyn` experiments.

pub mod commands;
pub mod config;
pub mod output;
