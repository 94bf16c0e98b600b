//! File formats and command-line front end for the `fpscatter-core` simulator.

pub mod cli;
pub mod config;
pub mod formats;
pub mod iq;
pub mod units;

pub use cli::{run, Cli};
