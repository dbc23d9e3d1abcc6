//! File formats, scenario generators, sweeps, plots, the acceptance suite
//! and the command-line front end for the `mccst-core` simulator.

// `!(x > y)` also catches NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod formats;
pub mod generate;
pub mod plots;
pub mod record;
pub mod scenario_file;
pub mod sweep;
