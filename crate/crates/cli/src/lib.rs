//! File formats, reporting and plotting around the `ceco-core` simulator.
//! The `ceco` binary is a thin dispatcher over these modules.

pub mod compare;
pub mod config;
pub mod cycle;
pub mod plot;
pub mod report;
pub mod trace_io;
