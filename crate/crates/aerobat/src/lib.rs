//! Std side of aerobat: config files, exports, plots, the invariant suite
//! and the command-line front end. The model itself lives in `aerobat-core`.

pub mod checks;
pub mod cli;
pub mod config;
pub mod export;
pub mod plot;
pub mod report;
