//! Multibody flight model of a bat-inspired flapping-wing robot.
//!
//! The model is split in two subsystems. A massless planar linkage (the
//! "kinetic sculpture") is driven kinematically by a crank and four
//! variable-length links, and it guides a massed system made of the body and
//! the two humerus/radius wing pairs through spring-damper couplings.
//! Quasi-steady strip theory supplies the aerodynamic loads, PD loops drive the
//! linkage, and a bounded Nelder-Mead layer searches open-loop gaits and
//! pitch-stabilizing gains by simulation.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, plotting and
//! the command line live in the `aerobat` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aero;
pub mod body;
pub mod coupling;
mod error;
pub mod linkage;
pub mod math;
pub mod optim;
pub mod params;
pub mod sim;

pub use error::{Error, Result};
pub use params::RobotParams;
