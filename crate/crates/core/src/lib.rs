//! Simulation and analysis of a three-grating Mach-Zehnder atom interferometer
//! built from Bragg diffraction on laser standing waves.
//!
//! * [`physics`]: species, beam and laser descriptions, kinematics, velocity quadrature
//! * [`bragg`]: single-grating diffraction (two-level closed forms and a momentum-basis propagator)
//! * [`interferometer`]: beam tree, fringe signal, visibility laws, slit study
//! * [`magnetic`]: Zeeman phases, gradient dephasing and revivals
//! * [`signal`]: count synthesis and fitting
//! * [`io`]: CSV and JSON artifacts

pub mod bragg;
pub mod constants;
pub mod error;
pub mod interferometer;
pub mod io;
pub mod magnetic;
pub mod physics;
pub mod quad;
pub mod signal;

pub use error::{Error, Result};
