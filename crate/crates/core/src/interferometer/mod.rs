//! The three-grating Mach-Zehnder: beam tree, fringe signal and visibility laws.

mod average;
mod beams;
mod defects;
mod fringe;
mod geometry;
mod slits;

pub use average::{velocity_average, velocity_average_curve};
pub use beams::{enumerate_beams, BeamNode, BeamTree, GratingAmplitudes, Port, FLUX_TOLERANCE};
pub use defects::{mismatch_visibility, sinc, tilt_visibility, tilt_wavevector_mismatch, Apodization};
pub use fringe::{fringe_signal, grating_phase, port_signals, two_beam_visibility, FringeModel};
pub use geometry::InterferometerGeometry;
pub use slits::{default_study, slit_scan, two_slope_fit, SlitMode, SlitPoint, SlitStudy, SlitVariable};
