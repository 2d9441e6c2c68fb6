//! Browser bindings for the demo page in `www/`.
//!
//! Every function returns a flat `[x0, y0, x1, y1, ...]` array so the page can
//! plot it without any glue beyond a typed array.

use wasm_bindgen::prelude::*;

use mzlab::bragg::{diffraction_scan, design_pulse, AngularSpread, PulseProfile, PulseTarget, ScanSetup};
use mzlab::interferometer::{mismatch_visibility, InterferometerGeometry};
use mzlab::magnetic::{revival_curve as revivals, AveragingMode};
use mzlab::physics::{Species, VelocityDistribution};

const U: f64 = 1060.0;

fn err(e: mzlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn flatten(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<f64> {
    points.into_iter().flat_map(|(x, y)| [x, y]).collect()
}

fn beam(relative_spread: f64, nodes: usize) -> Result<VelocityDistribution, JsError> {
    if relative_spread <= 0.0 {
        return Ok(VelocityDistribution::monochromatic(U));
    }
    VelocityDistribution::with_relative_spread(U, relative_spread, nodes).map_err(err)
}

/// Transmitted zeroth order versus mirror angle (rad) for a ⁷Li beam at 1060 m/s.
#[wasm_bindgen]
pub fn rocking_curve(depth: f64, duration: f64, relative_spread: f64, collimated: bool, points: usize) -> Result<Vec<f64>, JsError> {
    let geom = InterferometerGeometry::default();
    let angular = if collimated {
        AngularSpread::Collimation {
            source_width: geom.source_width,
            collimator_width: geom.collimator_width,
            separation: geom.collimation_length(),
            nodes: 4,
        }
    } else {
        AngularSpread::None
    };
    let setup = ScanSetup {
        species: Species::li7(),
        laser_wavelength: geom.laser_wavelength,
        beam: beam(relative_spread, 7)?,
        angular,
        depth,
        duration,
        profile: PulseProfile::Square,
        theta_start: -50e-6,
        theta_stop: 300e-6,
        points: points.max(2),
    };
    Ok(flatten(diffraction_scan(&setup).map_err(err)?.into_iter().map(|p| (p.theta_y, p.transmitted))))
}

/// Depth `q` of a mirror pulse, handy for filling the rocking-curve inputs.
#[wasm_bindgen]
pub fn mirror_depth(order: i32, duration: f64) -> Result<f64, JsError> {
    design_pulse(order, duration, PulseTarget::Mirror).map_err(err)
}

/// Observed visibility versus coil current (A).
#[wasm_bindgen]
pub fn revival_curve(relative_spread: f64, k_phi: f64, v0: f64, max_current: f64, points: usize, brute_force: bool) -> Result<Vec<f64>, JsError> {
    let n = points.max(2);
    let currents: Vec<f64> = (0..n).map(|i| max_current * i as f64 / (n - 1) as f64).collect();
    let mode = if brute_force { AveragingMode::BruteForce } else { AveragingMode::ClosedForm };
    Ok(flatten(revivals(&currents, k_phi, v0, &beam(relative_spread, 32)?, mode)))
}

/// Visibility factor versus the spacing mismatch L23 - L12 (m).
#[wasm_bindgen]
pub fn mismatch_curve(order: i32, source_width: f64, detector_width: f64, span: f64, points: usize) -> Vec<f64> {
    let geom = InterferometerGeometry { source_width, detector_width, ..Default::default() };
    let n = points.max(2);
    flatten((0..n).map(|i| {
        let dl = -span + 2.0 * span * i as f64 / (n - 1) as f64;
        (dl, mismatch_visibility(dl, order, &geom))
    }))
}
