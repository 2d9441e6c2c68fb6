//! Visibility loss from grating tilts and unequal grating spacings.

use serde::{Deserialize, Serialize};

use super::geometry::InterferometerGeometry;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Weight of the detected intensity across the detector height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Apodization {
    /// Flat profile; gives `|sinc(dk_y h_D)|`.
    #[default]
    Flat,
    /// Gaussian weight of rms width `rms_m` over y; gives `exp(-(dk_y s)^2 / 2)`.
    Gaussian { rms_m: f64 },
}

/// `dk_y = p k_G (2 theta_z2 - theta_z1 - theta_z3)`.
pub fn tilt_wavevector_mismatch(tilts: [f64; 3], order: i32, geom: &InterferometerGeometry) -> f64 {
    order as f64 * geom.k_g() * (2.0 * tilts[1] - tilts[0] - tilts[2])
}

/// Fraction of the aligned visibility left by rotations `theta_z` of the three mirrors.
///
/// For the flat profile this is `|sinc(dk_y h_D)|` with `h_D` the useful
/// detector height.
pub fn tilt_visibility(tilts: [f64; 3], order: i32, geom: &InterferometerGeometry, apodization: Apodization) -> f64 {
    if tilts.iter().any(|t| t.abs() >= 1e-3) {
        log::warn!("tilt above 1 mrad: small-angle visibility law extrapolated");
    }
    let dk = tilt_wavevector_mismatch(tilts, order, geom);
    match apodization {
        Apodization::Flat => sinc(dk * geom.detector_height).abs(),
        Apodization::Gaussian { rms_m } => (-0.5 * (dk * rms_m).powi(2)).exp(),
    }
}

/// Fraction of the visibility left by a spacing mismatch `dL = L23 - L12`:
/// `|sinc(p k_G e_0 dL / 2 L04) sinc(p k_G e_D dL / 2 L04)|`.
pub fn mismatch_visibility(delta_l: f64, order: i32, geom: &InterferometerGeometry) -> f64 {
    let scale = order as f64 * geom.k_g() * delta_l / (2.0 * geom.l04());
    (sinc(scale * geom.source_width) * sinc(scale * geom.detector_width)).abs()
}
