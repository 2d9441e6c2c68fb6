use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positions along the beam (measured from the nozzle) and aperture sizes.
///
/// Field names follow the element labels of the apparatus: source slit S0,
/// collimation slit S1, standing-wave mirrors M1..M3, detector slit SD and the
/// hot-wire detector D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerGeometry {
    #[serde(rename = "laser_wavelength_m")]
    pub laser_wavelength: f64,
    #[serde(rename = "z_S0_m")]
    pub z_s0: f64,
    #[serde(rename = "z_S1_m")]
    pub z_s1: f64,
    #[serde(rename = "z_M1_m")]
    pub z_m1: f64,
    #[serde(rename = "z_M2_m")]
    pub z_m2: f64,
    #[serde(rename = "z_M3_m")]
    pub z_m3: f64,
    #[serde(rename = "z_SD_m")]
    pub z_sd: f64,
    #[serde(rename = "z_D_m")]
    pub z_d: f64,
    #[serde(rename = "e_0_m")]
    pub source_width: f64,
    #[serde(rename = "e_1_m")]
    pub collimator_width: f64,
    #[serde(rename = "e_D_m")]
    pub detector_width: f64,
    /// Useful height of the detector slit.
    #[serde(rename = "h_D_m")]
    pub detector_height: f64,
    /// Source-to-detector length in the distance-mismatch law; defaults to S0 -> SD.
    #[serde(rename = "L04_m", default, skip_serializing_if = "Option::is_none")]
    pub l04_override: Option<f64>,
}

impl Default for InterferometerGeometry {
    fn default() -> Self {
        InterferometerGeometry {
            laser_wavelength: 670.961e-9,
            z_s0: 0.485,
            z_s1: 1.265,
            z_m1: 1.415,
            z_m2: 2.020,
            z_m3: 2.625,
            z_sd: 3.025,
            z_d: 3.375,
            source_width: 20e-6,
            collimator_width: 12e-6,
            detector_width: 50e-6,
            detector_height: 2.9e-3,
            l04_override: None,
        }
    }
}

impl InterferometerGeometry {
    /// Grating period `a = lambda_L / 2`.
    pub fn grating_period(&self) -> f64 {
        self.laser_wavelength / 2.0
    }

    pub fn k_g(&self) -> f64 {
        2.0 * PI / self.grating_period()
    }

    pub fn l12(&self) -> f64 {
        self.z_m2 - self.z_m1
    }

    pub fn l23(&self) -> f64 {
        self.z_m3 - self.z_m2
    }

    pub fn l34(&self) -> f64 {
        self.z_sd - self.z_m3
    }

    pub fn l04(&self) -> f64 {
        self.l04_override.unwrap_or(self.z_sd - self.z_s0)
    }

    /// S0 -> S1 distance.
    pub fn collimation_length(&self) -> f64 {
        self.z_s1 - self.z_s0
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = [self.z_s0, self.z_s1, self.z_m1, self.z_m2, self.z_m3, self.z_sd];
        if ordered.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("geometry: elements must be ordered S0 < S1 < M1 < M2 < M3 < SD".into()));
        }
        if !(self.laser_wavelength > 0.0) {
            return Err(Error::Invalid("geometry: laser wavelength must be positive".into()));
        }
        for (name, w) in [("e_0", self.source_width), ("e_1", self.collimator_width), ("e_D", self.detector_width), ("h_D", self.detector_height)] {
            if !(w >= 0.0) {
                return Err(Error::Invalid(format!("geometry: {name} must be non-negative")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_apparatus() {
        let g = InterferometerGeometry::default();
        assert!((g.l12() - 0.605).abs() < 1e-12);
        assert!((g.l23() - 0.605).abs() < 1e-12);
        assert!((g.l34() - 0.40).abs() < 1e-12);
        assert!((g.l04() - 2.54).abs() < 1e-12);
        assert!((g.grating_period() - 335e-9).abs() < 1e-9);
        g.validate().unwrap();
    }

    #[test]
    fn json_uses_element_names() {
        let s = serde_json::to_string(&InterferometerGeometry::default()).unwrap();
        assert!(s.contains("\"z_M2_m\":2.02"));
        assert!(s.contains("\"e_D_m\""));
        let bad = s.replace("\"z_D_m\"", "\"z_X_m\"");
        assert!(serde_json::from_str::<InterferometerGeometry>(&bad).is_err());
    }
}
