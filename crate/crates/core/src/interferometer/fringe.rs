use serde::{Deserialize, Serialize};

use super::beams::{enumerate_beams, GratingAmplitudes, Port};
use super::geometry::InterferometerGeometry;
use crate::error::{Error, Result};

/// Visibility `2 sqrt(rho) / (1 + rho)` of two interfering beams with intensity ratio `rho`.
pub fn two_beam_visibility(rho: f64) -> f64 {
    if rho.is_infinite() {
        return 0.0;
    }
    2.0 * rho.sqrt() / (1.0 + rho)
}

/// `I = I_B + I0 (1 + V cos(phase + phase_offset))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeModel {
    #[serde(rename = "mean_intensity_counts_per_s")]
    pub mean_intensity: f64,
    pub visibility: f64,
    #[serde(rename = "background_counts_per_s")]
    pub background: f64,
    #[serde(rename = "phase_offset_rad")]
    pub phase_offset: f64,
}

impl FringeModel {
    pub fn new(mean_intensity: f64, visibility: f64, background: f64) -> Result<Self> {
        let m = FringeModel { mean_intensity, visibility, background, phase_offset: 0.0 };
        m.validate()?;
        Ok(m)
    }

    /// Model for two real path amplitudes scaled by the incident flux `scale`.
    pub fn from_amplitudes(a_u: f64, a_l: f64, scale: f64, background: f64) -> Self {
        let mean = a_u * a_u + a_l * a_l;
        let visibility = if mean > 0.0 { 2.0 * (a_u * a_l).abs() / mean } else { 0.0 };
        FringeModel { mean_intensity: scale * mean, visibility, background, phase_offset: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Invalid(format!("visibility {} outside [0, 1]", self.visibility)));
        }
        if !(self.mean_intensity >= 0.0 && self.background >= 0.0) {
            return Err(Error::Invalid("intensities must be non-negative".into()));
        }
        Ok(())
    }

    /// Count rate at fringe phase `phase`.
    pub fn rate(&self, phase: f64) -> f64 {
        self.background + self.mean_intensity * (1.0 + self.visibility * (phase + self.phase_offset).cos())
    }
}

/// Grating phase `k_G (2 x2 - x1 - x3)`.
pub fn grating_phase(x: [f64; 3], geom: &InterferometerGeometry) -> f64 {
    geom.k_g() * (2.0 * x[1] - x[0] - x[2])
}

/// B1 intensity for real path amplitudes at grating positions `x`:
/// `a_u^2 + a_l^2 + 2 a_u a_l cos(p k_G (2 x2 - x1 - x3))`.
pub fn fringe_signal(x: [f64; 3], a_u: f64, a_l: f64, order: i32, geom: &InterferometerGeometry) -> f64 {
    a_u * a_u + a_l * a_l + 2.0 * a_u * a_l * (order as f64 * grating_phase(x, geom)).cos()
}

/// Intensities of both exit ports from the full beam tree.
pub fn port_signals(gratings: &[GratingAmplitudes; 3], order: i32, geom: &InterferometerGeometry) -> (f64, f64) {
    let tree = enumerate_beams(gratings, order, 0.0, 0.0, 0.0, geom);
    (tree.port_intensity(Port::B1), tree.port_intensity(Port::B2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bragg::TwoLevel;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn visibility_examples() {
        assert_eq!(two_beam_visibility(1.0), 1.0);
        assert!((two_beam_visibility(0.5) - 2.0 * 0.5f64.sqrt() / 1.5).abs() < 1e-15);
        assert!((two_beam_visibility(0.5) - 0.942_809_041_582_063_4).abs() < 1e-12);
        assert_eq!(two_beam_visibility(0.0), 0.0);
        assert_eq!(two_beam_visibility(f64::INFINITY), 0.0);
    }

    proptest! {
        #[test]
        fn visibility_inversion_symmetry(log_rho in -20.0f64..20.0) {
            let rho = log_rho.exp();
            prop_assert!((two_beam_visibility(rho) - two_beam_visibility(1.0 / rho)).abs() < 1e-12);
            prop_assert!(two_beam_visibility(rho) <= 1.0);
        }

        #[test]
        fn common_mode_translation(dx in -1e-6f64..1e-6, x2 in 0.0f64..1e-6) {
            let g = InterferometerGeometry::default();
            let a = fringe_signal([0.0, x2, 0.0], 0.6, 0.5, 2, &g);
            let b = fringe_signal([dx, x2 + dx, dx], 0.6, 0.5, 2, &g);
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn one_fringe_per_half_wavelength_over_p() {
        let g = InterferometerGeometry::default();
        for p in 1..=3 {
            let period = g.laser_wavelength / (2.0 * p as f64);
            for &x3 in &[0.0, 41e-9, 100e-9] {
                let a = fringe_signal([0.0, 0.0, x3], 0.5, 0.5, p, &g);
                let b = fringe_signal([0.0, 0.0, x3 + period], 0.5, 0.5, p, &g);
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn complementary_outputs() {
        let g = InterferometerGeometry::default();
        let split = TwoLevel::new(1, FRAC_PI_4, 1.0, 0.0).unwrap();
        let mirror = TwoLevel::new(1, 2.0 * FRAC_PI_4, 1.0, 0.0).unwrap();
        let period = g.laser_wavelength / 2.0;
        for k in 0..50 {
            let x3 = period * k as f64 / 50.0;
            let gr = [GratingAmplitudes::new(split, 0.0), GratingAmplitudes::new(mirror, 0.0), GratingAmplitudes::new(split, x3)];
            let (i1, i2) = port_signals(&gr, 1, &g);
            assert!((i1 + i2 - 1.0).abs() < 1e-12);
        }
        // full contrast in the ideal case
        let at = |x3: f64| {
            let gr = [GratingAmplitudes::new(split, 0.0), GratingAmplitudes::new(mirror, 0.0), GratingAmplitudes::new(split, x3)];
            port_signals(&gr, 1, &g).0
        };
        let hi = (0..200).map(|k| at(period * k as f64 / 200.0)).fold(0.0, f64::max);
        let lo = (0..200).map(|k| at(period * k as f64 / 200.0)).fold(1.0, f64::min);
        assert!((hi - 1.0).abs() < 1e-3 && lo < 1e-3);
    }

    #[test]
    fn model_rate() {
        let m = FringeModel::new(23710.0, 0.845, 2000.0).unwrap();
        assert!((m.rate(0.0) - (2000.0 + 23710.0 * 1.845)).abs() < 1e-9);
        assert!(FringeModel::new(1.0, 1.2, 0.0).is_err());
        let f = FringeModel::from_amplitudes(0.5, 0.5, 100.0, 0.0);
        assert!((f.visibility - 1.0).abs() < 1e-15);
        assert!((f.mean_intensity - 50.0).abs() < 1e-12);
    }
}
