//! Diffraction of atoms by one laser standing wave.
//!
//! Lengths of momentum are in units of the laser wave number `k_L`, energies in
//! units of the recoil `hbar omega_rec`, times in units of `1/omega_rec`. In
//! these units the standing-wave potential couples neighbouring momentum
//! states `k + 2n` with strength `q`.

mod propagator;
mod scan;

pub use propagator::{bloch_propagate, propagate, AmplitudeVector, PulseProfile};
pub use scan::{diffraction_scan, find_minima, AngularSpread, ScanPoint, ScanSetup};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::physics::{bragg_angle, recoil_frequency, BeamProfile, LaserField, Species};

/// `d_p` in `P_p = sin^2(q^p tau / d_p)`.
pub fn order_divisor(p: i32) -> Result<f64> {
    match p {
        1 => Ok(1.0),
        2 => Ok(4.0),
        3 => Ok(64.0),
        _ => Err(Error::UnsupportedOrder(p)),
    }
}

/// Largest depth `q` for which `sin^2(q^p tau / d_p)` stays within 0.02 of
/// the full momentum-basis propagation at exact Bragg incidence, for square
/// pulses of area up to `pi/2`.
pub fn bragg_window(p: i32) -> Result<f64> {
    match p {
        1 => Ok(0.5),
        2 => Ok(0.2),
        3 => Ok(0.4),
        _ => Err(Error::UnsupportedOrder(p)),
    }
}

/// One standing wave in dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingConfig {
    pub order: i32,
    /// Dimensionless depth `q = V0 / (4 hbar omega_rec)`.
    pub depth: f64,
    /// Dimensionless duration `tau = omega_rec t_int`.
    pub duration: f64,
    pub tilt_y: f64,
    pub tilt_z: f64,
    pub x_position: f64,
}

impl GratingConfig {
    pub fn new(order: i32, depth: f64, duration: f64) -> Self {
        GratingConfig { order, depth, duration, tilt_y: 0.0, tilt_z: 0.0, x_position: 0.0 }
    }

    /// Pulse area `q^p tau / d_p`.
    pub fn pulse_area(&self) -> Result<f64> {
        Ok(self.depth.powi(self.order) * self.duration / order_divisor(self.order)?)
    }

    /// Same light field seen by an atom of velocity `v` when `duration` was
    /// quoted for velocity `u`.
    pub fn at_velocity(&self, u: f64, v: f64) -> Self {
        GratingConfig { duration: self.duration * u / v, ..*self }
    }
}

/// Convert a physical laser beam into `(q, tau)` for an atom crossing it at `v`.
///
/// Light shift `V0 = hbar Omega1^2 / delta` with `Omega1^2 = gamma^2 I / (2 I_sat)`.
/// Peak intensity is `2P/(pi w0^2)` for a Gaussian beam and `P/(pi w0^2)` for a
/// flat top of radius `w0`. The interaction time is `sqrt(pi/2) w0 / v` for a
/// Gaussian (equal-area flat top) and `2 w0 / v` for a flat top.
/// `q` is returned as a magnitude; the sign of the detuning only sets the sign
/// of the potential.
pub fn dimensionless_from_physical(laser: &LaserField, species: &Species, v: f64) -> Result<(f64, f64)> {
    if laser.detuning == 0.0 {
        return Err(Error::domain("dimensionless_from_physical", "detuning must be non-zero"));
    }
    if !(v > 0.0) {
        return Err(Error::domain("dimensionless_from_physical", "velocity must be positive"));
    }
    if !(laser.waist > 0.0) || laser.power < 0.0 {
        return Err(Error::domain("dimensionless_from_physical", "waist must be > 0 and power >= 0"));
    }
    let gamma = species.natural_width_rad_per_s;
    if laser.detuning.abs() < 50.0 * gamma {
        log::warn!("|delta| = {:.3e} rad/s is below 50 gamma; the far-detuned light-shift model is marginal", laser.detuning.abs());
    }
    let w_rec = recoil_frequency(species, laser.wavelength);
    let area = PI * laser.waist * laser.waist;
    let (intensity, t_int) = match laser.profile {
        BeamProfile::Gaussian => (2.0 * laser.power / area, FRAC_PI_2.sqrt() * laser.waist / v),
        BeamProfile::FlatTop => (laser.power / area, 2.0 * laser.waist / v),
    };
    let omega1_sq = gamma * gamma * intensity / (2.0 * species.saturation_intensity);
    let v0 = HBAR * omega1_sq / laser.detuning;
    let q = v0.abs() / (4.0 * HBAR * w_rec);
    Ok((q, w_rec * t_int))
}

/// Two-level Bragg diffraction probability `sin^2(q^p tau / d_p)`.
pub fn rabi_probability(g: &GratingConfig) -> Result<f64> {
    Ok(g.pulse_area()?.sin().powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseTarget {
    Mirror,
    Splitter,
}

/// Smallest depth `q` giving a mirror (area pi/2) or 50/50 splitter (area pi/4).
pub fn design_pulse(p: i32, tau: f64, target: PulseTarget) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain("design_pulse", "tau must be positive"));
    }
    let area = match target {
        PulseTarget::Mirror => FRAC_PI_2,
        PulseTarget::Splitter => FRAC_PI_4,
    };
    Ok((area * order_divisor(p)? / tau).powf(1.0 / p as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpontaneousEmission {
    pub probability: f64,
    /// The raw estimate `q tau gamma/|delta|` exceeded one.
    pub clamped: bool,
}

/// `P_SE = q tau gamma / |delta|`, clamped to `[0, 1]`.
pub fn spontaneous_emission_probability(g: &GratingConfig, species: &Species, detuning: f64) -> Result<SpontaneousEmission> {
    if detuning == 0.0 {
        return Err(Error::domain("spontaneous_emission_probability", "detuning must be non-zero"));
    }
    let raw = g.depth * g.duration * species.natural_width_rad_per_s / detuning.abs();
    Ok(SpontaneousEmission { probability: raw.clamp(0.0, 1.0), clamped: raw > 1.0 })
}

/// Unitary of the two-level Bragg problem.
///
/// State `a` is the incident momentum `+p`, state `b` the diffracted `-p`;
/// `detuning` is the kinetic energy difference `E_a - E_b` in recoil units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevel {
    /// Amplitude to remain in `a`; remaining in `b` is the conjugate.
    pub stay: Complex64,
    pub flip: Complex64,
}

impl TwoLevel {
    pub fn new(order: i32, q: f64, tau: f64, detuning: f64) -> Result<Self> {
        let omega = 2.0 * q.powi(order) / order_divisor(order)?;
        let general = omega.hypot(detuning);
        if general == 0.0 {
            return Ok(TwoLevel { stay: Complex64::new(1.0, 0.0), flip: Complex64::new(0.0, 0.0) });
        }
        let (s, c) = (0.5 * general * tau).sin_cos();
        Ok(TwoLevel {
            stay: Complex64::new(c, -detuning / general * s),
            flip: Complex64::new(0.0, -omega / general * s),
        })
    }

    pub fn identity() -> Self {
        TwoLevel { stay: Complex64::new(1.0, 0.0), flip: Complex64::new(0.0, 0.0) }
    }

    /// `|stay|^2 + |flip|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.stay.norm_sqr() + self.flip.norm_sqr()
    }
}

/// Kinetic detuning `4 p (epsilon / theta_B)` for an incidence error `epsilon`.
pub fn kinetic_detuning(order: i32, epsilon: f64, first_order_bragg: f64) -> f64 {
    4.0 * order as f64 * epsilon / first_order_bragg
}

/// Diffraction probability at incidence `epsilon` away from the Bragg angle.
///
/// Generalised Rabi formula with `Omega_p = 2 q^p / d_p` and kinetic detuning
/// `4 p epsilon / theta_B`; `theta_B` is the first-order Bragg angle at `v`.
pub fn off_bragg_probability(g: &GratingConfig, epsilon: f64, species: &Species, v: f64, laser_wavelength: f64) -> Result<f64> {
    let theta_b = bragg_angle(species, v, laser_wavelength, 1)?;
    if epsilon.abs() >= 10.0 * theta_b {
        return Err(Error::domain("off_bragg_probability", "|epsilon| must be below 10 theta_B"));
    }
    let detuning = kinetic_detuning(g.order, epsilon, theta_b);
    Ok(TwoLevel::new(g.order, g.depth, g.duration, detuning)?.flip.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::BeamProfile;

    fn laser(power: f64, waist: f64, detuning_ghz: f64, profile: BeamProfile) -> LaserField {
        LaserField { wavelength: 670.961e-9, detuning: 2.0 * PI * detuning_ghz * 1e9, power, waist, profile }
    }

    #[test]
    fn rabi_holds_at_window_edge() {
        for p in 1..=3 {
            let q = bragg_window(p).unwrap();
            for k in [5, 10, 15, 20] {
                let tau = FRAC_PI_2 * k as f64 / 20.0 * order_divisor(p).unwrap() / q.powi(p);
                let full = bloch_propagate(p as f64, q, tau, 8, PulseProfile::Square).unwrap();
                let two = rabi_probability(&GratingConfig::new(p, q, tau)).unwrap();
                assert!((full.population(-p) - two).abs() < 0.02, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn zero_power_gives_zero_depth() {
        let (q, tau) = dimensionless_from_physical(&laser(0.0, 5e-3, 3.0, BeamProfile::Gaussian), &Species::li7(), 1060.0).unwrap();
        assert_eq!(q, 0.0);
        assert!(tau > 0.0);
    }

    #[test]
    fn doubling_detuning_halves_q() {
        let li7 = Species::li7();
        let (q1, t1) = dimensionless_from_physical(&laser(0.1, 3e-3, 2.0, BeamProfile::Gaussian), &li7, 1060.0).unwrap();
        let (q2, t2) = dimensionless_from_physical(&laser(0.1, 3e-3, 4.0, BeamProfile::Gaussian), &li7, 1060.0).unwrap();
        assert!((q2 - q1 / 2.0).abs() < 1e-14 * q1);
        assert_eq!(t1, t2);
    }

    #[test]
    fn resonant_light_rejected() {
        let l = laser(0.1, 3e-3, 0.0, BeamProfile::Gaussian);
        assert!(dimensionless_from_physical(&l, &Species::li7(), 1060.0).is_err());
    }

    #[test]
    fn table1_first_order_fixture() {
        // Outer standing wave of the p = 1 rows: P/4 of 150 mW, 5.0 mm flat-top
        // radius, delta/2pi = 2.8 GHz, v = 1060 m/s. Evaluated by hand from the
        // light-shift convention with hbar = 1.054571817e-34, gamma = 2pi 5.9 MHz,
        // I_sat = 25.4 W/m^2, m = 7.0160034366 u, lambda = 670.961 nm.
        let hbar = 1.054571817e-34;
        let m = 7.0160034366 * 1.6605390666e-27;
        let k = 2.0 * PI / 670.961e-9;
        let w_rec = hbar * k * k / (2.0 * m);
        let gamma = 2.0 * PI * 5.9e6;
        let intensity = 0.0375 / (PI * 25e-6);
        let omega1_sq = gamma * gamma * intensity / (2.0 * 25.4);
        let q_expected = omega1_sq / (2.0 * PI * 2.8e9) / (4.0 * w_rec);
        let tau_expected = w_rec * 2.0 * 5e-3 / 1060.0;
        let (q, tau) = dimensionless_from_physical(&laser(0.0375, 5e-3, 2.8, BeamProfile::FlatTop), &Species::li7(), 1060.0).unwrap();
        assert!((q - q_expected).abs() < 1e-12 * q_expected);
        assert!((tau - tau_expected).abs() < 1e-12 * tau_expected);
        // frozen values
        assert!((q - 0.4622).abs() < 5e-4, "q = {q}");
        assert!((tau - 3.747).abs() < 5e-3, "tau = {tau}");
    }

    #[test]
    fn rabi_examples() {
        assert_eq!(rabi_probability(&GratingConfig::new(1, 0.0, 3.0)).unwrap(), 0.0);
        assert!((rabi_probability(&GratingConfig::new(1, 1.0, FRAC_PI_2)).unwrap() - 1.0).abs() < 1e-15);
        let p2 = rabi_probability(&GratingConfig::new(2, 2.0, PI)).unwrap();
        assert!(p2 < 1e-30);
        assert!(matches!(rabi_probability(&GratingConfig::new(4, 1.0, 1.0)), Err(Error::UnsupportedOrder(4))));
    }

    #[test]
    fn design_pulse_examples() {
        let qm = design_pulse(1, FRAC_PI_2, PulseTarget::Mirror).unwrap();
        assert!((qm - 1.0).abs() < 1e-15);
        let qs = design_pulse(1, FRAC_PI_2, PulseTarget::Splitter).unwrap();
        assert!((qs - 0.5).abs() < 1e-15);
        for p in 1..=3 {
            for &tau in &[0.3, 2.0, 17.0] {
                let m = design_pulse(p, tau, PulseTarget::Mirror).unwrap();
                let s = design_pulse(p, tau, PulseTarget::Splitter).unwrap();
                let ratio = s / m;
                assert!((ratio - 2f64.powf(-1.0 / p as f64)).abs() < 1e-12);
                let g = GratingConfig::new(p, m, tau);
                assert!((rabi_probability(&g).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(design_pulse(1, 0.0, PulseTarget::Mirror).is_err());
    }

    #[test]
    fn spontaneous_emission_examples() {
        let li7 = Species::li7();
        let se = spontaneous_emission_probability(&GratingConfig::new(1, 0.0, 3.0), &li7, 1e10).unwrap();
        assert_eq!(se.probability, 0.0);
        let g = GratingConfig::new(1, 1.0, FRAC_PI_2);
        let se = spontaneous_emission_probability(&g, &li7, 2.0 * PI * 3.0e9).unwrap();
        assert!((se.probability - FRAC_PI_2 * 5.9 / 3000.0).abs() < 1e-12);
        assert!((se.probability - 3.09e-3).abs() < 0.01e-3);
        assert!(!se.clamped);
        let huge = spontaneous_emission_probability(&GratingConfig::new(1, 1e6, 1e3), &li7, 1e9).unwrap();
        assert_eq!(huge.probability, 1.0);
        assert!(huge.clamped);
        assert!(spontaneous_emission_probability(&g, &li7, 0.0).is_err());
    }

    #[test]
    fn spontaneous_emission_scales_as_inverse_detuning_squared_at_fixed_power() {
        let li7 = Species::li7();
        let l1 = laser(0.05, 3e-3, 2.0, BeamProfile::Gaussian);
        let l4 = LaserField { detuning: 4.0 * l1.detuning, ..l1 };
        let pse = |l: &LaserField| {
            let (q, tau) = dimensionless_from_physical(l, &li7, 1060.0).unwrap();
            spontaneous_emission_probability(&GratingConfig::new(1, q, tau), &li7, l.detuning).unwrap().probability
        };
        let ratio = pse(&l1) / pse(&l4);
        assert!((ratio - 16.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn off_bragg_limits() {
        let li7 = Species::li7();
        let g = GratingConfig::new(2, 0.3, 20.0);
        let on = off_bragg_probability(&g, 0.0, &li7, 1060.0, 671e-9).unwrap();
        assert_eq!(on, rabi_probability(&g).unwrap());
        let tb = bragg_angle(&li7, 1060.0, 671e-9, 1).unwrap();
        let far = off_bragg_probability(&g, 9.9 * tb, &li7, 1060.0, 671e-9).unwrap();
        assert!(far < 1e-3);
        assert!(off_bragg_probability(&g, 10.0 * tb, &li7, 1060.0, 671e-9).is_err());
    }

    #[test]
    fn two_level_is_unitary() {
        for &(q, tau, d) in &[(0.3, 2.0, 0.0), (0.7, 5.0, 3.0), (1.2, 0.4, -8.0)] {
            for p in 1..=3 {
                let u = TwoLevel::new(p, q, tau, d).unwrap();
                assert!((u.norm_sqr() - 1.0).abs() < 1e-14);
            }
        }
    }
}
