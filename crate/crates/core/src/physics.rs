//! Atomic species, beam and laser descriptions and the kinematic quantities
//! derived from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{ConstantTable, HBAR, PLANCK_H};
use crate::error::{Error, Result};
use crate::quad::gauss_hermite;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperfineLevel {
    pub f: f64,
    pub g_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Species {
    pub name: String,
    pub mass_kg: f64,
    pub transition_wavelength_m: f64,
    /// Natural width gamma of the resonance line.
    pub natural_width_rad_per_s: f64,
    #[serde(rename = "saturation_intensity_W_per_m2")]
    pub saturation_intensity: f64,
    pub nuclear_spin: f64,
    pub hyperfine: Vec<HyperfineLevel>,
    pub abundance: f64,
}

impl Species {
    pub fn li7() -> Species {
        ConstantTable::standard().species("Li7").unwrap().clone()
    }

    pub fn li6() -> Species {
        ConstantTable::standard().species("Li6").unwrap().clone()
    }

    pub fn g_f(&self, f: f64) -> Option<f64> {
        self.hyperfine.iter().find(|l| l.f == f).map(|l| l.g_f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Invalid(format!("species {}: {what}", self.name)));
        if !(self.mass_kg > 0.0) {
            return bad("mass must be positive");
        }
        if !(self.transition_wavelength_m > 0.0) {
            return bad("transition wavelength must be positive");
        }
        if !(self.natural_width_rad_per_s > 0.0) {
            return bad("natural width must be positive");
        }
        if !(0.0..=1.0).contains(&self.abundance) {
            return bad("abundance must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Gaussian longitudinal velocity distribution `P(v) ~ exp(-(v-u)^2/alpha^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityDistribution {
    pub mean: f64,
    pub width: f64,
    pub quadrature_order: usize,
}

impl VelocityDistribution {
    pub fn new(mean: f64, width: f64, quadrature_order: usize) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::domain("VelocityDistribution", "mean velocity must be positive"));
        }
        if !(width >= 0.0 && width < mean) {
            return Err(Error::domain("VelocityDistribution", "width must satisfy 0 <= alpha < u"));
        }
        if quadrature_order == 0 {
            return Err(Error::domain("VelocityDistribution", "quadrature order must be >= 1"));
        }
        Ok(VelocityDistribution { mean, width, quadrature_order })
    }

    /// Build from the relative spread `alpha/u`.
    pub fn with_relative_spread(mean: f64, relative: f64, quadrature_order: usize) -> Result<Self> {
        Self::new(mean, mean * relative, quadrature_order)
    }

    pub fn monochromatic(mean: f64) -> Self {
        VelocityDistribution { mean, width: 0.0, quadrature_order: 1 }
    }

    pub fn relative_spread(&self) -> f64 {
        self.width / self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamProfile {
    Gaussian,
    /// Flat top of radius `waist`.
    FlatTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserField {
    pub wavelength: f64,
    /// Detuning delta = omega_L - omega_0 in rad/s.
    pub detuning: f64,
    pub power: f64,
    /// Gaussian 1/e^2 radius, or the radius of a flat-top beam.
    pub waist: f64,
    pub profile: BeamProfile,
}

impl LaserField {
    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

pub fn de_broglie_wavelength(species: &Species, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain("de_broglie_wavelength", format!("velocity must be positive, got {v}")));
    }
    Ok(PLANCK_H / (species.mass_kg * v))
}

/// Incidence angle `p * lambda_dB / lambda_L` for Bragg diffraction of order `p`.
pub fn bragg_angle(species: &Species, v: f64, laser_wavelength: f64, p: i32) -> Result<f64> {
    if p <= 0 {
        return Err(Error::domain("bragg_angle", format!("order must be >= 1, got {p}")));
    }
    Ok(p as f64 * de_broglie_wavelength(species, v)? / laser_wavelength)
}

/// `hbar k_L^2 / 2m`.
pub fn recoil_frequency(species: &Species, laser_wavelength: f64) -> f64 {
    let k = 2.0 * PI / laser_wavelength;
    HBAR * k * k / (2.0 * species.mass_kg)
}

/// Quadrature nodes `(v, weight)` for a velocity average.
///
/// Nodes at `v <= 0` are discarded and the remaining weights renormalised.
pub fn velocity_nodes(dist: &VelocityDistribution) -> Vec<(f64, f64)> {
    if dist.width == 0.0 {
        return vec![(dist.mean, 1.0)];
    }
    if dist.relative_spread() > 0.5 {
        log::warn!(
            "alpha/u = {:.3} is outside the alpha << u regime of the closed-form laws",
            dist.relative_spread()
        );
    }
    let mut nodes: Vec<(f64, f64)> = gauss_hermite(dist.quadrature_order)
        .into_iter()
        .map(|(x, w)| (dist.mean + dist.width * x, w))
        .filter(|&(v, _)| v > 0.0)
        .collect();
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}
