//! Zeeman phases, gradient dephasing of the magnetic sublevels and the
//! resulting visibility revivals.
//!
//! With adiabatic following, sublevel `(F, M_F)` picks up a phase
//! proportional to `g_F M_F` times the line integral of `|B|`. Only the
//! difference between the two arms matters; it comes from the field gradient
//! across the arm separation and is written `phi M_F` with `phi` common to
//! all sublevels of ⁷Li (`|g_F| = 1/2` for both hyperfine levels).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{BOHR_MAGNETON, HBAR, MU0};
use crate::error::{Error, Result};
use crate::interferometer::InterferometerGeometry;
use crate::physics::{bragg_angle, velocity_nodes, Species, VelocityDistribution};
use crate::quad::adaptive_simpson;
use crate::signal::lm::{levenberg_marquardt, LmOptions, LmProblem};

/// Field modulus along the atomic path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FieldProfile {
    Uniform {
        #[serde(rename = "field_T")]
        field: f64,
        length_m: f64,
    },
    /// Piecewise-linear samples `(s, |B|)`.
    Sampled {
        positions_m: Vec<f64>,
        #[serde(rename = "field_T")]
        field: Vec<f64>,
    },
}

impl FieldProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldProfile::Uniform { field, length_m } => {
                if !(*field > 0.0) || !(*length_m >= 0.0) {
                    return Err(Error::domain("FieldProfile", "the field modulus must stay positive"));
                }
            }
            FieldProfile::Sampled { positions_m, field } => {
                if positions_m.len() != field.len() || positions_m.len() < 2 {
                    return Err(Error::domain("FieldProfile", "need at least two (position, field) samples"));
                }
                if positions_m.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::domain("FieldProfile", "positions must increase"));
                }
                if field.iter().any(|b| !(*b > 0.0)) {
                    return Err(Error::domain("FieldProfile", "the field modulus must stay positive"));
                }
            }
        }
        Ok(())
    }

    /// `integral |B| ds` in T m.
    pub fn line_integral(&self) -> f64 {
        match self {
            FieldProfile::Uniform { field, length_m } => field * length_m,
            FieldProfile::Sampled { positions_m, field } => positions_m
                .windows(2)
                .zip(field.windows(2))
                .map(|(s, b)| 0.5 * (b[0] + b[1]) * (s[1] - s[0]))
                .sum(),
        }
    }
}

/// Source of the inhomogeneous field: a small dipole near the beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DipoleSource {
    Moment {
        #[serde(rename = "moment_A_m2")]
        moment: f64,
    },
    /// Coil with a calibrated moment per ampere.
    Coil {
        #[serde(rename = "current_A")]
        current: f64,
        moment_per_ampere_m2: f64,
    },
}

impl DipoleSource {
    pub fn moment(&self) -> f64 {
        match *self {
            DipoleSource::Moment { moment } => moment,
            DipoleSource::Coil { current, moment_per_ampere_m2 } => current * moment_per_ampere_m2,
        }
    }
}

/// Separation of the two arms where the dipole sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PathSeparation {
    /// Velocity-independent separation.
    Fixed { separation_m: f64 },
    /// From the beam geometry: `2 p theta_B(v)` times the distance to M1 (or
    /// from M3 in the second half), for a dipole at `z_m`.
    AtPosition { z_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticScenario {
    pub species: Species,
    pub geometry: InterferometerGeometry,
    pub background: FieldProfile,
    pub dipole: DipoleSource,
    #[serde(rename = "dipole_distance_m")]
    pub dipole_distance: f64,
    pub separation: PathSeparation,
}

impl MagneticScenario {
    pub fn validate(&self) -> Result<()> {
        self.background.validate()?;
        if !(self.dipole_distance > 0.0) {
            return Err(Error::domain("MagneticScenario", "dipole distance must be positive"));
        }
        Ok(())
    }

    /// Arm separation at the dipole for order `p` and velocity `v`.
    pub fn separation(&self, order: i32, v: f64) -> Result<f64> {
        match self.separation {
            PathSeparation::Fixed { separation_m } => Ok(separation_m),
            PathSeparation::AtPosition { z_m } => {
                let g = &self.geometry;
                if z_m < g.z_m1 || z_m > g.z_m3 {
                    return Err(Error::domain("MagneticScenario", "the dipole must sit between M1 and M3"));
                }
                let lever = if z_m <= g.z_m2 { z_m - g.z_m1 } else { g.z_m3 - z_m };
                Ok(2.0 * bragg_angle(&self.species, v, g.laser_wavelength, order)? * lever)
            }
        }
    }

    /// Largest `|g_F|` among the hyperfine levels.
    pub fn lande_magnitude(&self) -> f64 {
        self.species.hyperfine.iter().map(|h| h.g_f.abs()).fold(0.0, f64::max)
    }
}

/// `C = integral_{-pi/2}^{pi/2} sqrt(3 cos^2 t + 1) cos t dt`, by adaptive quadrature.
pub fn angular_constant() -> f64 {
    adaptive_simpson(|t: f64| (3.0 * t.cos().powi(2) + 1.0).sqrt() * t.cos(), -PI / 2.0, PI / 2.0, 1e-13)
}

/// `g_F mu_B M_F / (hbar v) * integral |B| ds` along one arm.
pub fn zeeman_phase(scenario: &MagneticScenario, f: f64, m_f: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain("zeeman_phase", "velocity must be positive"));
    }
    scenario.background.validate()?;
    let g_f = scenario
        .species
        .g_f(f)
        .ok_or_else(|| Error::domain("zeeman_phase", format!("no hyperfine level F = {f} for {}", scenario.species.name)))?;
    if m_f.abs() > f {
        return Err(Error::domain("zeeman_phase", "|M_F| must not exceed F"));
    }
    Ok(g_f * BOHR_MAGNETON * m_f / (HBAR * v) * scenario.background.line_integral())
}

/// Phase per unit `M_F` between the two arms,
/// `phi = (|g_F| mu_B / hbar v) dx (mu0 mu / 2 pi d^3) C`.
pub fn gradient_phase(scenario: &MagneticScenario, order: i32, v: f64) -> Result<f64> {
    scenario.validate()?;
    if !(v > 0.0) {
        return Err(Error::domain("gradient_phase", "velocity must be positive"));
    }
    let dx = scenario.separation(order, v)?;
    let d = scenario.dipole_distance;
    Ok(scenario.lande_magnitude() * BOHR_MAGNETON / (HBAR * v) * dx * MU0 * scenario.dipole.moment() / (2.0 * PI * d.powi(3))
        * angular_constant())
}

/// Visibility factor for equally populated ⁷Li sublevels, `(2 + 4 cos phi + 2 cos 2 phi) / 8`.
///
/// The value is signed: it is negative where the fringes are inverted.
pub fn sublevel_visibility(phi: f64) -> f64 {
    (2.0 + 4.0 * phi.cos() + 2.0 * (2.0 * phi).cos()) / 8.0
}

/// Populations of the magnetic sublevels and their phase multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelEnsemble {
    /// `(F, M_F, population)`.
    pub levels: Vec<(f64, f64, f64)>,
    /// Phase of sublevel `(F, M_F)` is `g_F M_F / g_ref` times `phi`.
    pub reference_g: f64,
    g_factors: Vec<f64>,
}

impl SublevelEnsemble {
    /// All sublevels of all hyperfine levels equally populated.
    pub fn uniform(species: &Species) -> Self {
        let mut levels = Vec::new();
        let mut g_factors = Vec::new();
        for h in &species.hyperfine {
            let n = (2.0 * h.f).round() as i32;
            for k in 0..=n {
                levels.push((h.f, -h.f + k as f64, 0.0));
                g_factors.push(h.g_f);
            }
        }
        let w = 1.0 / levels.len() as f64;
        for l in &mut levels {
            l.2 = w;
        }
        let reference_g = species.hyperfine.iter().map(|h| h.g_f.abs()).fold(0.0, f64::max);
        SublevelEnsemble { levels, reference_g, g_factors }
    }

    pub fn with_populations(species: &Species, populations: &[f64]) -> Result<Self> {
        let mut e = Self::uniform(species);
        if populations.len() != e.levels.len() {
            return Err(Error::Invalid(format!("{} populations for {} sublevels", populations.len(), e.levels.len())));
        }
        let total: f64 = populations.iter().sum();
        if populations.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("populations must be non-negative and sum to 1".into()));
        }
        for (l, p) in e.levels.iter_mut().zip(populations) {
            l.2 = *p;
        }
        Ok(e)
    }

    /// `sum_i P_i exp(i phi g_i M_i / g_ref)`.
    pub fn contrast(&self, phi: f64) -> Complex64 {
        self.levels
            .iter()
            .zip(&self.g_factors)
            .map(|(&(_, m, p), &g)| Complex64::from_polar(p, phi * g * m / self.reference_g))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    /// Gaussian closed form, valid for `alpha << u`.
    #[default]
    ClosedForm,
    /// Quadrature over the velocity distribution with `phi ~ v^-2`.
    BruteForce,
}

/// Velocity-averaged visibility factor for a phase `phi_m` at the mean velocity.
///
/// Closed form: `cos(k phi_m)` becomes `cos(k phi_m) exp(-k^2 beta^2 / 4)` with
/// `beta = 2 phi_m alpha / u`.
pub fn averaged_visibility(phi_m: f64, dist: &VelocityDistribution, mode: AveragingMode) -> f64 {
    let r = dist.relative_spread();
    match mode {
        AveragingMode::ClosedForm => {
            if r > 0.3 {
                log::warn!("alpha/u = {r:.3}: closed-form average is outside its validity, prefer brute force");
            }
            closed_form(phi_m, r)
        }
        AveragingMode::BruteForce => {
            let u = dist.mean;
            velocity_nodes(dist).into_iter().map(|(v, w)| w * sublevel_visibility(phi_m * (u / v).powi(2))).sum()
        }
    }
}

fn closed_form(phi_m: f64, relative_spread: f64) -> f64 {
    let beta = 2.0 * phi_m * relative_spread;
    let b2 = beta * beta;
    (2.0 + 4.0 * phi_m.cos() * (-b2 / 4.0).exp() + 2.0 * (2.0 * phi_m).cos() * (-b2).exp()) / 8.0
}

/// Observed visibility `V0 |averaged(k_phi I)|` over a current sweep.
pub fn revival_curve(currents: &[f64], k_phi: f64, v0: f64, dist: &VelocityDistribution, mode: AveragingMode) -> Vec<(f64, f64)> {
    currents.iter().map(|&i| (i, v0 * averaged_visibility(k_phi * i, dist, mode).abs())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadFit {
    pub relative_spread: f64,
    pub relative_spread_sigma: f64,
    #[serde(rename = "k_phi_rad_per_A")]
    pub k_phi: f64,
    #[serde(rename = "k_phi_sigma_rad_per_A")]
    pub k_phi_sigma: f64,
    pub v0: f64,
    pub v0_sigma: f64,
    pub chi2: f64,
}

/// Fit `V0 |closed form(k_phi I, alpha/u)|` to `(current, V, sigma_V)` points.
pub fn extract_velocity_spread(points: &[(f64, f64, f64)]) -> Result<SpreadFit> {
    if points.len() < 8 {
        return Err(Error::IllConditioned(format!("{} points; need at least 8", points.len())));
    }
    if points.iter().any(|p| !(p.2 > 0.0)) {
        return Err(Error::Invalid("visibility uncertainties must be positive".into()));
    }
    let vmax = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let vmin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if !(vmax > 0.0) || vmin >= 0.25 * vmax {
        return Err(Error::IllConditioned("the sweep does not reach the first visibility zero".into()));
    }
    let i_span = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let model = |i: f64, p: &[f64]| p[0] * closed_form(p[1] * i, p[2]).abs();
    let chi2_lin = |k: f64, r: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &(i, v, s) in points {
            let f = closed_form(k * i, r).abs();
            num += f * v / (s * s);
            den += f * f / (s * s);
        }
        let v0 = if den > 0.0 { num / den } else { 0.0 };
        let c: f64 = points.iter().map(|&(i, v, s)| ((v - v0 * closed_form(k * i, r).abs()) / s).powi(2)).sum();
        (c, v0)
    };
    // the first zero lies at phi = pi/2, so k ranges from a zero at the far end to many zeros
    let k_lo = 0.5 * PI / i_span;
    let mut best = (f64::INFINITY, vmax, k_lo, 0.1);
    for a in 0..=300 {
        let k = k_lo * (1.0 + 19.0 * a as f64 / 300.0);
        for b in 0..=30 {
            let r = 0.01 * b as f64;
            let (c, v0) = chi2_lin(k, r);
            if c < best.0 {
                best = (c, v0, k, r);
            }
        }
    }
    let residuals = |p: &[f64]| -> Vec<f64> { points.iter().map(|&(i, v, s)| (v - model(i, p)) / s).collect() };
    let problem = LmProblem {
        residuals: &residuals,
        lower: vec![0.0, 0.0, 0.0],
        upper: vec![f64::INFINITY, f64::INFINITY, 0.5],
        scale: vec![vmax, best.2, 0.1],
    };
    let sol = levenberg_marquardt(&problem, &[best.1, best.2, best.3], &LmOptions::default())?;
    Ok(SpreadFit {
        relative_spread: sol.params[2],
        relative_spread_sigma: sol.sigma(2),
        k_phi: sol.params[1],
        k_phi_sigma: sol.sigma(1),
        v0: sol.params[0],
        v0_sigma: sol.sigma(0),
        chi2: sol.chi2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scenario(b: f64, length: f64) -> MagneticScenario {
        MagneticScenario {
            species: Species::li7(),
            geometry: InterferometerGeometry::default(),
            background: FieldProfile::Uniform { field: b, length_m: length },
            dipole: DipoleSource::Moment { moment: 1e-3 },
            dipole_distance: 0.02,
            separation: PathSeparation::AtPosition { z_m: 1.9 },
        }
    }

    #[test]
    fn angular_constant_closed_form() {
        // substituting u = sin t gives 2 int_0^1 sqrt(4 - 3u^2) du = 1 + 4 pi / (3 sqrt 3)
        let exact = 1.0 + 4.0 * PI / (3.0 * 3f64.sqrt());
        assert!((angular_constant() - exact).abs() < 1e-10);
        assert!((angular_constant() - 3.42).abs() < 0.01);
    }

    #[test]
    fn zeeman_phase_scale() {
        let s = scenario(4e-5, 1.21);
        let per_m = zeeman_phase(&s, 2.0, 1.0, 1060.0).unwrap();
        assert!((per_m / 2e3 - 1.0).abs() < 0.1, "{per_m}");
        assert_eq!(zeeman_phase(&s, 2.0, 0.0, 1060.0).unwrap(), 0.0);
        let fast = zeeman_phase(&s, 2.0, 1.0, 2120.0).unwrap();
        assert!((fast / per_m - 0.5).abs() < 1e-14);
        assert!(zeeman_phase(&s, 2.0, 3.0, 1060.0).is_err());
    }

    #[test]
    fn vanishing_field_rejected() {
        let s = scenario(0.0, 1.21);
        assert!(zeeman_phase(&s, 2.0, 1.0, 1060.0).is_err());
        let sampled = FieldProfile::Sampled { positions_m: vec![0.0, 1.0, 2.0], field: vec![1e-5, 2e-5, 1e-5] };
        assert!((sampled.line_integral() - 3e-5).abs() < 1e-18);
    }

    #[test]
    fn homogeneous_field_gives_no_arm_difference() {
        // the common Zeeman phase is identical on both arms; only the dipole term survives
        let mut s = scenario(4e-5, 1.21);
        s.dipole = DipoleSource::Moment { moment: 0.0 };
        assert_eq!(gradient_phase(&s, 1, 1060.0).unwrap(), 0.0);
    }

    #[test]
    fn gradient_phase_scalings() {
        let s = scenario(4e-5, 1.21);
        let base = gradient_phase(&s, 1, 1060.0).unwrap();
        assert!(base > 0.0);
        assert!((gradient_phase(&s, 1, 2120.0).unwrap() / base - 0.25).abs() < 1e-12);
        let mut far = s.clone();
        far.dipole_distance *= 2.0;
        assert!((gradient_phase(&far, 1, 1060.0).unwrap() / base - 0.125).abs() < 1e-12);
        let mut strong = s.clone();
        strong.dipole = DipoleSource::Coil { current: 3.0, moment_per_ampere_m2: 1e-3 };
        assert!((gradient_phase(&strong, 1, 1060.0).unwrap() / base - 3.0).abs() < 1e-12);
        let mut fixed = s.clone();
        fixed.separation = PathSeparation::Fixed { separation_m: 1e-4 };
        let mut fixed2 = fixed.clone();
        fixed2.separation = PathSeparation::Fixed { separation_m: 2e-4 };
        assert!((gradient_phase(&fixed2, 1, 1060.0).unwrap() / gradient_phase(&fixed, 1, 1060.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sublevel_zeros_and_revival() {
        assert_eq!(sublevel_visibility(0.0), 1.0);
        assert!(sublevel_visibility(PI / 2.0).abs() < 1e-12);
        assert!(sublevel_visibility(PI).abs() < 1e-12);
        assert!((sublevel_visibility(2.0 * PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factorised_form_on_dense_grid() {
        for i in 0..=10_000 {
            let phi = -10.0 + 20.0 * i as f64 / 10_000.0;
            let alt = phi.cos() * (1.0 + phi.cos()) / 2.0;
            assert!((sublevel_visibility(phi) - alt).abs() < 1e-14);
        }
    }

    #[test]
    fn ensemble_matches_formula() {
        let e = SublevelEnsemble::uniform(&Species::li7());
        assert_eq!(e.levels.len(), 8);
        for &phi in &[0.0, 0.3, 1.7, 4.0] {
            let c = e.contrast(phi);
            assert!((c.re - sublevel_visibility(phi)).abs() < 1e-14);
            assert!(c.im.abs() < 1e-14);
        }
        let mut pumped = vec![0.0; 8];
        pumped[7] = 1.0;
        let e = SublevelEnsemble::with_populations(&Species::li7(), &pumped).unwrap();
        assert!((e.contrast(1.3).norm() - 1.0).abs() < 1e-14);
        assert!(SublevelEnsemble::with_populations(&Species::li7(), &[0.5; 8]).is_err());
    }

    #[test]
    fn closed_form_value_at_first_revival() {
        let d = VelocityDistribution::with_relative_spread(1060.0, 0.111, 40).unwrap();
        let beta: f64 = 4.0 * PI * 0.111;
        let expect = (2.0 + 4.0 * (-beta * beta / 4.0).exp() + 2.0 * (-beta * beta).exp()) / 8.0;
        let v = averaged_visibility(2.0 * PI, &d, AveragingMode::ClosedForm);
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 0.5931).abs() < 1e-3);
    }

    #[test]
    fn monochromatic_average_is_exact() {
        let d = VelocityDistribution::monochromatic(1060.0);
        for &phi in &[0.0, 1.0, 2.5, 6.0] {
            assert_eq!(averaged_visibility(phi, &d, AveragingMode::ClosedForm), sublevel_visibility(phi));
            assert!((averaged_visibility(phi, &d, AveragingMode::BruteForce) - sublevel_visibility(phi)).abs() < 1e-15);
        }
    }

    #[test]
    fn revival_peak_decreases_with_spread() {
        let currents: Vec<f64> = (0..=400).map(|i| 4.0 + 4.0 * i as f64 / 400.0).collect();
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let d = VelocityDistribution::with_relative_spread(1060.0, 0.02 * k as f64, 40).unwrap();
            let peak = revival_curve(&currents, 1.0, 1.0, &d, AveragingMode::ClosedForm).iter().map(|p| p.1).fold(0.0, f64::max);
            assert!(peak < last);
            last = peak;
        }
        let d0 = VelocityDistribution::monochromatic(1060.0);
        let c = revival_curve(&[0.0, 2.0 * PI], 1.0, 0.8, &d0, AveragingMode::ClosedForm);
        assert!((c[0].1 - 0.8).abs() < 1e-15 && (c[1].1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn noiseless_spread_recovery() {
        let d = VelocityDistribution::with_relative_spread(1060.0, 0.111, 40).unwrap();
        let currents: Vec<f64> = (0..80).map(|i| 0.1 * i as f64).collect();
        let pts: Vec<(f64, f64, f64)> = revival_curve(&currents, 1.02, 0.845, &d, AveragingMode::ClosedForm)
            .into_iter()
            .map(|(i, v)| (i, v, 0.01))
            .collect();
        let f = extract_velocity_spread(&pts).unwrap();
        assert!((f.relative_spread - 0.111).abs() < 1e-6, "{f:?}");
        assert!((f.k_phi - 1.02).abs() < 1e-6);
        assert!((f.v0 - 0.845).abs() < 1e-6);
    }

    #[test]
    fn degenerate_sweep_rejected() {
        let pts: Vec<(f64, f64, f64)> = (0..10).map(|i| (0.01 * i as f64, 0.8, 0.01)).collect();
        assert!(matches!(extract_velocity_spread(&pts), Err(Error::IllConditioned(_))));
        assert!(matches!(extract_velocity_spread(&pts[..5]), Err(Error::IllConditioned(_))));
    }

    proptest! {
        #[test]
        fn sublevel_even_and_periodic(phi in -50.0f64..50.0) {
            prop_assert!((sublevel_visibility(phi) - sublevel_visibility(-phi)).abs() < 1e-14);
            prop_assert!((sublevel_visibility(phi) - sublevel_visibility(phi + 2.0 * PI)).abs() < 1e-12);
        }

        #[test]
        fn average_tends_to_unaveraged(phi in 0.0f64..9.0) {
            let d = VelocityDistribution::with_relative_spread(1060.0, 1e-5, 40).unwrap();
            prop_assert!((averaged_visibility(phi, &d, AveragingMode::ClosedForm) - sublevel_visibility(phi)).abs() < 1e-7);
            prop_assert!((averaged_visibility(phi, &d, AveragingMode::BruteForce) - sublevel_visibility(phi)).abs() < 1e-7);
        }

        #[test]
        fn gradient_phase_linear_in_moment(m in 1e-5f64..1e-1) {
            let mut s = MagneticScenario {
                species: Species::li7(),
                geometry: InterferometerGeometry::default(),
                background: FieldProfile::Uniform { field: 4e-5, length_m: 1.21 },
                dipole: DipoleSource::Moment { moment: 1e-3 },
                dipole_distance: 0.02,
                separation: PathSeparation::AtPosition { z_m: 1.9 },
            };
            let base = gradient_phase(&s, 2, 1060.0).unwrap();
            s.dipole = DipoleSource::Moment { moment: m };
            prop_assert!((gradient_phase(&s, 2, 1060.0).unwrap() / base - m / 1e-3).abs() < 1e-9 * m / 1e-3);
        }
    }
}
