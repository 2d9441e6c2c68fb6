//! Rocking-curve simulation: transmitted zeroth order versus mirror angle.

use serde::{Deserialize, Serialize};

use super::propagator::{propagate, PulseProfile};
use crate::error::{Error, Result};
use crate::physics::{bragg_angle, velocity_nodes, Species, VelocityDistribution};

/// Angular distribution of the incident beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AngularSpread {
    /// Perfectly collimated.
    None,
    /// Straight rays through two slits of widths `source_width` and
    /// `collimator_width` separated by `separation`, sampled on `nodes`
    /// midpoints across each slit.
    Collimation { source_width: f64, collimator_width: f64, separation: f64, nodes: usize },
}

impl AngularSpread {
    /// Angles (rad) and weights.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match *self {
            AngularSpread::None => vec![(0.0, 1.0)],
            AngularSpread::Collimation { source_width, collimator_width, separation, nodes } => {
                let n = nodes.max(1);
                let w = 1.0 / (n * n) as f64;
                let mid = |width: f64, i: usize| width * ((i as f64 + 0.5) / n as f64 - 0.5);
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        out.push(((mid(collimator_width, j) - mid(source_width, i)) / separation, w));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSetup {
    pub species: Species,
    pub laser_wavelength: f64,
    pub beam: VelocityDistribution,
    pub angular: AngularSpread,
    /// Depth `q` of the standing wave.
    pub depth: f64,
    /// Duration `tau` for an atom at the mean velocity.
    pub duration: f64,
    pub profile: PulseProfile,
    pub theta_start: f64,
    pub theta_stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub theta_y: f64,
    pub transmitted: f64,
}

fn basis_size(kappa: f64, q: f64) -> usize {
    kappa.abs().ceil() as usize + 4 + (2.0 * q.abs().sqrt()).ceil() as usize
}

/// Zeroth-order transmission versus mirror rotation `theta_y`.
///
/// `theta_y = 0` is normal incidence on the standing wave, so the Bragg
/// condition of order `p` sits at `theta_y = p theta_B`. Every point is
/// averaged over the velocity nodes and the collimation angles; the depth is
/// velocity independent while the duration scales as `u/v`.
pub fn diffraction_scan(setup: &ScanSetup) -> Result<Vec<ScanPoint>> {
    if setup.points < 2 {
        return Err(Error::Invalid("diffraction scan needs at least two points".into()));
    }
    let u = setup.beam.mean;
    let vnodes = velocity_nodes(&setup.beam);
    let anodes = setup.angular.nodes();
    let per_v: Vec<(f64, f64, f64)> = vnodes
        .iter()
        .map(|&(v, w)| Ok((bragg_angle(&setup.species, v, setup.laser_wavelength, 1)?, setup.duration * u / v, w)))
        .collect::<Result<_>>()?;
    let step = (setup.theta_stop - setup.theta_start) / (setup.points - 1) as f64;
    let out = (0..setup.points)
        .map(|i| {
            let theta = setup.theta_start + step * i as f64;
            let mut acc = 0.0;
            for &(theta_b, tau, wv) in &per_v {
                for &(dtheta, wa) in &anodes {
                    let kappa = (theta + dtheta) / theta_b;
                    let n = basis_size(kappa, setup.depth);
                    let a = propagate(kappa, setup.depth, tau, n, setup.profile);
                    acc += wv * wa * a.population(0);
                }
            }
            ScanPoint { theta_y: theta, transmitted: acc }
        })
        .collect();
    Ok(out)
}

/// Interior local minima of a scan.
pub fn find_minima(curve: &[ScanPoint]) -> Vec<ScanPoint> {
    curve
        .windows(3)
        .filter(|w| w[1].transmitted < w[0].transmitted && w[1].transmitted <= w[2].transmitted)
        .map(|w| w[1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bragg::bloch_propagate;

    fn setup(depth: f64, duration: f64, beam: VelocityDistribution, angular: AngularSpread) -> ScanSetup {
        ScanSetup {
            species: Species::li7(),
            laser_wavelength: 671e-9,
            beam,
            angular,
            depth,
            duration,
            profile: PulseProfile::Square,
            theta_start: -2.5 * 80e-6,
            theta_stop: 4.5 * 80e-6,
            points: 71,
        }
    }

    #[test]
    fn zero_power_is_flat() {
        let s = setup(0.0, 2.0, VelocityDistribution::monochromatic(1060.0), AngularSpread::None);
        for p in diffraction_scan(&s).unwrap() {
            assert!((p.transmitted - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_heuristic_is_converged() {
        for &(kappa, q) in &[(4.3, 1.0), (0.2, 4.0), (-2.1, 9.0)] {
            let n = basis_size(kappa, q);
            let a = propagate(kappa, q, 1.5, n, PulseProfile::Square);
            let b = bloch_propagate(kappa, q, 1.5, n, PulseProfile::Square).unwrap();
            assert!((a.population(0) - b.population(0)).abs() < 1e-6);
        }
    }

    #[test]
    fn monochromatic_mirror_empties_zeroth_order() {
        let li7 = Species::li7();
        let tb = bragg_angle(&li7, 1060.0, 671e-9, 1).unwrap();
        let q = 0.2;
        let mut s = setup(q, std::f64::consts::FRAC_PI_2 / q, VelocityDistribution::monochromatic(1060.0), AngularSpread::None);
        s.theta_start = 0.0;
        s.theta_stop = 2.0 * tb;
        s.points = 3;
        let scan = diffraction_scan(&s).unwrap();
        assert!(scan[1].transmitted < 0.02, "{}", scan[1].transmitted);
    }

    #[test]
    fn averaging_makes_every_dip_shallower() {
        let li7 = Species::li7();
        let tb = bragg_angle(&li7, 1060.0, 671e-9, 1).unwrap();
        let collimation = AngularSpread::Collimation { source_width: 20e-6, collimator_width: 10e-6, separation: 0.78, nodes: 5 };
        let hot = VelocityDistribution::with_relative_spread(1060.0, 0.133, 9).unwrap();
        let (q, tau) = (1.1, 1.4);
        let mono = setup(q, tau, VelocityDistribution::monochromatic(1060.0), AngularSpread::None);
        let avg = setup(q, tau, hot, collimation);
        for p in [-2, -1, 1, 2, 3, 4] {
            let at = |s: &ScanSetup| {
                let mut s = s.clone();
                s.theta_start = p as f64 * tb;
                s.theta_stop = s.theta_start + 1e-9;
                diffraction_scan(&s).unwrap()[0].transmitted
            };
            let (m, a) = (at(&mono), at(&avg));
            if 1.0 - m > 0.01 {
                assert!(a > m, "order {p}: averaged {a} vs monochromatic {m}");
            }
        }
    }
}
