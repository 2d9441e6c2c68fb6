//! Signal and visibility versus collimation and detector slit widths.
//!
//! Straight rays leave the source slit S0, pass the collimation slit S1 and
//! reach M1. Each ray carries its own velocity, so both its Bragg detuning and
//! the deflection `2 p theta_B(v)` differ from the nominal ones. The eight
//! leaves are propagated to the detector slit, which is centred on the nominal
//! B1 exit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::beams::{enumerate_beams, BeamTree, GratingAmplitudes, Port};
use super::geometry::InterferometerGeometry;
use crate::bragg::{design_pulse, GratingConfig, PulseTarget, TwoLevel};
use crate::error::{Error, Result};
use crate::physics::{bragg_angle, velocity_nodes, Species, VelocityDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SlitMode {
    /// Midpoint grid over both slits; the detector acceptance of each
    /// collimator cell is integrated exactly.
    Convolution { source_nodes: usize, collimator_nodes: usize },
    /// Random rays, one independent stream per scan point.
    MonteCarlo { rays: usize, seed: u64 },
}

impl Default for SlitMode {
    fn default() -> Self {
        SlitMode::Convolution { source_nodes: 24, collimator_nodes: 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitVariable {
    Collimator,
    Detector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitStudy {
    pub species: Species,
    pub geometry: InterferometerGeometry,
    pub beam: VelocityDistribution,
    /// M1, M2, M3 with `duration` quoted at the mean velocity.
    pub gratings: [GratingConfig; 3],
    pub mode: SlitMode,
    /// Counts per second per unit source area and collimator area (1/(s m^2)).
    pub brightness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitPoint {
    pub width: f64,
    pub mean_intensity: f64,
    pub visibility: f64,
    /// Fraction of all B1 flux reaching the detector.
    pub b1_collected: f64,
    pub b1_flux: f64,
    pub b2_flux: f64,
    pub stray_flux: f64,
}

#[derive(Default)]
struct Tally {
    b1: f64,
    b1_all: f64,
    b2: f64,
    stray: f64,
    fringe: Complex64,
    weight: f64,
}

impl SlitStudy {
    fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let p = self.gratings[0].order;
        if self.gratings.iter().any(|g| g.order != p) {
            return Err(Error::Invalid("slit study: all gratings must use the same order".into()));
        }
        if !(self.brightness >= 0.0) {
            return Err(Error::Invalid("slit study: brightness must be non-negative".into()));
        }
        Ok(())
    }

    /// Beam tree for one ray leaving S1 at `x1` with angle `theta`.
    fn ray_tree(&self, x1: f64, theta: f64, v: f64) -> Result<(BeamTree, f64)> {
        let g = &self.geometry;
        let u = self.beam.mean;
        let p = self.gratings[0].order;
        let tb_u = bragg_angle(&self.species, u, g.laser_wavelength, 1)?;
        let kappa = (p as f64 + theta / tb_u) * v / u;
        let detuning = 4.0 * p as f64 * (kappa - p as f64);
        let mut amps = [GratingAmplitudes::identity(); 3];
        for (a, cfg) in amps.iter_mut().zip(&self.gratings) {
            let unitary = TwoLevel::new(p, cfg.depth, cfg.duration * u / v, detuning)?;
            *a = GratingAmplitudes::new(unitary, cfg.x_position);
        }
        let deflection = 2.0 * p as f64 * tb_u * u / v;
        let x_m1 = x1 + theta * (g.z_m1 - g.z_s1);
        Ok((enumerate_beams(&amps, p, deflection, x_m1, theta, g), tb_u))
    }

    fn slit_centre(&self, tb_u: f64) -> f64 {
        2.0 * self.gratings[0].order as f64 * tb_u * self.geometry.l12()
    }
}

/// Fraction of the segment `[lo, hi]` lying inside `[a, b]`.
fn overlap_fraction(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi - lo <= 0.0 {
        return if lo >= a && lo <= b { 1.0 } else { 0.0 };
    }
    ((hi.min(b) - lo.max(a)).max(0.0)) / (hi - lo)
}

fn accumulate(t: &mut Tally, tree: &BeamTree, weight: f64, accept: impl Fn(&super::beams::BeamNode) -> f64) {
    t.weight += weight;
    let mut pairs: [(Option<Complex64>, Option<Complex64>, f64); 2] = [(None, None, 0.0); 2];
    let p = tree.order;
    for leaf in &tree.leaves {
        let f = accept(leaf);
        match leaf.port {
            Port::Stray => t.stray += weight * f * leaf.flux(),
            Port::B1 => {
                t.b1_all += weight * leaf.flux();
                t.b1 += weight * f * leaf.flux();
            }
            Port::B2 => t.b2 += weight * f * leaf.flux(),
        }
        let idx = match leaf.port {
            Port::B1 => 0,
            Port::B2 => 1,
            Port::Stray => continue,
        };
        pairs[idx].2 = f;
        if leaf.history[0] == p {
            pairs[idx].0 = Some(leaf.amplitude);
        } else {
            pairs[idx].1 = Some(leaf.amplitude);
        }
    }
    for (upper, lower, f) in pairs {
        if let (Some(a), Some(b)) = (upper, lower) {
            t.fringe += weight * f * 2.0 * a * b.conj();
        }
    }
}

fn finish(study: &SlitStudy, width: f64, e0: f64, e1: f64, t: Tally) -> SlitPoint {
    let w = t.weight.max(f64::MIN_POSITIVE);
    let total = (t.b1 + t.b2 + t.stray) / w;
    SlitPoint {
        width,
        mean_intensity: study.brightness * e0 * e1 * total,
        visibility: if total > 0.0 { t.fringe.norm() / w / total } else { 0.0 },
        b1_collected: if t.b1_all > 0.0 { t.b1 / t.b1_all } else { 0.0 },
        b1_flux: t.b1 / w,
        b2_flux: t.b2 / w,
        stray_flux: t.stray / w,
    }
}

fn convolution_point(study: &SlitStudy, e0: f64, e1: f64, ed: f64, ns: usize, nc: usize) -> Result<SlitPoint> {
    let g = &study.geometry;
    let l01 = g.collimation_length();
    let vnodes = velocity_nodes(&study.beam);
    let (ns, nc) = (ns.max(1), nc.max(1));
    let h1 = e1 / nc as f64;
    // every leaf position at SD moves by this much per unit x1
    let slope = 1.0 + (g.z_sd - g.z_s1) / l01;
    let mut tally = Tally::default();
    let mut centre = None;
    for &(v, wv) in &vnodes {
        for i in 0..ns {
            let x0 = e0 * ((i as f64 + 0.5) / ns as f64 - 0.5);
            for j in 0..nc {
                let x1 = e1 * ((j as f64 + 0.5) / nc as f64 - 0.5);
                let (tree, tb_u) = study.ray_tree(x1, (x1 - x0) / l01, v)?;
                let c = *centre.get_or_insert_with(|| study.slit_centre(tb_u));
                let (a, b) = (c - 0.5 * ed, c + 0.5 * ed);
                let half = 0.5 * h1 * slope;
                accumulate(&mut tally, &tree, wv / (ns * nc) as f64, |leaf| {
                    let x = leaf.position(g.z_sd, g);
                    overlap_fraction(x - half, x + half, a, b)
                });
            }
        }
    }
    Ok(finish(study, ed, e0, e1, tally))
}

fn monte_carlo_point(study: &SlitStudy, e0: f64, e1: f64, ed: f64, rays: usize, seed: u64, stream: u64) -> Result<SlitPoint> {
    let g = &study.geometry;
    let l01 = g.collimation_length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let speed = Normal::new(study.beam.mean, study.beam.width / std::f64::consts::SQRT_2)
        .map_err(|e| Error::Invalid(format!("velocity distribution: {e}")))?;
    let mut tally = Tally::default();
    let tb_u = bragg_angle(&study.species, study.beam.mean, g.laser_wavelength, 1)?;
    let c = study.slit_centre(tb_u);
    let (a, b) = (c - 0.5 * ed, c + 0.5 * ed);
    let mut drawn = 0;
    while drawn < rays {
        let x0 = e0 * (rng.random::<f64>() - 0.5);
        let x1 = e1 * (rng.random::<f64>() - 0.5);
        let v = speed.sample(&mut rng);
        if v <= 0.0 {
            continue;
        }
        drawn += 1;
        let (tree, _) = study.ray_tree(x1, (x1 - x0) / l01, v)?;
        accumulate(&mut tally, &tree, 1.0, |leaf| {
            let x = leaf.position(g.z_sd, g);
            if x >= a && x <= b {
                1.0
            } else {
                0.0
            }
        });
    }
    Ok(finish(study, ed, e0, e1, tally))
}

/// Mean intensity and visibility as one slit width is varied; the other
/// widths come from the geometry.
pub fn slit_scan(study: &SlitStudy, variable: SlitVariable, widths: &[f64]) -> Result<Vec<SlitPoint>> {
    study.validate()?;
    if widths.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Invalid("slit widths must be non-negative".into()));
    }
    let g = &study.geometry;
    widths
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let (e1, ed) = match variable {
                SlitVariable::Collimator => (w, g.detector_width),
                SlitVariable::Detector => (g.collimator_width, w),
            };
            match study.mode {
                SlitMode::Convolution { source_nodes, collimator_nodes } => {
                    convolution_point(study, g.source_width, e1, ed, source_nodes, collimator_nodes)
                }
                SlitMode::MonteCarlo { rays, seed } => monte_carlo_point(study, g.source_width, e1, ed, rays, seed, k as u64),
            }
        })
        .collect()
}

/// Slopes of a continuous two-segment line through the origin fitted to
/// `(width, I0)`; the breakpoint is chosen on the data grid by least squares.
/// Returns `(breakpoint, initial slope, final slope)`.
pub fn two_slope_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 5 {
        return Err(Error::IllConditioned("two-slope fit needs at least five points".into()));
    }
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 2..points.len() - 2 {
        let b = points[k].0;
        // model: s1 * min(w, b) + s2 * max(w - b, 0)
        let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(w, y) in points {
            let f1 = w.min(b);
            let f2 = (w - b).max(0.0);
            a11 += f1 * f1;
            a12 += f1 * f2;
            a22 += f2 * f2;
            r1 += f1 * y;
            r2 += f2 * y;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            continue;
        }
        let s1 = (r1 * a22 - r2 * a12) / det;
        let s2 = (a11 * r2 - a12 * r1) / det;
        let sse: f64 = points.iter().map(|&(w, y)| (y - s1 * w.min(b) - s2 * (w - b).max(0.0)).powi(2)).sum();
        if best.is_none_or(|bb| sse < bb.3) {
            best = Some((b, s1, s2, sse));
        }
    }
    best.map(|(b, s1, s2, _)| (b, s1, s2)).ok_or_else(|| Error::IllConditioned("two-slope fit is singular".into()))
}

/// Default geometry with an ideal `p = 1` splitter/mirror/splitter at the
/// mean velocity and a 13.3% velocity spread.
pub fn default_study(species: Species) -> Result<SlitStudy> {
    let tau = 3.747;
    let beam = VelocityDistribution::with_relative_spread(1060.0, 0.133, 9)?;
    let split = GratingConfig::new(1, design_pulse(1, tau, PulseTarget::Splitter)?, tau);
    let mirror = GratingConfig::new(1, design_pulse(1, tau, PulseTarget::Mirror)?, tau);
    Ok(SlitStudy {
        species,
        geometry: InterferometerGeometry::default(),
        beam,
        gratings: [split, mirror, split],
        mode: SlitMode::default(),
        brightness: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn study() -> SlitStudy {
        default_study(Species::li7()).unwrap()
    }

    #[test]
    fn closed_detector_gives_no_signal() {
        let s = study();
        let pts = slit_scan(&s, SlitVariable::Detector, &[0.0, 5e-6]).unwrap();
        assert_eq!(pts[0].mean_intensity, 0.0);
        assert!(pts[1].mean_intensity > 0.0);
        assert!(pts[1].visibility > 0.3);
    }

    #[test]
    fn wide_detector_collects_complementary_ports() {
        let s = study();
        let pts = slit_scan(&s, SlitVariable::Detector, &[30e-6, 2e-3]).unwrap();
        assert!(pts[1].b1_collected > 0.999);
        assert!(pts[1].visibility < 0.5 * pts[0].visibility, "{:?}", pts);
    }

    #[test]
    fn monte_carlo_agrees_with_convolution() {
        let mut s = study();
        let widths = [40e-6, 100e-6];
        let conv = slit_scan(&s, SlitVariable::Detector, &widths).unwrap();
        s.mode = SlitMode::MonteCarlo { rays: 40_000, seed: 7 };
        let mc = slit_scan(&s, SlitVariable::Detector, &widths).unwrap();
        for (a, b) in conv.iter().zip(&mc) {
            assert!((a.mean_intensity - b.mean_intensity).abs() < 0.02 * a.mean_intensity, "{a:?} {b:?}");
            assert!((a.visibility - b.visibility).abs() < 0.02, "{a:?} {b:?}");
        }
        let again = slit_scan(&s, SlitVariable::Detector, &widths).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn two_slope_recovers_kinked_line() {
        let pts: Vec<(f64, f64)> = (0..40).map(|i| {
            let w = i as f64;
            (w, 3.0 * w.min(17.0) + 1.2 * (w - 17.0).max(0.0))
        }).collect();
        let (b, s1, s2) = two_slope_fit(&pts).unwrap();
        assert_eq!(b, 17.0);
        assert!((s1 - 3.0).abs() < 1e-12 && (s2 - 1.2).abs() < 1e-12);
    }

    #[test]
    fn overlap_fraction_cases() {
        assert_eq!(overlap_fraction(0.0, 1.0, 0.25, 0.75), 0.5);
        assert_eq!(overlap_fraction(0.0, 1.0, 2.0, 3.0), 0.0);
        assert_eq!(overlap_fraction(0.5, 0.5, 0.0, 1.0), 1.0);
    }
}
