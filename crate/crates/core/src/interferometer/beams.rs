//! The eight-leaf beam tree of a three-grating interferometer with two
//! diffraction orders (0 and +-p) per grating.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::InterferometerGeometry;
use crate::bragg::TwoLevel;

/// Flux conservation threshold for unitary gratings.
pub const FLUX_TOLERANCE: f64 = 1e-12;

/// One grating as seen by the beam: its two-level unitary and its x-position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingAmplitudes {
    pub unitary: TwoLevel,
    pub x_position: f64,
}

impl GratingAmplitudes {
    pub fn new(unitary: TwoLevel, x_position: f64) -> Self {
        GratingAmplitudes { unitary, x_position }
    }

    pub fn identity() -> Self {
        GratingAmplitudes { unitary: TwoLevel::identity(), x_position: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    B1,
    B2,
    Stray,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamNode {
    /// Diffraction order taken at each grating.
    pub history: [i32; 3],
    pub amplitude: Complex64,
    /// Transverse position at M1, M2, M3.
    pub x_at_gratings: [f64; 3],
    /// Direction (rad) before M1 and after M1, M2, M3.
    pub directions: [f64; 4],
    pub port: Port,
}

impl BeamNode {
    pub fn flux(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    /// Straight-line position at any `z` downstream of the source.
    pub fn position(&self, z: f64, geom: &InterferometerGeometry) -> f64 {
        let zs = [geom.z_m1, geom.z_m2, geom.z_m3];
        if z <= zs[0] {
            return self.x_at_gratings[0] + self.directions[0] * (z - zs[0]);
        }
        let seg = if z <= zs[1] { 0 } else if z <= zs[2] { 1 } else { 2 };
        self.x_at_gratings[seg] + self.directions[seg + 1] * (z - zs[seg])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamTree {
    pub order: i32,
    pub leaves: Vec<BeamNode>,
    /// `1 - sum of leaf fluxes`; zero within [`FLUX_TOLERANCE`] for unitary gratings.
    pub flux_deficit: f64,
}

impl BeamTree {
    pub fn is_flux_conserved(&self) -> bool {
        self.flux_deficit.abs() <= FLUX_TOLERANCE
    }

    /// Coherent intensity of an exit port (B1 or B2); stray leaves add incoherently.
    pub fn port_intensity(&self, port: Port) -> f64 {
        match port {
            Port::Stray => self.leaves.iter().filter(|l| l.port == Port::Stray).map(BeamNode::flux).sum(),
            _ => self.leaves.iter().filter(|l| l.port == port).map(|l| l.amplitude).sum::<Complex64>().norm_sqr(),
        }
    }

    pub fn leaf(&self, history: [i32; 3]) -> Option<&BeamNode> {
        self.leaves.iter().find(|l| l.history == history)
    }

    /// Points `z` (downstream of M3) where a stray leaf crosses B1 or B2.
    pub fn stray_crossings(&self, geom: &InterferometerGeometry) -> Vec<([i32; 3], Port, f64)> {
        let mut out = Vec::new();
        for s in self.leaves.iter().filter(|l| l.port == Port::Stray) {
            for m in self.leaves.iter().filter(|l| l.port != Port::Stray) {
                let ds = s.directions[3] - m.directions[3];
                if ds.abs() < 1e-18 {
                    continue;
                }
                let dz = (m.x_at_gratings[2] - s.x_at_gratings[2]) / ds;
                if dz > 0.0 && !out.iter().any(|o: &([i32; 3], Port, f64)| o.0 == s.history && o.1 == m.port) {
                    out.push((s.history, m.port, geom.z_m3 + dz));
                }
            }
        }
        out
    }
}

fn classify(h: [i32; 3], p: i32) -> Port {
    match h {
        [a, b, 0] if a == p && b == -p => Port::B1,
        [0, a, b] if a == p && b == -p => Port::B1,
        [a, b, c] if a == p && b == -p && c == p => Port::B2,
        [0, a, 0] if a == p => Port::B2,
        _ => Port::Stray,
    }
}

/// Enumerate all leaves at the three gratings.
///
/// The incident ray crosses M1 at `x_in` with direction `angle_in`; each
/// diffraction of order `+p` deflects by `+deflection` (= `2 p theta_B`) and
/// multiplies the amplitude by `exp(-i p k_G x_j)`; order `-p` does the
/// opposite. Undiffracted amplitudes are `stay` for the incident direction and
/// its conjugate for the deflected one.
pub fn enumerate_beams(
    gratings: &[GratingAmplitudes; 3],
    order: i32,
    deflection: f64,
    x_in: f64,
    angle_in: f64,
    geom: &InterferometerGeometry,
) -> BeamTree {
    let kg = geom.k_g();
    let zs = [geom.z_m1, geom.z_m2, geom.z_m3];
    let mut leaves = Vec::with_capacity(8);
    for mask in 0..8u32 {
        let mut history = [0i32; 3];
        let mut amp = Complex64::new(1.0, 0.0);
        let mut deflected = false;
        let mut x = x_in;
        let mut xs = [0.0; 3];
        let mut dirs = [angle_in; 4];
        for j in 0..3 {
            if j > 0 {
                x += dirs[j] * (zs[j] - zs[j - 1]);
            }
            xs[j] = x;
            let g = &gratings[j];
            let flips = mask >> (2 - j) & 1 == 1;
            if flips {
                let sign = if deflected { -1 } else { 1 };
                history[j] = sign * order;
                let phase = -(sign as f64) * order as f64 * kg * g.x_position;
                amp *= g.unitary.flip * Complex64::from_polar(1.0, phase);
                deflected = !deflected;
            } else {
                amp *= if deflected { g.unitary.stay.conj() } else { g.unitary.stay };
            }
            dirs[j + 1] = angle_in + if deflected { deflection } else { 0.0 };
        }
        leaves.push(BeamNode { history, amplitude: amp, x_at_gratings: xs, directions: dirs, port: classify(history, order) });
    }
    let total: f64 = leaves.iter().map(BeamNode::flux).sum();
    let flux_deficit = 1.0 - total;
    if flux_deficit.abs() > FLUX_TOLERANCE {
        log::warn!("beam tree is not flux conserving: deficit {flux_deficit:.3e}");
    }
    BeamTree { order, leaves, flux_deficit }
}
