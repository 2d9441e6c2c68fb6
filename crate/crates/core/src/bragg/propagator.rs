//! Truncated momentum-basis propagator for an atom in a standing wave.
//!
//! The state is expanded on `|kappa + 2n>` for `n` in `[-N, N]` (momenta in
//! units of `k_L`). With the constant light shift removed the amplitudes obey
//!
//! ```text
//! i dc_n/dtau = (kappa + 2n)^2 c_n + q(tau) (c_{n-1} + c_{n+1})
//! ```
//!
//! The Hamiltonian is real symmetric and tridiagonal. A square pulse is
//! propagated with one exact exponential from its eigen-decomposition; a
//! Gaussian pulse is cut into short slabs, each exponentiated exactly at its
//! midpoint depth. Both routes are unitary to rounding.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convergence threshold on any `|c_n|^2` when the basis grows by two orders.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Number of slabs used for a Gaussian pulse.
const GAUSSIAN_SLABS: usize = 240;
/// Half-length of the Gaussian pulse window in units of its 1/e^2 half-width.
const GAUSSIAN_WINDOW: f64 = 2.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseProfile {
    /// Constant depth `q` for a time `tau`.
    Square,
    /// `q exp(-2 s^2 / w^2)` with the same area `q tau` as the square pulse.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    /// Incident momentum `kappa = k_x / k_L`.
    pub center: f64,
    pub truncation: usize,
    /// `amplitudes[i]` belongs to order `n = i - truncation`.
    pub amplitudes: Vec<Complex64>,
}

impl AmplitudeVector {
    pub fn amplitude(&self, n: i32) -> Complex64 {
        let idx = n + self.truncation as i32;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[idx as usize]
        }
    }

    pub fn population(&self, n: i32) -> f64 {
        self.amplitude(n).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn orders(&self) -> impl Iterator<Item = i32> + '_ {
        let n = self.truncation as i32;
        -n..=n
    }
}

fn hamiltonian(kappa: f64, q: f64, n: usize) -> DMatrix<f64> {
    let dim = 2 * n + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let k = kappa + 2.0 * (i as f64 - n as f64);
        h[(i, i)] = k * k;
        if i + 1 < dim {
            h[(i, i + 1)] = q;
            h[(i + 1, i)] = q;
        }
    }
    h
}

/// `psi <- exp(-i H t) psi` for real symmetric `H`.
fn evolve_exact(h: DMatrix<f64>, t: f64, psi: &mut [Complex64]) {
    let dim = psi.len();
    let eig = SymmetricEigen::new(h);
    let vecs = &eig.eigenvectors;
    let mut proj = vec![Complex64::new(0.0, 0.0); dim];
    for (j, pj) in proj.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in psi.iter().enumerate() {
            acc += vecs[(i, j)] * c;
        }
        *pj = acc * Complex64::from_polar(1.0, -eig.eigenvalues[j] * t);
    }
    for (i, c) in psi.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, pj) in proj.iter().enumerate() {
            acc += vecs[(i, j)] * pj;
        }
        *c = acc;
    }
}

/// Propagate the incident state `|kappa>` on a fixed basis of `2N+1` orders.
pub fn propagate(kappa: f64, q: f64, tau: f64, n: usize, profile: PulseProfile) -> AmplitudeVector {
    let dim = 2 * n + 1;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[n] = Complex64::new(1.0, 0.0);
    if q != 0.0 && tau != 0.0 {
        match profile {
            PulseProfile::Square => evolve_exact(hamiltonian(kappa, q, n), tau, &mut psi),
            PulseProfile::Gaussian => {
                let half_width = tau / FRAC_PI_2.sqrt();
                let span = 2.0 * GAUSSIAN_WINDOW * half_width;
                let ds = span / GAUSSIAN_SLABS as f64;
                for k in 0..GAUSSIAN_SLABS {
                    let s = -GAUSSIAN_WINDOW * half_width + (k as f64 + 0.5) * ds;
                    let qs = q * (-2.0 * s * s / (half_width * half_width)).exp();
                    evolve_exact(hamiltonian(kappa, qs, n), ds, &mut psi);
                }
            }
        }
    } else if tau != 0.0 {
        // free evolution only contributes a global phase on the single occupied order
        let phase = -(kappa * kappa) * tau;
        psi[n] = Complex64::from_polar(1.0, phase);
    }
    AmplitudeVector { center: kappa, truncation: n, amplitudes: psi }
}

/// Propagate and check convergence in the basis size.
///
/// The state is computed with `N` and `N + 2` orders on each side; if any
/// population moves by more than [`TRUNCATION_TOLERANCE`] a truncation error
/// is returned. On success the larger-basis result is returned.
pub fn bloch_propagate(kappa: f64, q: f64, tau: f64, n: usize, profile: PulseProfile) -> Result<AmplitudeVector> {
    if !q.is_finite() || !tau.is_finite() || !kappa.is_finite() {
        return Err(Error::domain("bloch_propagate", "q, tau and k_x must be finite"));
    }
    let needed = kappa.abs().ceil() as usize + 2;
    if n < needed {
        return Err(Error::domain("bloch_propagate", format!("basis N = {n} too small for k_x = {kappa}; need N >= {needed}")));
    }
    let small = propagate(kappa, q, tau, n, profile);
    let large = propagate(kappa, q, tau, n + 2, profile);
    let change = large
        .orders()
        .map(|k| (large.population(k) - small.population(k)).abs())
        .fold(0.0, f64::max);
    if change > TRUNCATION_TOLERANCE {
        return Err(Error::Truncation { n, change });
    }
    Ok(large)
}
