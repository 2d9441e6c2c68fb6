use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::FringeModel;

pub const DEFAULT_COUNTING_TIME: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Synthetic { model: FringeModel, phase_coefficients: Vec<f64> },
    External { source: String },
}

/// Detector counts recorded while the piezo drive of M3 is swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTrace {
    pub drive: Vec<f64>,
    pub counts: Vec<u64>,
    /// Bin length in seconds.
    #[serde(rename = "counting_time_s")]
    pub counting_time: f64,
    pub seed: Option<u64>,
    pub provenance: Provenance,
    /// Counts per bin with the atom beam blocked, same bin length.
    #[serde(default)]
    pub background: Vec<u64>,
}

impl CountTrace {
    pub fn validate(&self) -> Result<()> {
        if self.drive.len() != self.counts.len() {
            return Err(Error::Invalid("drive and counts must have the same length".into()));
        }
        if !(self.counting_time > 0.0) {
            return Err(Error::Invalid("counting time must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Drive values and the fringe phase they produce, `phi(x) = sum_k c_k x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub drive: Vec<f64>,
    pub phase_coefficients: Vec<f64>,
}

impl Sweep {
    /// `n` evenly spaced drive values on `[0, 1]` covering `fringes` periods,
    /// with a quadratic term `nonlinearity` (rad at full drive).
    pub fn linear(n: usize, fringes: f64, nonlinearity: f64) -> Self {
        let drive = (0..n).map(|i| i as f64 / (n.max(2) - 1) as f64).collect();
        Sweep { drive, phase_coefficients: vec![0.0, 2.0 * std::f64::consts::PI * fringes, nonlinearity] }
    }

    pub fn phase(&self, x: f64) -> f64 {
        self.phase_coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Rare additive bursts: with probability `probability` per bin, a
/// Pareto-distributed number of extra counts with minimum `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstNoise {
    pub probability: f64,
    pub scale: f64,
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    #[serde(rename = "counting_time_s")]
    pub counting_time: f64,
    pub seed: u64,
    /// Number of beam-blocked background bins recorded with the trace.
    pub background_bins: usize,
    pub burst: Option<BurstNoise>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { counting_time: DEFAULT_COUNTING_TIME, seed: 0, background_bins: 0, burst: None }
    }
}

fn draw(rng: &mut ChaCha8Rng, mean: f64, burst: Option<&(BurstNoise, Pareto<f64>)>) -> Result<u64> {
    let mut n = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::Invalid(format!("poisson mean {mean}: {e}")))?.sample(rng) as u64
    } else {
        0
    };
    if let Some((b, pareto)) = burst {
        if rng.random::<f64>() < b.probability {
            n += pareto.sample(rng).round() as u64;
        }
    }
    Ok(n)
}

/// Poisson counts with mean `(I_B + I0 (1 + V cos(phi(x) + phase_offset))) T_c` per bin.
pub fn synthesize_counts(model: &FringeModel, sweep: &Sweep, opts: &SynthesisOptions) -> Result<CountTrace> {
    model.validate()?;
    if sweep.drive.len() < 2 {
        return Err(Error::Invalid("a sweep needs at least two points".into()));
    }
    if !(opts.counting_time > 0.0) {
        return Err(Error::Invalid("counting time must be positive".into()));
    }
    let burst = match opts.burst {
        Some(b) => Some((b, Pareto::new(b.scale, b.shape).map_err(|e| Error::Invalid(format!("burst noise: {e}")))?)),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let counts = sweep
        .drive
        .iter()
        .map(|&x| draw(&mut rng, model.rate(sweep.phase(x)) * opts.counting_time, burst.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let background = (0..opts.background_bins)
        .map(|_| draw(&mut rng, model.background * opts.counting_time, burst.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CountTrace {
        drive: sweep.drive.clone(),
        counts,
        counting_time: opts.counting_time,
        seed: Some(opts.seed),
        provenance: Provenance::Synthetic { model: *model, phase_coefficients: sweep.phase_coefficients.clone() },
        background,
    })
}
