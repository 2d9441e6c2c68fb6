//! Detector count synthesis and parameter extraction.

mod counts;
mod fit;
pub mod lm;

pub use counts::{synthesize_counts, BurstNoise, CountTrace, Provenance, Sweep, SynthesisOptions, DEFAULT_COUNTING_TIME};
pub use fit::{
    figure_of_merit, fit_fringe_samples, fit_fringes, fit_sinc, phase_noise, phase_sensitivity, BackgroundMode, FitResult,
    FringeFitOptions, SincFit, SincLaw,
};
