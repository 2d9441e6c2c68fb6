use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::counts::CountTrace;
use super::lm::{levenberg_marquardt, LmOptions, LmProblem};
use crate::error::{Error, Result};
use crate::interferometer::sinc;

/// How the background rate is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BackgroundMode {
    /// Co-fit from the beam-blocked record stored with the trace.
    #[default]
    Record,
    /// Fixed, independently measured rate.
    Known { rate_counts_per_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFitOptions {
    /// Degree of the phase polynomial in the drive value.
    pub phase_degree: usize,
    pub background: BackgroundMode,
}

impl Default for FringeFitOptions {
    fn default() -> Self {
        FringeFitOptions { phase_degree: 2, background: BackgroundMode::Record }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "background_counts_per_s")]
    pub background: f64,
    #[serde(rename = "background_sigma_counts_per_s")]
    pub background_sigma: f64,
    #[serde(rename = "mean_intensity_counts_per_s")]
    pub mean_intensity: f64,
    #[serde(rename = "mean_intensity_sigma_counts_per_s")]
    pub mean_intensity_sigma: f64,
    pub visibility: f64,
    pub visibility_sigma: f64,
    /// `phi(x) = sum_k c_k x^k` in raw drive units, rad / unit^k.
    #[serde(rename = "phase_coefficients_rad")]
    pub phase_coefficients: Vec<f64>,
    pub parameter_names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub degrees_of_freedom: usize,
    pub iterations: usize,
    /// The visibility ended on 0 or 1.
    pub at_boundary: bool,
}

impl FitResult {
    pub fn phase(&self, x: f64) -> f64 {
        self.phase_coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Lowest fringe frequency on the normalised drive `[-1, 1]`: half a fringe
/// across the sweep. Below it a fringe cannot be told apart from a slope.
const MIN_FREQUENCY: f64 = std::f64::consts::FRAC_PI_2;

/// Best single-frequency sinusoid `A + B cos(w s + c s^2) + C sin(...)` by
/// grid search over `w` and `c`.
fn initial_sinusoid(s: &[f64], y: &[f64], quadratic: bool) -> (f64, f64, f64, f64, f64) {
    let n = s.len();
    let fit = |w: f64, c: f64| {
        let mut m = Matrix3::zeros();
        let mut b = Vector3::zeros();
        for (&si, &yi) in s.iter().zip(y) {
            let (sn, cs) = (w * si + c * si * si).sin_cos();
            let row = Vector3::new(1.0, cs, sn);
            m += row * row.transpose();
            b += row * yi;
        }
        let coef = m.lu().solve(&b)?;
        let sse: f64 = s.iter().zip(y).map(|(&si, &yi)| {
            let (sn, cs) = (w * si + c * si * si).sin_cos();
            (yi - coef[0] - coef[1] * cs - coef[2] * sn).powi(2)
        }).sum();
        Some((sse, coef))
    };
    // a 2-unit span sampled n times resolves w up to pi (n-1)/2
    let w_max = (std::f64::consts::PI * (n as f64 - 1.0) / 4.0).max(2.0);
    let mut best = (f64::INFINITY, 0.0, 0.0, Vector3::zeros());
    let mut w = MIN_FREQUENCY;
    while w <= w_max {
        if let Some((sse, coef)) = fit(w, 0.0) {
            if sse < best.0 {
                best = (sse, w, 0.0, coef);
            }
        }
        w += 0.2;
    }
    if quadratic {
        let w0 = best.1;
        for i in -10..=10 {
            for k in -6..=6 {
                let w = w0 + 0.02 * i as f64;
                let c = 0.05 * w0 * k as f64;
                if let Some((sse, coef)) = fit(w, c) {
                    if sse < best.0 {
                        best = (sse, w, c, coef);
                    }
                }
            }
        }
    }
    let (_, w, c, coef) = best;
    (coef[0], coef[1], coef[2], w, c)
}

/// Fit `counts = T_c (I_B + I0 (1 + V cos(phi(x))))` with Poisson weights.
///
/// `counts` may be non-integer (expected counts). The drive is mapped onto
/// `[-1, 1]` for the fit and the phase polynomial is returned in raw units.
/// The sweep must cover at least half a fringe. Since `cos` is even, the
/// linear phase coefficient on the normalised drive is taken non-negative.
pub fn fit_fringe_samples(
    drive: &[f64],
    counts: &[f64],
    counting_time: f64,
    background_record: &[f64],
    opts: &FringeFitOptions,
) -> Result<FitResult> {
    let n = drive.len();
    if counts.len() != n {
        return Err(Error::Invalid("drive and counts must have the same length".into()));
    }
    if opts.phase_degree == 0 {
        return Err(Error::Invalid("phase polynomial degree must be at least 1".into()));
    }
    let (xmin, xmax) = drive.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(xmax > xmin) {
        return Err(Error::IllConditioned("drive values do not span an interval".into()));
    }
    let deg = opts.phase_degree;
    let n_par = 2 + (deg + 1) + usize::from(opts.background == BackgroundMode::Record);
    if n < n_par + 2 {
        return Err(Error::IllConditioned(format!("{n} samples for {n_par} parameters")));
    }
    let a = 2.0 / (xmax - xmin);
    let b = -1.0 - a * xmin;
    let s: Vec<f64> = drive.iter().map(|x| a * x + b).collect();
    let tc = counting_time;

    let known = match opts.background {
        BackgroundMode::Known { rate_counts_per_s } => Some(rate_counts_per_s),
        BackgroundMode::Record => {
            if background_record.is_empty() {
                return Err(Error::IllConditioned(
                    "background and mean intensity are degenerate without a background record or a known rate".into(),
                ));
            }
            None
        }
    };
    let off = usize::from(known.is_none());

    let (c_a, c_b, c_c, w0, q0) = initial_sinusoid(&s, counts, deg >= 2);
    let ib0 = known.unwrap_or_else(|| background_record.iter().sum::<f64>() / background_record.len() as f64 / tc);
    let i00 = (c_a / tc - ib0).max(1e-9 * c_a.abs() / tc).max(1e-12);
    let v0 = ((c_b.hypot(c_c) / tc) / i00).clamp(0.0, 0.99);
    let mut start = Vec::with_capacity(n_par);
    if known.is_none() {
        start.push(ib0.max(0.0));
    }
    start.extend([i00, v0, -c_c.atan2(c_b), w0]);
    if deg >= 2 {
        start.push(q0);
    }
    start.resize(n_par, 0.0);

    let scale_i = (counts.iter().sum::<f64>() / n as f64 / tc).max(1.0);
    let mut lower = vec![0.0; n_par];
    let mut upper = vec![f64::INFINITY; n_par];
    let mut scale = vec![1.0; n_par];
    scale[off] = scale_i;
    if off == 1 {
        scale[0] = scale_i;
    }
    upper[off + 1] = 1.0;
    for k in off + 2..n_par {
        lower[k] = f64::NEG_INFINITY;
    }
    lower[off + 3] = MIN_FREQUENCY;

    let weights: Vec<f64> = counts.iter().map(|c| 1.0 / c.max(1.0).sqrt()).collect();
    let bweights: Vec<f64> = background_record.iter().map(|c| 1.0 / c.max(1.0).sqrt()).collect();
    let residuals = |p: &[f64]| -> Vec<f64> {
        let ib = known.unwrap_or(p[0]);
        let (i0, v) = (p[off], p[off + 1]);
        let coef = &p[off + 2..];
        let mut r: Vec<f64> = s
            .iter()
            .zip(counts)
            .zip(&weights)
            .map(|((&si, &y), &w)| {
                let phi = coef.iter().rev().fold(0.0, |acc, c| acc * si + c);
                (y - tc * (ib + i0 * (1.0 + v * phi.cos()))) * w
            })
            .collect();
        if known.is_none() {
            r.extend(background_record.iter().zip(&bweights).map(|(&y, &w)| (y - tc * ib) * w));
        }
        r
    };
    let problem = LmProblem { residuals: &residuals, lower, upper, scale };
    let sol = levenberg_marquardt(&problem, &start, &LmOptions::default())?;

    // phase polynomial back to raw drive units: s^k = sum_j C(k,j) a^j b^(k-j) x^j
    let np = deg + 1;
    let mut t = DMatrix::zeros(np, np);
    for k in 0..np {
        for j in 0..=k {
            t[(j, k)] = binomial(k, j) * a.powi(j as i32) * b.powi((k - j) as i32);
        }
    }
    let mut full = DMatrix::identity(n_par, n_par);
    full.view_mut((off + 2, off + 2), (np, np)).copy_from(&t);
    let cov = &full * &sol.covariance * full.transpose();
    let coef_norm = nalgebra::DVector::from_column_slice(&sol.params[off + 2..]);
    let coef_raw = &t * coef_norm;

    let mut names: Vec<String> = Vec::new();
    if known.is_none() {
        names.push("background".into());
    }
    names.extend(["mean_intensity".to_string(), "visibility".to_string()]);
    names.extend((0..np).map(|k| format!("phase_c{k}")));

    let n_res = n + if known.is_none() { background_record.len() } else { 0 };
    Ok(FitResult {
        background: known.unwrap_or(sol.params[0]),
        background_sigma: if known.is_some() { 0.0 } else { sol.sigma(0) },
        mean_intensity: sol.params[off],
        mean_intensity_sigma: cov[(off, off)].max(0.0).sqrt(),
        visibility: sol.params[off + 1],
        visibility_sigma: cov[(off + 1, off + 1)].max(0.0).sqrt(),
        phase_coefficients: coef_raw.iter().copied().collect(),
        parameter_names: names,
        covariance: (0..n_par).map(|i| (0..n_par).map(|j| cov[(i, j)]).collect()).collect(),
        chi2: sol.chi2,
        degrees_of_freedom: n_res.saturating_sub(n_par),
        iterations: sol.iterations,
        at_boundary: sol.at_bound[off + 1],
    })
}

/// Fit a recorded or synthetic trace.
pub fn fit_fringes(trace: &CountTrace, opts: &FringeFitOptions) -> Result<FitResult> {
    trace.validate()?;
    let counts: Vec<f64> = trace.counts.iter().map(|&c| c as f64).collect();
    let background: Vec<f64> = trace.background.iter().map(|&c| c as f64).collect();
    fit_fringe_samples(&trace.drive, &counts, trace.counting_time, &background, opts)
}

/// Functional form of a visibility envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SincLaw {
    /// `V0 |sinc(pi (x - c) / Z)|`.
    Tilt,
    /// `V0 |sinc(pi (x - c) / Z) sinc(pi r (x - c) / Z)|` with `r = e_0 / e_D`.
    Mismatch { width_ratio: f64 },
}

impl SincLaw {
    pub fn eval(&self, x: f64, v0: f64, centre: f64, zero: f64) -> f64 {
        let u = std::f64::consts::PI * (x - centre) / zero;
        match *self {
            SincLaw::Tilt => v0 * sinc(u).abs(),
            SincLaw::Mismatch { width_ratio } => v0 * (sinc(u) * sinc(width_ratio * u)).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincFit {
    pub v0: f64,
    pub v0_sigma: f64,
    /// Defect value of maximum visibility (`z_c` for the mismatch law).
    pub centre: f64,
    pub centre_sigma: f64,
    /// Distance from the centre to the first zero.
    pub zero: f64,
    pub zero_sigma: f64,
    pub chi2: f64,
}

/// Least-squares fit of a visibility envelope to `(defect, V)` points.
pub fn fit_sinc(points: &[(f64, f64)], law: SincLaw) -> Result<SincFit> {
    if points.len() < 6 {
        return Err(Error::IllConditioned(format!("{} points; a sinc fit needs at least 6", points.len())));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let vmax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let vmin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let span = pts[pts.len() - 1].0 - pts[0].0;
    if !(span > 0.0) || !(vmax > 0.0) || vmin > 0.95 * vmax {
        return Err(Error::IllConditioned("the points do not span a visible fall of the visibility".into()));
    }
    let x_peak = pts.iter().fold(pts[0], |a, &b| if b.1 > a.1 { b } else { a }).0;

    let sse_at = |c: f64, z: f64| {
        // V0 enters linearly
        let (mut num, mut den) = (0.0, 0.0);
        for &(x, v) in &pts {
            let f = law.eval(x, 1.0, c, z);
            num += f * v;
            den += f * f;
        }
        let v0 = if den > 0.0 { num / den } else { 0.0 };
        let sse: f64 = pts.iter().map(|&(x, v)| (v - law.eval(x, v0, c, z)).powi(2)).sum();
        (sse, v0)
    };
    let mut best = (f64::INFINITY, 0.0, x_peak, span);
    for i in 0..=40 {
        let c = x_peak + span * 0.25 * (i as f64 / 20.0 - 1.0);
        for k in 0..=240 {
            let z = span * 10f64.powf(-2.0 + 2.5 * k as f64 / 240.0);
            let (sse, v0) = sse_at(c, z);
            if sse < best.0 {
                best = (sse, v0, c, z);
            }
        }
    }
    let residuals = |p: &[f64]| -> Vec<f64> { pts.iter().map(|&(x, v)| v - law.eval(x, p[0], p[1], p[2])).collect() };
    let problem = LmProblem {
        residuals: &residuals,
        lower: vec![0.0, f64::NEG_INFINITY, 1e-6 * span],
        upper: vec![f64::INFINITY; 3],
        scale: vec![vmax, span, span],
    };
    let sol = levenberg_marquardt(&problem, &[best.1, best.2, best.3], &LmOptions::default())?;
    let dof = (pts.len() - 3) as f64;
    let s2 = (sol.chi2 / dof).max(0.0);
    Ok(SincFit {
        v0: sol.params[0],
        v0_sigma: sol.sigma(0) * s2.sqrt(),
        centre: sol.params[1],
        centre_sigma: sol.sigma(1) * s2.sqrt(),
        zero: sol.params[2],
        zero_sigma: sol.sigma(2) * s2.sqrt(),
        chi2: sol.chi2,
    })
}

/// `I0 V^2`.
pub fn figure_of_merit(mean_intensity: f64, visibility: f64) -> f64 {
    mean_intensity * visibility * visibility
}

/// Shot-noise phase sensitivity at mid-fringe, `sqrt(I0 + I_B) / (I0 V)` in rad/sqrt(Hz).
pub fn phase_sensitivity(mean_intensity: f64, visibility: f64, background: f64) -> Result<f64> {
    if visibility == 0.0 {
        return Err(Error::ZeroVisibility);
    }
    if !(mean_intensity > 0.0) || !(visibility > 0.0) || background < 0.0 {
        return Err(Error::domain("phase_sensitivity", "need I0 > 0, V > 0 and I_B >= 0"));
    }
    Ok((mean_intensity + background).sqrt() / (mean_intensity * visibility))
}

/// Phase uncertainty after integrating for `seconds`.
pub fn phase_noise(mean_intensity: f64, visibility: f64, background: f64, seconds: f64) -> Result<f64> {
    if !(seconds > 0.0) {
        return Err(Error::domain("phase_noise", "integration time must be positive"));
    }
    Ok(phase_sensitivity(mean_intensity, visibility, background)? / seconds.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::FringeModel;
    use crate::signal::counts::{synthesize_counts, Sweep, SynthesisOptions};
    use proptest::prelude::*;

    fn expected(model: &FringeModel, sweep: &Sweep, tc: f64) -> Vec<f64> {
        sweep.drive.iter().map(|&x| model.rate(sweep.phase(x)) * tc).collect()
    }

    #[test]
    fn noiseless_trace_exact_recovery() {
        let m = FringeModel { mean_intensity: 23710.0, visibility: 0.845, background: 2000.0, phase_offset: 0.4 };
        let sweep = Sweep { drive: (0..200).map(|i| 3.0 + 0.05 * i as f64).collect(), phase_coefficients: vec![0.3, 1.6, 0.07] };
        let y = expected(&m, &sweep, 0.1);
        let bg = vec![200.0; 50];
        let f = fit_fringe_samples(&sweep.drive, &y, 0.1, &bg, &FringeFitOptions::default()).unwrap();
        assert!((f.mean_intensity / 23710.0 - 1.0).abs() < 1e-9, "{f:?}");
        assert!((f.visibility / 0.845 - 1.0).abs() < 1e-9);
        assert!((f.background / 2000.0 - 1.0).abs() < 1e-9);
        assert!((f.phase_coefficients[1] - 1.6).abs() < 1e-7);
        assert!((f.phase_coefficients[2] - 0.07).abs() < 1e-8);
        let dphi = (f.phase(4.0) - sweep.phase(4.0) - 0.4).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(dphi.min(2.0 * std::f64::consts::PI - dphi) < 1e-7);
    }

    #[test]
    fn known_background_mode() {
        let m = FringeModel::new(5000.0, 0.5, 300.0).unwrap();
        let sweep = Sweep::linear(120, 2.0, 0.5);
        let y = expected(&m, &sweep, 0.1);
        let opts = FringeFitOptions { phase_degree: 2, background: BackgroundMode::Known { rate_counts_per_s: 300.0 } };
        let f = fit_fringe_samples(&sweep.drive, &y, 0.1, &[], &opts).unwrap();
        assert!((f.visibility - 0.5).abs() < 1e-9);
        assert_eq!(f.parameter_names.len(), 5);
    }

    #[test]
    fn missing_background_is_degenerate() {
        let sweep = Sweep::linear(50, 2.0, 0.0);
        let y = vec![10.0; 50];
        assert!(matches!(
            fit_fringe_samples(&sweep.drive, &y, 0.1, &[], &FringeFitOptions::default()),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn table_row_statistical_recovery() {
        let m = FringeModel::new(23710.0, 0.845, 2000.0).unwrap();
        let sweep = Sweep::linear(200, 2.5, 0.8);
        let o = SynthesisOptions { seed: 3, background_bins: 100, ..Default::default() };
        let t = synthesize_counts(&m, &sweep, &o).unwrap();
        let f = fit_fringes(&t, &FringeFitOptions::default()).unwrap();
        assert!((f.visibility - 0.845).abs() < 3.0 * f.visibility_sigma, "{} +- {}", f.visibility, f.visibility_sigma);
        assert!(f.visibility_sigma < 0.02);
        assert!((f.mean_intensity - 23710.0).abs() < 3.0 * f.mean_intensity_sigma);
    }

    #[test]
    fn pure_background_has_no_visibility() {
        let m = FringeModel::new(0.0, 0.0, 2000.0).unwrap();
        let sweep = Sweep::linear(200, 2.5, 0.0);
        let t = synthesize_counts(&m, &sweep, &SynthesisOptions { seed: 8, background_bins: 100, ..Default::default() }).unwrap();
        let f = fit_fringes(&t, &FringeFitOptions::default()).unwrap();
        assert!(f.mean_intensity * f.visibility < 2.0 * (2000.0f64 / 0.1 / 200.0).sqrt() * 3.0, "{f:?}");
    }

    #[test]
    fn faint_fringes_do_not_slide_to_zero_frequency() {
        // seed that once drove the frequency towards a slope and never converged
        let m = FringeModel::new(23710.0, 0.0134, 2000.0).unwrap();
        let opts = SynthesisOptions { seed: 39016, background_bins: 200, ..Default::default() };
        let t = synthesize_counts(&m, &Sweep::linear(40, 2.0, 0.0), &opts).unwrap();
        let r = fit_fringes(&t, &FringeFitOptions { phase_degree: 1, ..Default::default() }).unwrap();
        assert!(r.visibility < 0.05, "{}", r.visibility);
        assert!((r.mean_intensity - 23710.0).abs() < 5.0 * r.mean_intensity_sigma);
    }

    #[test]
    fn merit_examples() {
        assert!((figure_of_merit(23710.0, 0.845) - 16930.0).abs() <= 1.0);
        assert!((figure_of_merit(12900.0, 0.805) - 8360.0).abs() <= 5.0);
        assert_eq!(figure_of_merit(100.0, 0.0), 0.0);
    }

    #[test]
    fn sensitivity_convention() {
        let s = phase_sensitivity(23710.0, 0.845, 2000.0).unwrap();
        assert!((s - 8.0e-3).abs() < 0.1e-3, "{s}");
        let a = phase_sensitivity(1000.0, 0.5, 0.0).unwrap();
        let b = phase_sensitivity(4000.0, 0.5, 0.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(matches!(phase_sensitivity(1000.0, 0.0, 0.0), Err(Error::ZeroVisibility)));
        let big = phase_sensitivity(1000.0, 0.5, 1e8).unwrap() / phase_sensitivity(1000.0, 0.5, 4e8).unwrap();
        assert!((big - 0.5).abs() < 1e-3);
    }

    fn mismatch_points(zc: f64, zero: f64, ratio: f64) -> Vec<(f64, f64)> {
        let law = SincLaw::Mismatch { width_ratio: ratio };
        (0..25).map(|i| {
            let z = -8e-3 + 16e-3 * i as f64 / 24.0;
            (z, law.eval(z, 0.6, zc, zero))
        }).collect()
    }

    #[test]
    fn mismatch_centre_recovered() {
        let f = fit_sinc(&mismatch_points(3.5e-3, 6e-3, 0.4), SincLaw::Mismatch { width_ratio: 0.4 }).unwrap();
        assert!((f.centre - 3.5e-3).abs() < 1e-8, "{f:?}");
        assert!((f.v0 - 0.6).abs() < 1e-8);
    }

    #[test]
    fn too_few_or_flat_points_rejected() {
        let pts = mismatch_points(0.0, 6e-3, 0.4);
        assert!(fit_sinc(&pts[..5], SincLaw::Tilt).is_err());
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.8)).collect();
        assert!(matches!(fit_sinc(&flat, SincLaw::Tilt), Err(Error::IllConditioned(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn sinc_fit_is_order_independent(seed in 0u64..1000, scale in 0.2f64..3.0) {
            let mut pts = mismatch_points(1e-3, 5e-3, 0.4);
            for p in &mut pts { p.1 *= scale; }
            let a = fit_sinc(&pts, SincLaw::Tilt).unwrap();
            let mut shuffled = pts.clone();
            let n = shuffled.len();
            for i in 0..n {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % n;
                shuffled.swap(i, j);
            }
            let b = fit_sinc(&shuffled, SincLaw::Tilt).unwrap();
            prop_assert_eq!(a, b);
            let unit: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.1 / scale)).collect();
            let c = fit_sinc(&unit, SincLaw::Tilt).unwrap();
            prop_assert!((a.v0 / c.v0 - scale).abs() < 1e-6 * scale);
        }
    }
}
