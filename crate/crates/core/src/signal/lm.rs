//! Box-constrained Levenberg-Marquardt on weighted residuals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when no parameter moves by more than this fraction of its scale.
    pub step_tolerance: f64,
    /// Stop when chi2 decreases by less than this relative amount on two
    /// consecutive steps.
    pub chi2_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 400, step_tolerance: 1e-12, chi2_tolerance: 1e-9, initial_damping: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// `(J^T J)^-1` at the solution (pseudo-inverse when singular).
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub iterations: usize,
    /// Parameters sitting on a box bound.
    pub at_bound: Vec<bool>,
    /// Number of directions dropped from the pseudo-inverse.
    pub rank_deficiency: usize,
}

impl LmSolution {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// A least-squares problem: `residuals(params)` returns weighted residuals
/// `(y - model) / sigma`; `scale[i]` is the typical size of parameter `i`
/// and sets the finite-difference step.
pub struct LmProblem<'a> {
    pub residuals: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub scale: Vec<f64>,
}

fn chi2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn jacobian(p: &LmProblem, x: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(r0.len(), n);
    let mut xp = x.to_vec();
    for k in 0..n {
        let h = 1e-6 * x[k].abs().max(p.scale[k]);
        // one-sided at the bounds
        let (a, b) = (x[k] - h >= p.lower[k], x[k] + h <= p.upper[k]);
        let (lo, hi) = match (a, b) {
            (true, true) => (x[k] - h, x[k] + h),
            (false, _) => (x[k], x[k] + h),
            (true, false) => (x[k] - h, x[k]),
        };
        xp[k] = hi;
        let rh = (p.residuals)(&xp);
        let rl = if lo == x[k] {
            r0.to_vec()
        } else {
            xp[k] = lo;
            (p.residuals)(&xp)
        };
        xp[k] = x[k];
        for i in 0..r0.len() {
            j[(i, k)] = (rh[i] - rl[i]) / (hi - lo);
        }
    }
    j
}

fn pseudo_inverse(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let mut dropped = 0;
    let inv: DVector<f64> = eig.eigenvalues.map(|e| {
        if e > 1e-12 * max && max > 0.0 {
            1.0 / e
        } else {
            dropped += 1;
            0.0
        }
    });
    let q = &eig.eigenvectors;
    (q * DMatrix::from_diagonal(&inv) * q.transpose(), dropped)
}

pub fn levenberg_marquardt(problem: &LmProblem, start: &[f64], opts: &LmOptions) -> Result<LmSolution> {
    let n = start.len();
    if problem.lower.len() != n || problem.upper.len() != n || problem.scale.len() != n {
        return Err(Error::Invalid("bounds and scales must match the parameter count".into()));
    }
    let mut x = start.to_vec();
    clamp(&mut x, &problem.lower, &problem.upper);
    let mut r = (problem.residuals)(&x);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("residuals are not finite at the starting point".into()));
    }
    let mut c = chi2(&r);
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut slow = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let j = jacobian(problem, &x, &r);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let mut g = &jt * DVector::from_column_slice(&r);
        // parameters on a bound that the descent direction pushes outward stay fixed
        let pinned: Vec<bool> = (0..n)
            .map(|k| (x[k] <= problem.lower[k] && g[k] > 0.0) || (x[k] >= problem.upper[k] && g[k] < 0.0))
            .collect();
        let mut improved = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            for k in (0..n).filter(|&k| pinned[k]) {
                a.row_mut(k).fill(0.0);
                a.column_mut(k).fill(0.0);
                a[(k, k)] = 1.0;
                g[k] = 0.0;
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi - s).collect();
            clamp(&mut trial, &problem.lower, &problem.upper);
            let rt = (problem.residuals)(&trial);
            let ct = chi2(&rt);
            if ct.is_finite() && ct <= c {
                let moved = (0..n).map(|k| (trial[k] - x[k]).abs() / x[k].abs().max(problem.scale[k])).fold(0.0, f64::max);
                let drop = (c - ct) / c.max(f64::MIN_POSITIVE);
                x = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                slow = if drop < opts.chi2_tolerance { slow + 1 } else { 0 };
                if moved < opts.step_tolerance || slow >= 2 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved || converged || c == 0.0 {
            // no downhill step left at any damping: a minimum within numerical precision
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations, chi2: c });
    }
    let j = jacobian(problem, &x, &r);
    let (covariance, rank_deficiency) = pseudo_inverse(&(j.transpose() * &j));
    let at_bound = (0..n).map(|k| x[k] <= problem.lower[k] || x[k] >= problem.upper[k]).collect();
    Ok(LmSolution { params: x, covariance, chi2: c, iterations, at_bound, rank_deficiency })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_recovered() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp() + 0.5).collect();
        let f = |p: &[f64]| t.iter().zip(&y).map(|(t, y)| y - p[0] * (-p[1] * t).exp() - p[2]).collect();
        let prob = LmProblem { residuals: &f, lower: vec![0.0; 3], upper: vec![10.0; 3], scale: vec![1.0; 3] };
        let s = levenberg_marquardt(&prob, &[1.0, 0.2, 0.0], &LmOptions::default()).unwrap();
        assert!((s.params[0] - 3.0).abs() < 1e-9 && (s.params[1] - 0.7).abs() < 1e-9 && (s.params[2] - 0.5).abs() < 1e-9);
        assert!(s.at_bound.iter().all(|b| !b));
    }

    #[test]
    fn linear_covariance_matches_normal_equations() {
        // y = a + b x with unit sigmas: cov = (X^T X)^-1
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.1, 2.9, 5.2, 6.8];
        let f = |p: &[f64]| xs.iter().zip(&ys).map(|(x, y)| y - p[0] - p[1] * x).collect();
        let prob = LmProblem { residuals: &f, lower: vec![-100.0; 2], upper: vec![100.0; 2], scale: vec![1.0; 2] };
        let s = levenberg_marquardt(&prob, &[0.0, 0.0], &LmOptions::default()).unwrap();
        let (sx, sxx, n) = (6.0, 14.0, 4.0);
        let det = n * sxx - sx * sx;
        assert!((s.covariance[(0, 0)] - sxx / det).abs() < 1e-6);
        assert!((s.covariance[(1, 1)] - n / det).abs() < 1e-6);
        assert!((s.covariance[(0, 1)] + sx / det).abs() < 1e-6);
    }

    #[test]
    fn bound_is_reported() {
        let f = |p: &[f64]| vec![p[0] + 1.0];
        let prob = LmProblem { residuals: &f, lower: vec![0.0], upper: vec![1.0], scale: vec![1.0] };
        let s = levenberg_marquardt(&prob, &[0.5], &LmOptions::default()).unwrap();
        assert_eq!(s.params[0], 0.0);
        assert!(s.at_bound[0]);
    }
}
