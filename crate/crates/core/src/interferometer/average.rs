use crate::physics::{velocity_nodes, VelocityDistribution};

/// Average a velocity-dependent observable over the beam distribution.
pub fn velocity_average<F: FnMut(f64) -> f64>(mut observable: F, dist: &VelocityDistribution) -> f64 {
    velocity_nodes(dist).into_iter().map(|(v, w)| w * observable(v)).sum()
}

/// Average a velocity-dependent curve point by point.
pub fn velocity_average_curve<F: FnMut(f64) -> Vec<f64>>(mut curve: F, dist: &VelocityDistribution) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for (v, w) in velocity_nodes(dist) {
        let c = curve(v);
        if acc.is_empty() {
            acc = vec![0.0; c.len()];
        }
        assert_eq!(c.len(), acc.len(), "curve length must not depend on velocity");
        for (a, x) in acc.iter_mut().zip(c) {
            *a += w * x;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bragg::{off_bragg_probability, GratingConfig};
    use crate::physics::Species;

    #[test]
    fn delta_distribution_is_identity() {
        let d = VelocityDistribution::monochromatic(1060.0);
        assert_eq!(velocity_average(|v| v * v, &d), 1060.0 * 1060.0);
    }

    #[test]
    fn constant_observable_unchanged() {
        let d = VelocityDistribution::with_relative_spread(1060.0, 0.2, 12).unwrap();
        assert!((velocity_average(|_| 0.37, &d) - 0.37).abs() < 1e-15);
        let c = velocity_average_curve(|_| vec![1.0, 2.0], &d);
        assert!((c[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exactness_against_trapezoid() {
        // degree 2n-1 is integrated exactly by an n-node rule
        let d = VelocityDistribution::with_relative_spread(1000.0, 0.1, 4).unwrap();
        let f = |v: f64| {
            let x = v / 1000.0 - 1.0;
            1.0 + 3.0 * x + 5.0 * x.powi(3) - 7.0 * x.powi(4) + 2.0 * x.powi(7)
        };
        let quad = velocity_average(f, &d);
        let brute = trapezoid(f, &d, 200_001);
        assert!(((quad - brute) / brute).abs() < 1e-8, "{quad} {brute}");
    }

    fn trapezoid<F: Fn(f64) -> f64>(f: F, d: &VelocityDistribution, n: usize) -> f64 {
        let (lo, hi) = (d.mean - 6.0 * d.width, d.mean + 6.0 * d.width);
        let h = (hi - lo) / (n - 1) as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let v = lo + h * i as f64;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * (-((v - d.mean) / d.width).powi(2)).exp();
            num += w * f(v);
            den += w;
        }
        num / den
    }

    #[test]
    fn averaged_diffraction_dip_against_fine_grid() {
        let li7 = Species::li7();
        let d = VelocityDistribution::with_relative_spread(1060.0, 0.133, 40).unwrap();
        let g = GratingConfig::new(1, 0.4, std::f64::consts::FRAC_PI_2 / 0.4);
        // exact Bragg for u; slower and faster atoms see a shifted Bragg angle and a different duration
        let tb_u = crate::physics::bragg_angle(&li7, d.mean, 671e-9, 1).unwrap();
        let transmitted = |v: f64| {
            let tb_v = tb_u * d.mean / v;
            let eps = tb_u - tb_v;
            1.0 - off_bragg_probability(&g.at_velocity(d.mean, v), eps, &li7, v, 671e-9).unwrap()
        };
        let quad = velocity_average(transmitted, &d);
        let brute = trapezoid(transmitted, &d, 100_001);
        assert!((quad - brute).abs() < 1e-4, "{quad} {brute}");
    }
}
