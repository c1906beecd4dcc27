//! Small numeric helpers shared across modules.

use statrs::function::erf::erfc;

/// 97.5% quantile of the standard normal.
pub const Z_975: f64 = 1.959_963_984_540_054;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64
}

/// Standard deviation with the `n - 1` divisor; 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = xs.iter().map(|x| (x - m) * (x - m)).collect::<CompensatedSum>().value();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance between two weighted empirical CDFs.
pub fn weighted_ks_distance(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(a.len() + b.len());
    let ta: f64 = wa.iter().sum();
    let tb: f64 = wb.iter().sum();
    pts.extend(a.iter().zip(wa).map(|(&x, &w)| (x, w / ta, 0.0)));
    pts.extend(b.iter().zip(wb).map(|(&x, &w)| (x, 0.0, w / tb)));
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut fa, mut fb, mut d) = (0.0, 0.0, 0.0f64);
    let mut k = 0;
    while k < pts.len() {
        let x = pts[k].0;
        while k < pts.len() && pts[k].0 == x {
            fa += pts[k].1;
            fb += pts[k].2;
            k += 1;
        }
        d = d.max((fa - fb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        // statrs' erfc is accurate to about 1e-11 here
        assert!((normal_cdf(Z_975) - 0.975).abs() < 1e-10);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457).abs() < 1e-10);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(weighted_ks_distance(&a, &[1.0; 3], &a, &[2.0; 3]), 0.0);
        let d = weighted_ks_distance(&[0.0], &[1.0], &[1.0], &[1.0]);
        assert_eq!(d, 1.0);
    }
}
