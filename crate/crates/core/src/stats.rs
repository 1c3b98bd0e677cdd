//! Sample moments with standard errors.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Mean and variance of a sample with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    /// Standard error of the variance estimate from the fourth central moment:
    /// `Var(s^2) = (m4 - s^4 (n - 3) / (n - 1)) / n`.
    pub se_variance: f64,
}

impl SampleStats {
    fn from_central(n: usize, mean: f64, m2: f64, m4: f64, constant: bool) -> Self {
        if n < 2 {
            return Self {
                n,
                mean,
                variance: 0.0,
                se_mean: f64::INFINITY,
                se_variance: f64::INFINITY,
            };
        }
        if constant {
            return Self {
                n,
                mean,
                variance: 0.0,
                se_mean: 0.0,
                se_variance: 0.0,
            };
        }
        let nf = n as f64;
        let variance = (m2 * nf / (nf - 1.0)).max(0.0);
        let var_of_var = (m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf;
        Self {
            n,
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_variance: var_of_var.max(0.0).sqrt(),
        }
    }

    /// `|mean - target| <= k * se_mean`
    pub fn mean_within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se_mean
    }

    /// `|variance - target| <= k * se_variance`
    pub fn variance_within(&self, target: f64, k: f64) -> bool {
        (self.variance - target).abs() <= k * self.se_variance
    }
}

/// Two-pass statistics of a slice.
pub fn sample_stats(values: &[f64]) -> SampleStats {
    let n = values.len();
    if n == 0 {
        return SampleStats::from_central(0, f64::NAN, 0.0, 0.0, true);
    }
    let first = values[0];
    let constant = values.iter().all(|&v| v == first);
    let mean = if constant {
        first
    } else {
        values.iter().sum::<f64>() / n as f64
    };
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    SampleStats::from_central(n, mean, m2 / n as f64, m4 / n as f64, constant)
}

/// Streaming power sums of `x - shift`, mergeable in a fixed order.
///
/// The shift keeps the raw sums well conditioned when the sample mean is
/// known approximately in advance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSums {
    shift: f64,
    n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
    min: f64,
    max: f64,
}

impl PowerSums {
    pub fn new(shift: f64) -> Self {
        Self {
            shift,
            n: 0,
            s1: 0.0,
            s2: 0.0,
            s3: 0.0,
            s4: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    /// Empty accumulator with the same shift.
    pub fn emptied(&self) -> Self {
        Self::new(self.shift)
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let d = x - self.shift;
        let d2 = d * d;
        self.n += 1;
        self.s1 += d;
        self.s2 += d2;
        self.s3 += d2 * d;
        self.s4 += d2 * d2;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Adds `other` into `self`. Both must share the same shift.
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.shift.to_bits(), other.shift.to_bits());
        self.n += other.n;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn stats(&self) -> SampleStats {
        let n = self.n as usize;
        if n == 0 {
            return SampleStats::from_central(0, f64::NAN, 0.0, 0.0, true);
        }
        let nf = self.n as f64;
        let constant = self.min == self.max;
        if constant {
            return SampleStats::from_central(n, self.min, 0.0, 0.0, true);
        }
        let mu = self.s1 / nf;
        let (e2, e3, e4) = (self.s2 / nf, self.s3 / nf, self.s4 / nf);
        let mu2 = mu * mu;
        let m2 = e2 - mu2;
        let m4 = e4 - 4.0 * mu * e3 + 6.0 * mu2 * e2 - 3.0 * mu2 * mu2;
        SampleStats::from_central(n, mu + self.shift, m2.max(0.0), m4.max(0.0), false)
    }
}

/// Mean of `values` with its standard error.
pub fn mean_with_se(values: &[f64]) -> (f64, f64) {
    let s = sample_stats(values);
    (s.mean, s.se_mean)
}

/// Sample covariance of paired values with the standard error of the
/// estimate, computed from the centred products. Exactly zero when either
/// side is constant.
pub fn covariance_with_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return (0.0, f64::INFINITY);
    }
    let sa = sample_stats(a);
    let sb = sample_stats(b);
    if sa.variance == 0.0 || sb.variance == 0.0 {
        return (0.0, 0.0);
    }
    let products: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - sa.mean) * (y - sb.mean))
        .collect();
    let p = sample_stats(&products);
    (p.mean * n as f64 / (n as f64 - 1.0), p.se_mean)
}

/// Pearson chi-square statistic and its upper-tail p-value.
///
/// `expected` holds bin probabilities; `dof = bins - 1`.
pub fn chi_square_test(observed: &[u64], expected_probs: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pass_matches_known_values() {
        let s = sample_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.se_mean - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        let v = vec![0.1; 1001];
        let s = sample_stats(&v);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.mean, 0.1);
        let mut p = PowerSums::new(0.0);
        v.iter().for_each(|&x| p.push(x));
        assert_eq!(p.stats().variance, 0.0);
    }

    #[test]
    fn power_sums_agree_with_two_pass() {
        let values: Vec<f64> = (0..500)
            .map(|i| ((i * 37) % 101) as f64 * 0.013 + 0.7)
            .collect();
        let direct = sample_stats(&values);
        let mut a = PowerSums::new(0.7);
        let mut b = PowerSums::new(0.7);
        values[..200].iter().for_each(|&x| a.push(x));
        values[200..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let streamed = a.stats();
        assert!((direct.mean - streamed.mean).abs() < 1e-13);
        assert!((direct.variance - streamed.variance).abs() < 1e-13);
        assert!((direct.se_variance - streamed.se_variance).abs() < 1e-12);
    }

    #[test]
    fn covariance_of_constant_is_exactly_zero() {
        let a = vec![3.0; 10];
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(covariance_with_se(&a, &b), (0.0, 0.0));
        let (c, _) = covariance_with_se(&b, &b);
        assert!((c - sample_stats(&b).variance).abs() < 1e-12);
    }

    #[test]
    fn chi_square_of_perfect_fit() {
        let (stat, p) = chi_square_test(&[25, 25, 25, 25], &[0.25; 4]);
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }
}
