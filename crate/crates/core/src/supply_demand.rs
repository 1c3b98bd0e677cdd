//! Anticorrelated supply/demand pairs, the density of their ratio, and the
//! excess-demand response functions that identify the price SDE coefficients.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::SupplyDemandError;
use crate::quadrature::gauss_legendre;
use crate::rng::path_rng;
use crate::stats::chi_square_test;

/// Jointly normal demand `D` and supply `S` with a common standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariatePair {
    mu_d: f64,
    mu_s: f64,
    sigma1: f64,
    rho: f64,
}

impl BivariatePair {
    pub fn new(mu_d: f64, mu_s: f64, sigma1: f64, rho: f64) -> Result<Self, SupplyDemandError> {
        if !(mu_s > 0.0) || !mu_s.is_finite() || !mu_d.is_finite() {
            return Err(SupplyDemandError::NonPositiveSupply(mu_s));
        }
        if !(sigma1 >= 0.0) || !sigma1.is_finite() {
            return Err(SupplyDemandError::BadSigma(sigma1));
        }
        if !(-1.0..=0.0).contains(&rho) {
            return Err(if rho.abs() > 1.0 || rho.is_nan() {
                SupplyDemandError::NotPsd
            } else {
                SupplyDemandError::BadCorrelation(rho)
            });
        }
        Ok(Self {
            mu_d,
            mu_s,
            sigma1,
            rho,
        })
    }

    /// Perfectly anticorrelated pair.
    pub fn anticorrelated(mu_d: f64, mu_s: f64, sigma1: f64) -> Result<Self, SupplyDemandError> {
        Self::new(mu_d, mu_s, sigma1, -1.0)
    }

    /// Pair near equilibrium: `mu_d = 1 + delta`, `mu_s = 1 - delta`.
    pub fn near_equilibrium(delta: f64, sigma1: f64) -> Result<Self, SupplyDemandError> {
        Self::anticorrelated(1.0 + delta, 1.0 - delta, sigma1)
    }

    pub fn mu_d(&self) -> f64 {
        self.mu_d
    }

    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Ratio of the means, `mu_d / mu_s`.
    pub fn mean_ratio(&self) -> f64 {
        self.mu_d / self.mu_s
    }

    /// Relative noise `sigma1 / mu_s`.
    fn rel_sigma(&self) -> f64 {
        self.sigma1 / self.mu_s
    }
}

/// `n` draws of `(D, S)`. At `rho = -1` one normal is drawn per pair and
/// mirrored, so `D + S = mu_d + mu_s` holds exactly.
pub fn sample_supply_demand(pair: &BivariatePair, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = path_rng(seed, 0);
    let s1 = pair.sigma1;
    let rho = pair.rho;
    let tail = (1.0 - rho * rho).max(0.0).sqrt();
    (0..n)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let shock = s1 * z1;
            if rho == -1.0 {
                (pair.mu_d + shock, pair.mu_s - shock)
            } else {
                let z2: f64 = StandardNormal.sample(&mut rng);
                (pair.mu_d + shock, pair.mu_s + s1 * (rho * z1 + tail * z2))
            }
        })
        .collect()
}

fn require_anticorrelated(pair: &BivariatePair) -> Result<(), SupplyDemandError> {
    if pair.rho == -1.0 {
        Ok(())
    } else {
        Err(SupplyDemandError::NotAnticorrelated(pair.rho))
    }
}

/// Standardised shock `z` with `D/S = x`, i.e. `z = (x - m) / (s (x + 1))`.
fn shock_of_ratio(x: f64, pair: &BivariatePair) -> f64 {
    (x - pair.mean_ratio()) / (pair.rel_sigma() * (x + 1.0))
}

/// Density of `D/S` for an anticorrelated pair:
/// `(1 + m) / (sqrt(2 pi) s (x + 1)^2) * exp(-(x - m)^2 / (2 s^2 (x + 1)^2))`
/// with `m = mu_d / mu_s` and `s = sigma1 / mu_s`.
pub fn ratio_density_exact(x: f64, pair: &BivariatePair) -> Result<f64, SupplyDemandError> {
    require_anticorrelated(pair)?;
    if x == -1.0 {
        return Err(SupplyDemandError::Singular);
    }
    let m = pair.mean_ratio();
    let s = pair.rel_sigma();
    let xp1 = x + 1.0;
    let u = (x - m) / (s * xp1);
    Ok((1.0 + m) / ((2.0 * PI).sqrt() * s * xp1 * xp1) * (-0.5 * u * u).exp())
}

/// `P(D/S <= x)` for an anticorrelated pair with positive noise.
///
/// The map `x -> (x - m) / (s (x + 1))` is increasing on each side of
/// `x = -1`, so the ratio law is a transformed normal. Mass below `-1` is
/// `1 - Phi(1/s)`.
pub fn ratio_cdf_exact(x: f64, pair: &BivariatePair) -> Result<f64, SupplyDemandError> {
    require_anticorrelated(pair)?;
    let phi = Normal::standard();
    let s = pair.rel_sigma();
    let upper = 1.0 / s;
    if x == -1.0 {
        return Ok(1.0 - phi.cdf(upper));
    }
    let u = shock_of_ratio(x, pair);
    Ok(if x > -1.0 {
        (1.0 - phi.cdf(upper)) + phi.cdf(u)
    } else {
        phi.cdf(u) - phi.cdf(upper)
    })
}

/// Approximate variance of `D/S`: `(sigma1 / mu_s)^2 (mu_d / mu_s + 1)^2`.
pub fn sigma_rq_squared(pair: &BivariatePair) -> f64 {
    let m = pair.mean_ratio();
    pair.rel_sigma().powi(2) * (m + 1.0).powi(2)
}

pub fn sigma_rq(pair: &BivariatePair) -> f64 {
    sigma_rq_squared(pair).sqrt()
}

/// First-order form of [`sigma_rq_squared`] for `mu_d = 1 + delta`,
/// `mu_s = 1 - delta`: `4 sigma1^2 (1 + 4 delta)`.
pub fn sigma_rq_squared_near_equilibrium(sigma1: f64, delta: f64) -> f64 {
    4.0 * sigma1 * sigma1 * (1.0 + 4.0 * delta)
}

/// Normal approximation of the ratio density with mean `mu_d / mu_s` and
/// variance [`sigma_rq_squared`].
pub fn ratio_density_approx(x: f64, pair: &BivariatePair) -> f64 {
    let m = pair.mean_ratio();
    let sd = sigma_rq(pair);
    let u = (x - m) / sd;
    (-0.5 * u * u).exp() / ((2.0 * PI).sqrt() * sd)
}

/// The window `mean_ratio +- k sigma_rq`.
pub fn density_window(pair: &BivariatePair, k: f64) -> (f64, f64) {
    let m = pair.mean_ratio();
    let h = k * sigma_rq(pair);
    (m - h, m + h)
}

/// Integrates `f` over `[lo, hi]`, splitting at the singular point `-1`.
fn integrate_avoiding_pole(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    if lo < -1.0 && hi > -1.0 {
        let left = (-1.0 - lo) / (hi - lo);
        let nl = ((panels as f64 * left).ceil() as usize).max(1);
        let nr = panels.saturating_sub(nl).max(1);
        gauss_legendre(&f, lo, -1.0, nl) + gauss_legendre(&f, -1.0, hi, nr)
    } else {
        gauss_legendre(f, lo, hi, panels)
    }
}

/// Quadrature mass of the exact density on `mean_ratio +- k sigma_rq`.
pub fn exact_mass_on_window(pair: &BivariatePair, k: f64) -> Result<f64, SupplyDemandError> {
    require_anticorrelated(pair)?;
    let (lo, hi) = density_window(pair, k);
    Ok(integrate_avoiding_pole(
        |x| ratio_density_exact(x, pair).unwrap_or(0.0),
        lo,
        hi,
        4000,
    ))
}

/// Total variation distance between the exact and approximate densities,
/// restricted to `mean_ratio +- k sigma_rq`.
pub fn total_variation_on_window(pair: &BivariatePair, k: f64) -> Result<f64, SupplyDemandError> {
    require_anticorrelated(pair)?;
    let (lo, hi) = density_window(pair, k);
    let diff = |x: f64| {
        (ratio_density_exact(x, pair).unwrap_or(0.0) - ratio_density_approx(x, pair)).abs()
    };
    Ok(0.5 * integrate_avoiding_pole(diff, lo, hi, 4000))
}

/// Chi-square comparison of sampled ratios against the exact law.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramTest {
    /// Bin edges of the interior bins; two open tail bins sit outside.
    pub edges: Vec<f64>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub statistic: f64,
    pub p_value: f64,
}

/// Bins `ratios` into `bins - 2` equal cells on `mean_ratio +- k sigma_rq`
/// plus two tails and runs a chi-square test against [`ratio_cdf_exact`].
pub fn ratio_histogram_test(
    ratios: &[f64],
    pair: &BivariatePair,
    bins: usize,
    k: f64,
) -> Result<HistogramTest, SupplyDemandError> {
    require_anticorrelated(pair)?;
    assert!(bins >= 3, "need at least one interior bin");
    let interior = bins - 2;
    let (lo, hi) = density_window(pair, k);
    let width = (hi - lo) / interior as f64;
    let edges: Vec<f64> = (0..=interior).map(|i| lo + width * i as f64).collect();

    let mut observed = vec![0u64; bins];
    for &r in ratios {
        let slot = if r < lo {
            0
        } else if r >= hi {
            bins - 1
        } else {
            1 + (((r - lo) / width) as usize).min(interior - 1)
        };
        observed[slot] += 1;
    }

    let cdf = |x: f64| ratio_cdf_exact(x, pair);
    let mut probs = Vec::with_capacity(bins);
    probs.push(cdf(lo)?);
    for w in edges.windows(2) {
        probs.push(cdf(w[1])? - cdf(w[0])?);
    }
    probs.push(1.0 - cdf(hi)?);
    let total = ratios.len() as f64;
    let (statistic, p_value) = chi_square_test(&observed, &probs);
    Ok(HistogramTest {
        edges,
        observed,
        expected: probs.iter().map(|p| p * total).collect(),
        statistic,
        p_value,
    })
}

/// Excess-demand response `G` in `dP/P = G(D/S) dt + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GKind {
    /// `G(x) = x - 1/x`
    Symmetric,
    /// `G(x) = x - 1`
    Simple,
    /// `G(x) = x - 1`, the `D/S` form used where demand dominates
    TopApprox,
    /// `G(x) = 1 - 1/x`, the `S/D` form used where supply dominates
    BottomApprox,
}

impl GKind {
    pub const ALL: [GKind; 4] = [
        GKind::Symmetric,
        GKind::Simple,
        GKind::TopApprox,
        GKind::BottomApprox,
    ];
}

fn require_positive(x: f64) -> Result<(), SupplyDemandError> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(SupplyDemandError::NonPositiveArgument(x))
    }
}

pub fn g_eval(kind: GKind, x: f64) -> Result<f64, SupplyDemandError> {
    require_positive(x)?;
    Ok(match kind {
        GKind::Symmetric => x - 1.0 / x,
        GKind::Simple | GKind::TopApprox => x - 1.0,
        GKind::BottomApprox => 1.0 - 1.0 / x,
    })
}

pub fn g_prime(kind: GKind, x: f64) -> Result<f64, SupplyDemandError> {
    require_positive(x)?;
    Ok(match kind {
        GKind::Symmetric => 1.0 + 1.0 / (x * x),
        GKind::Simple | GKind::TopApprox => 1.0,
        GKind::BottomApprox => 1.0 / (x * x),
    })
}

/// Drift and diffusion `(a, b)` of `d log P = a dt + b dW` for the ratio
/// `D/S = ratio`.
///
/// `a = G(ratio)` and `b = sigma * ratio * G'(ratio)`, except for the
/// symmetric kind where `b` averages the two orientations:
/// `b = (sigma / 2) (x G'(x) + (1/x) G'(1/x))`.
pub fn drift_diffusion_coeffs(
    kind: GKind,
    ratio: f64,
    sigma: f64,
) -> Result<(f64, f64), SupplyDemandError> {
    let a = g_eval(kind, ratio)?;
    let b = match kind {
        GKind::Symmetric => {
            let inv = 1.0 / ratio;
            0.5 * sigma * (ratio * g_prime(kind, ratio)? + inv * g_prime(kind, inv)?)
        }
        _ => sigma * ratio * g_prime(kind, ratio)?,
    };
    Ok((a, b))
}

/// The three first-order drift forms `D/S - 1`, `1 - S/D` and
/// `(D/S - S/D) / 2`.
pub fn regime_drifts(ratio: f64) -> Result<[f64; 3], SupplyDemandError> {
    require_positive(ratio)?;
    Ok([ratio - 1.0, 1.0 - 1.0 / ratio, 0.5 * (ratio - 1.0 / ratio)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_sampling() {
        let pair = BivariatePair::anticorrelated(1.2, 0.9, 0.1).unwrap();
        for (d, s) in sample_supply_demand(&pair, 1000, 3) {
            assert!(((d - 1.2) + (s - 0.9)).abs() < 1e-15);
        }
        let flat = BivariatePair::anticorrelated(1.2, 0.9, 0.0).unwrap();
        assert!(sample_supply_demand(&flat, 100, 3)
            .iter()
            .all(|&p| p == (1.2, 0.9)));
    }

    #[test]
    fn sample_mean_within_standard_error() {
        let pair = BivariatePair::anticorrelated(1.0, 1.0, 0.05).unwrap();
        let n = 100_000;
        let draws = sample_supply_demand(&pair, n, 11);
        let mean = draws.iter().map(|p| p.0).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 4.0 * 0.05 / (n as f64).sqrt());
    }

    #[test]
    fn partial_correlation_is_psd_and_correlated() {
        let pair = BivariatePair::new(1.0, 1.0, 0.1, -0.5).unwrap();
        let draws = sample_supply_demand(&pair, 50_000, 5);
        let n = draws.len() as f64;
        let cov = draws
            .iter()
            .map(|(d, s)| (d - 1.0) * (s - 1.0))
            .sum::<f64>()
            / n;
        assert!((cov / 0.01 + 0.5).abs() < 0.03, "{cov}");
    }

    #[test]
    fn constructor_errors() {
        assert!(matches!(
            BivariatePair::new(1.0, 0.0, 0.1, -1.0),
            Err(SupplyDemandError::NonPositiveSupply(_))
        ));
        assert!(matches!(
            BivariatePair::new(1.0, 1.0, -0.1, -1.0),
            Err(SupplyDemandError::BadSigma(_))
        ));
        assert!(matches!(
            BivariatePair::new(1.0, 1.0, 0.1, -1.5),
            Err(SupplyDemandError::NotPsd)
        ));
        assert!(matches!(
            BivariatePair::new(1.0, 1.0, 0.1, 0.3),
            Err(SupplyDemandError::BadCorrelation(_))
        ));
    }

    #[test]
    fn density_at_mean_and_pole() {
        let pair = BivariatePair::anticorrelated(1.0, 1.0, 0.05).unwrap();
        let v = ratio_density_exact(1.0, &pair).unwrap();
        assert!((v - 2.0 / ((2.0 * PI).sqrt() * 0.05 * 4.0)).abs() < 1e-12);
        assert!((v - 3.989_422_804_014_327).abs() < 1e-12);
        assert_eq!(
            ratio_density_exact(-1.0, &pair),
            Err(SupplyDemandError::Singular)
        );
        let loose = BivariatePair::new(1.0, 1.0, 0.05, -0.9).unwrap();
        assert!(ratio_density_exact(1.0, &loose).is_err());
    }

    #[test]
    fn cdf_is_consistent_with_density() {
        let pair = BivariatePair::anticorrelated(1.1, 0.95, 0.08).unwrap();
        let (a, b) = (0.9, 1.4);
        let quad = gauss_legendre(|x| ratio_density_exact(x, &pair).unwrap(), a, b, 200);
        let cdf = ratio_cdf_exact(b, &pair).unwrap() - ratio_cdf_exact(a, &pair).unwrap();
        assert!((quad - cdf).abs() < 1e-10, "{quad} {cdf}");
    }

    #[test]
    fn sigma_rq_values() {
        let pair = BivariatePair::anticorrelated(1.0, 1.0, 0.05).unwrap();
        assert!((sigma_rq_squared(&pair) - 0.01).abs() < 1e-15);
        assert_eq!(
            sigma_rq_squared_near_equilibrium(0.05, 0.0),
            4.0 * 0.05 * 0.05
        );
    }

    #[test]
    fn g_properties() {
        assert_eq!(g_eval(GKind::Symmetric, 1.0).unwrap(), 0.0);
        assert_eq!(g_eval(GKind::Symmetric, 2.0).unwrap(), 1.5);
        assert_eq!(g_eval(GKind::Symmetric, 0.5).unwrap(), -1.5);
        assert!((g_eval(GKind::Simple, 1.2).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(g_prime(GKind::Simple, 7.0).unwrap(), 1.0);
        for k in GKind::ALL {
            assert_eq!(g_eval(k, 1.0).unwrap(), 0.0);
            assert!(g_eval(k, 0.0).is_err());
            assert!(g_prime(k, -1.0).is_err());
        }
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(
            drift_diffusion_coeffs(GKind::Simple, 1.0, 0.5).unwrap(),
            (0.0, 0.5)
        );
        assert_eq!(
            drift_diffusion_coeffs(GKind::Symmetric, 1.0, 0.5).unwrap(),
            (0.0, 1.0)
        );
        let (a, b) = drift_diffusion_coeffs(GKind::BottomApprox, 0.5, 0.5).unwrap();
        assert_eq!((a, b), (-1.0, 1.0));
        let (a, b) = drift_diffusion_coeffs(GKind::TopApprox, 1.3, 0.5).unwrap();
        assert!((a - 0.3).abs() < 1e-15 && (b - 0.65).abs() < 1e-15);
        assert!(drift_diffusion_coeffs(GKind::Simple, 0.0, 0.5).is_err());
    }
}
